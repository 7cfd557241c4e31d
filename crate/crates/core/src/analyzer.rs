//! Deterministic text analysis for lexical indexing and text encoders.

use std::collections::HashSet;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// English stopword list shipped with the crate so lexical runs are
/// reproducible across builds.
const STOPWORDS_EN: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalyzerMode {
    /// Lowercase, split on whitespace, keep everything else.
    WhitespaceLower,
    /// Lowercase, split on non-alphanumeric, drop stopwords, Porter-stem.
    EnglishPorter,
}

impl std::fmt::Display for AnalyzerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AnalyzerMode::WhitespaceLower => write!(f, "whitespace-lower"),
            AnalyzerMode::EnglishPorter => write!(f, "english-porter"),
        }
    }
}

impl std::str::FromStr for AnalyzerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "whitespace-lower" => Ok(AnalyzerMode::WhitespaceLower),
            "english-porter" => Ok(AnalyzerMode::EnglishPorter),
            other => Err(Error::Config(format!(
                "unknown analyzer '{other}' (expected 'whitespace-lower' or 'english-porter')"
            ))),
        }
    }
}

/// Turns text into a token sequence. Same input always yields the same
/// sequence, which keeps index bytes a pure function of the corpus.
pub struct Analyzer {
    mode: AnalyzerMode,
    stopwords: HashSet<&'static str>,
    stemmer: Option<Stemmer>,
}

impl Analyzer {
    pub fn new(mode: AnalyzerMode) -> Self {
        match mode {
            AnalyzerMode::WhitespaceLower => Analyzer {
                mode,
                stopwords: HashSet::new(),
                stemmer: None,
            },
            AnalyzerMode::EnglishPorter => Analyzer {
                mode,
                stopwords: STOPWORDS_EN.lines().filter(|l| !l.is_empty()).collect(),
                stemmer: Some(Stemmer::create(Algorithm::English)),
            },
        }
    }

    pub fn mode(&self) -> AnalyzerMode {
        self.mode
    }

    pub fn analyze(&self, text: &str) -> Vec<String> {
        match self.mode {
            AnalyzerMode::WhitespaceLower => text
                .split_whitespace()
                .map(|t| t.to_lowercase())
                .collect(),
            AnalyzerMode::EnglishPorter => {
                let lower = text.to_lowercase();
                lower
                    .split(|c: char| !c.is_alphanumeric())
                    .filter(|t| !t.is_empty())
                    .filter(|t| !self.stopwords.contains(t))
                    .map(|t| {
                        self.stemmer
                            .as_ref()
                            .expect("english-porter analyzer has a stemmer")
                            .stem(t)
                            .into_owned()
                    })
                    .collect()
            }
        }
    }
}
