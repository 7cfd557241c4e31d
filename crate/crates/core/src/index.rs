//! Inverted impact index: posting lists of integer impacts plus the lexical
//! statistics BM25 needs, with a deterministic on-disk segment format.
//!
//! Determinism rules: document ordinals are assigned in ascending
//! lexicographic order of the external doc id and vocabulary slots in
//! ascending token order, so the persisted bytes are a pure function of the
//! corpus content and the build configuration, never of input order.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analyzer::Analyzer;
use crate::error::{Error, Result};
use crate::repr::{QuantizedWeights, Vocabulary};

/// Magic/version header of `postings.bin`.
pub const SEGMENT_MAGIC: &[u8; 5] = b"SPIX1";

/// One (document, impact) pair in a posting list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    /// Internal document ordinal.
    pub doc: u32,
    /// Stored impact, always >= 1.
    pub impact: u32,
}

/// What the impacts in a segment mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKind {
    /// Impacts are quantized model term weights.
    Impact,
    /// Impacts are raw term frequencies from an analyzer.
    Lexical,
}

#[derive(Debug, PartialEq)]
pub struct ImpactIndex {
    kind: IndexKind,
    vocab: Vocabulary,
    /// One posting list per vocabulary slot, sorted by doc ordinal.
    postings: Vec<Vec<Posting>>,
    /// Ordinal -> external document id, ascending.
    doc_ids: Vec<String>,
    /// Ordinal -> document length in tokens (entry count for impact builds).
    doc_lengths: Vec<u32>,
    total_tokens: u64,
    /// Build configuration echo, persisted into meta.json.
    config: BTreeMap<String, String>,
}

impl ImpactIndex {
    pub fn kind(&self) -> IndexKind {
        self.kind
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn doc_id(&self, ordinal: u32) -> &str {
        &self.doc_ids[ordinal as usize]
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_length(&self, ordinal: u32) -> u32 {
        self.doc_lengths[ordinal as usize]
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Mean document length; 0.0 for a corpus of empty documents.
    pub fn avg_doc_length(&self) -> f64 {
        if self.doc_ids.is_empty() {
            0.0
        } else {
            self.total_tokens as f64 / self.doc_ids.len() as f64
        }
    }

    pub fn postings(&self, token: &str) -> Option<&[Posting]> {
        self.vocab
            .id(token)
            .map(|id| self.postings[id as usize].as_slice())
    }

    /// Document frequency of a token.
    pub fn doc_freq(&self, token: &str) -> usize {
        self.postings(token).map_or(0, <[Posting]>::len)
    }

    pub fn num_postings(&self) -> usize {
        self.postings.iter().map(Vec::len).sum()
    }

    pub fn config(&self) -> &BTreeMap<String, String> {
        &self.config
    }
}

/// Builds an impact index from (doc id, quantized weights) pairs.
///
/// Doc ids must be unique; ordinals are assigned by ascending doc id no
/// matter the input order. Document length is recorded as the entry count.
pub fn build_impact_index<I>(docs: I, config: BTreeMap<String, String>) -> Result<ImpactIndex>
where
    I: IntoIterator<Item = (String, QuantizedWeights)>,
{
    let mut buffered: Vec<(String, QuantizedWeights)> = docs.into_iter().collect();
    if buffered.is_empty() {
        return Err(Error::Data("empty corpus".into()));
    }
    buffered.sort_by(|a, b| a.0.cmp(&b.0));
    for pair in buffered.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::Data(format!("duplicate doc id '{}'", pair[0].0)));
        }
    }

    let mut token_postings: BTreeMap<&str, Vec<Posting>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(buffered.len());
    let mut total_tokens = 0u64;
    for (ordinal, (_, weights)) in buffered.iter().enumerate() {
        doc_lengths.push(weights.len() as u32);
        total_tokens += weights.len() as u64;
        for (tok, impact) in weights.iter() {
            token_postings.entry(tok).or_default().push(Posting {
                doc: ordinal as u32,
                impact,
            });
        }
    }

    let vocab = Vocabulary::new(token_postings.keys().map(|t| t.to_string()))?;
    let postings: Vec<Vec<Posting>> = token_postings.into_values().collect();
    let doc_ids: Vec<String> = buffered.into_iter().map(|(id, _)| id).collect();

    Ok(ImpactIndex {
        kind: IndexKind::Impact,
        vocab,
        postings,
        doc_ids,
        doc_lengths,
        total_tokens,
        config,
    })
}

/// A raw corpus document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusDoc {
    pub id: String,
    pub title: String,
    pub text: String,
}

/// Builds a lexical index: title and text are concatenated with equal
/// importance, analyzed, and raw term frequencies stored as impacts.
/// Document length is the analyzed token count.
pub fn build_lexical_index<I>(
    corpus: I,
    analyzer: &Analyzer,
    mut config: BTreeMap<String, String>,
) -> Result<ImpactIndex>
where
    I: IntoIterator<Item = CorpusDoc>,
{
    config.insert("analyzer".into(), analyzer.mode().to_string());

    let mut buffered: Vec<(String, u32, QuantizedWeights)> = Vec::new();
    for doc in corpus {
        let combined = if doc.title.is_empty() {
            doc.text
        } else {
            format!("{} {}", doc.title, doc.text)
        };
        let tokens = analyzer.analyze(&combined);
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for t in &tokens {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
        let mut weights = QuantizedWeights::new();
        for (t, c) in counts {
            weights.insert(t, c);
        }
        buffered.push((doc.id, tokens.len() as u32, weights));
    }
    if buffered.is_empty() {
        return Err(Error::Data("empty corpus".into()));
    }
    buffered.sort_by(|a, b| a.0.cmp(&b.0));
    for pair in buffered.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::Data(format!("duplicate doc id '{}'", pair[0].0)));
        }
    }

    let mut token_postings: BTreeMap<&str, Vec<Posting>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(buffered.len());
    let mut total_tokens = 0u64;
    for (ordinal, (_, dl, weights)) in buffered.iter().enumerate() {
        doc_lengths.push(*dl);
        total_tokens += *dl as u64;
        for (tok, impact) in weights.iter() {
            token_postings.entry(tok).or_default().push(Posting {
                doc: ordinal as u32,
                impact,
            });
        }
    }

    let vocab = Vocabulary::new(token_postings.keys().map(|t| t.to_string()))?;
    let postings: Vec<Vec<Posting>> = token_postings.into_values().collect();
    let doc_ids: Vec<String> = buffered.into_iter().map(|(id, _, _)| id).collect();

    Ok(ImpactIndex {
        kind: IndexKind::Lexical,
        vocab,
        postings,
        doc_ids,
        doc_lengths,
        total_tokens,
        config,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentMeta {
    format: String,
    kind: IndexKind,
    n_docs: usize,
    total_tokens: u64,
    avgdl: f64,
    vocab_size: usize,
    n_postings: usize,
    config: BTreeMap<String, String>,
}

/// Persists the index as a segment directory: `meta.json` (stats and config
/// echo), `docs.tsv` (ordinal, external id, doc length) and `postings.bin`
/// (magic "SPIX1", then per token a length-prefixed token string and posting
/// array, all integers little-endian u32).
pub fn write_segment(index: &ImpactIndex, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let meta = SegmentMeta {
        format: String::from_utf8_lossy(SEGMENT_MAGIC).into_owned(),
        kind: index.kind,
        n_docs: index.num_docs(),
        total_tokens: index.total_tokens,
        avgdl: index.avg_doc_length(),
        vocab_size: index.vocab.len(),
        n_postings: index.num_postings(),
        config: index.config.clone(),
    };
    let mut meta_json = serde_json::to_string_pretty(&meta)?;
    meta_json.push('\n');
    fs::write(dir.join("meta.json"), meta_json)?;

    let mut docs = BufWriter::new(fs::File::create(dir.join("docs.tsv"))?);
    for (ordinal, id) in index.doc_ids.iter().enumerate() {
        writeln!(docs, "{ordinal}\t{id}\t{}", index.doc_lengths[ordinal])?;
    }
    docs.flush()?;

    let mut bin = BufWriter::new(fs::File::create(dir.join("postings.bin"))?);
    bin.write_all(SEGMENT_MAGIC)?;
    bin.write_all(&(index.vocab.len() as u32).to_le_bytes())?;
    for (slot, token) in index.vocab.tokens().iter().enumerate() {
        let bytes = token.as_bytes();
        bin.write_all(&(bytes.len() as u32).to_le_bytes())?;
        bin.write_all(bytes)?;
        let list = &index.postings[slot];
        bin.write_all(&(list.len() as u32).to_le_bytes())?;
        for p in list {
            bin.write_all(&p.doc.to_le_bytes())?;
            bin.write_all(&p.impact.to_le_bytes())?;
        }
    }
    bin.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::SegmentLoad(format!("truncated postings.bin while reading {what}")))?;
    Ok(u32::from_le_bytes(buf))
}

/// Loads a segment directory written by [`write_segment`].
pub fn read_segment(dir: &Path) -> Result<ImpactIndex> {
    let meta_path = dir.join("meta.json");
    let meta: SegmentMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)
        .map_err(|e| Error::SegmentLoad(format!("bad meta.json: {e}")))?;
    if meta.format.as_bytes() != SEGMENT_MAGIC {
        return Err(Error::SegmentLoad(format!(
            "unsupported segment format '{}'",
            meta.format
        )));
    }

    let docs_path = dir.join("docs.tsv");
    let mut doc_ids = Vec::with_capacity(meta.n_docs);
    let mut doc_lengths = Vec::with_capacity(meta.n_docs);
    for (lineno, line) in BufReader::new(fs::File::open(&docs_path)?).lines().enumerate() {
        let line = line?;
        let mut parts = line.split('\t');
        let (ord, id, dl) = match (parts.next(), parts.next(), parts.next()) {
            (Some(o), Some(i), Some(d)) => (o, i, d),
            _ => {
                return Err(Error::SegmentLoad(format!(
                    "docs.tsv line {}: expected 3 tab-separated fields",
                    lineno + 1
                )))
            }
        };
        let ord: usize = ord
            .parse()
            .map_err(|_| Error::SegmentLoad(format!("docs.tsv line {}: bad ordinal", lineno + 1)))?;
        if ord != doc_ids.len() {
            return Err(Error::SegmentLoad(format!(
                "docs.tsv line {}: ordinal {} out of sequence",
                lineno + 1,
                ord
            )));
        }
        doc_ids.push(id.to_string());
        doc_lengths.push(dl.parse().map_err(|_| {
            Error::SegmentLoad(format!("docs.tsv line {}: bad doc length", lineno + 1))
        })?);
    }
    if doc_ids.len() != meta.n_docs {
        return Err(Error::SegmentLoad(format!(
            "meta.json says {} docs, docs.tsv has {}",
            meta.n_docs,
            doc_ids.len()
        )));
    }

    let mut bin = BufReader::new(fs::File::open(dir.join("postings.bin"))?);
    let mut magic = [0u8; 5];
    bin.read_exact(&mut magic)
        .map_err(|_| Error::SegmentLoad("truncated postings.bin: missing magic".into()))?;
    if &magic != SEGMENT_MAGIC {
        return Err(Error::SegmentLoad(format!(
            "bad postings.bin magic {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let n_tokens = read_u32(&mut bin, "token count")? as usize;
    if n_tokens != meta.vocab_size {
        return Err(Error::SegmentLoad(format!(
            "meta.json says {} tokens, postings.bin has {}",
            meta.vocab_size, n_tokens
        )));
    }
    let mut tokens = Vec::with_capacity(n_tokens);
    let mut postings = Vec::with_capacity(n_tokens);
    for _ in 0..n_tokens {
        let tok_len = read_u32(&mut bin, "token length")? as usize;
        let mut tok = vec![0u8; tok_len];
        bin.read_exact(&mut tok)
            .map_err(|_| Error::SegmentLoad("truncated postings.bin in token".into()))?;
        let tok = String::from_utf8(tok)
            .map_err(|_| Error::SegmentLoad("token is not valid UTF-8".into()))?;
        let n_postings = read_u32(&mut bin, "posting count")? as usize;
        let mut list = Vec::with_capacity(n_postings);
        let mut prev: Option<u32> = None;
        for _ in 0..n_postings {
            let doc = read_u32(&mut bin, "doc ordinal")?;
            let impact = read_u32(&mut bin, "impact")?;
            if doc as usize >= doc_ids.len() {
                return Err(Error::SegmentLoad(format!(
                    "posting for '{tok}' references ordinal {doc} >= {}",
                    doc_ids.len()
                )));
            }
            if impact == 0 {
                return Err(Error::SegmentLoad(format!("zero impact for '{tok}'")));
            }
            if prev.is_some_and(|p| p >= doc) {
                return Err(Error::SegmentLoad(format!(
                    "posting list for '{tok}' not strictly increasing"
                )));
            }
            prev = Some(doc);
            list.push(Posting { doc, impact });
        }
        tokens.push(tok);
        postings.push(list);
    }
    let mut trailing = [0u8; 1];
    if bin.read(&mut trailing)? != 0 {
        return Err(Error::SegmentLoad("trailing bytes in postings.bin".into()));
    }

    let index = ImpactIndex {
        kind: meta.kind,
        vocab: Vocabulary::new(tokens)?,
        postings,
        doc_ids,
        doc_lengths,
        total_tokens: meta.total_tokens,
        config: meta.config,
    };
    if index.num_postings() != meta.n_postings {
        return Err(Error::SegmentLoad(format!(
            "meta.json says {} postings, postings.bin has {}",
            meta.n_postings,
            index.num_postings()
        )));
    }
    Ok(index)
}

/// Total size in bytes of the segment files; feeds the Pareto report.
pub fn segment_size_bytes(dir: &Path) -> Result<u64> {
    let mut total = 0;
    for name in ["meta.json", "docs.tsv", "postings.bin"] {
        total += fs::metadata(dir.join(name))?.len();
    }
    Ok(total)
}
