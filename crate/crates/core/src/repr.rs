//! Sparse term-weight representations and the encoders that build them.
//!
//! A representation is a sparse map from token to a strictly positive weight;
//! zero-weight tokens are never stored, so "sparsity" is simply the number of
//! stored entries. Two families of encoders are provided:
//!
//! * vocabulary-pooling encoders ([`sparta_term_weights`],
//!   [`splade_term_weights`]) that reduce dense score matrices over the whole
//!   vocabulary down to a sparse vector, and
//! * lexical encoders ([`binary_query_weights`], [`tf_term_weights`]) that
//!   weight only the tokens present in the input.
//!
//! [`strip_expansion_tokens`] removes entries for tokens outside a reference
//! token set, which isolates the contribution of expansion terms.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};

/// An ordered token vocabulary. Token index is stable for the lifetime of the
/// value and doubles as the row index of score/embedding matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary from an ordered token list. Tokens must be unique.
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let mut lookup = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if lookup.insert(tok.clone(), i as u32).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate vocabulary token '{tok}'"
                )));
            }
        }
        Ok(Vocabulary { tokens, lookup })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.lookup.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Sparse token -> weight map. Every stored weight is finite and > 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TermWeightVector {
    entries: BTreeMap<String, f64>,
}

impl TermWeightVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from (token, weight) pairs, validating every weight.
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (tok, w) in entries {
            let tok = tok.into();
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "weight for token '{tok}' must be finite and positive, got {w}"
                )));
            }
            if map.insert(tok.clone(), w).is_some() {
                return Err(Error::InvalidInput(format!("duplicate token '{tok}'")));
            }
        }
        Ok(TermWeightVector { entries: map })
    }

    /// Inserts a weight, silently dropping non-positive values.
    pub fn insert_positive(&mut self, token: impl Into<String>, weight: f64) {
        if weight > 0.0 && weight.is_finite() {
            self.entries.insert(token.into(), weight);
        }
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    pub fn dot(&self, other: &TermWeightVector) -> f64 {
        // Iterate the smaller side.
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .iter()
            .filter_map(|(t, w)| large.get(t).map(|v| w * v))
            .sum()
    }
}

/// Sparse token -> integer impact map; every impact is >= 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuantizedWeights {
    entries: BTreeMap<String, u32>,
}

impl QuantizedWeights {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (tok, w) in entries {
            let tok = tok.into();
            if w == 0 {
                return Err(Error::InvalidInput(format!(
                    "impact for token '{tok}' must be >= 1"
                )));
            }
            if map.insert(tok.clone(), w).is_some() {
                return Err(Error::InvalidInput(format!("duplicate token '{tok}'")));
            }
        }
        Ok(QuantizedWeights { entries: map })
    }

    pub fn insert(&mut self, token: impl Into<String>, impact: u32) {
        debug_assert!(impact >= 1);
        self.entries.insert(token.into(), impact);
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.entries.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn entries(&self) -> &BTreeMap<String, u32> {
        &self.entries
    }

    /// Integer dot product over the shared tokens.
    pub fn dot(&self, other: &QuantizedWeights) -> u64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .iter()
            .filter_map(|(t, w)| large.get(t).map(|v| w as u64 * v as u64))
            .sum()
    }
}

/// Dense row-major real matrix (rows x dim), all values finite.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || dim == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be >= 1, got {rows}x{dim}"
            )));
        }
        if values.len() != rows * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} values for a {rows}x{dim} matrix, got {}",
                rows * dim,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix contains non-finite values".into()));
        }
        Ok(EmbeddingMatrix { rows, dim, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.dim..(r + 1) * self.dim]
    }
}

/// Dense vocab_size x passage_len matrix of token-prediction scores.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenScoreMatrix {
    vocab_size: usize,
    passage_len: usize,
    logits: Vec<f64>,
}

impl TokenScoreMatrix {
    pub fn new(vocab_size: usize, passage_len: usize, logits: Vec<f64>) -> Result<Self> {
        if vocab_size == 0 || passage_len == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be >= 1, got {vocab_size}x{passage_len}"
            )));
        }
        if logits.len() != vocab_size * passage_len {
            return Err(Error::InvalidInput(format!(
                "expected {} values for a {vocab_size}x{passage_len} matrix, got {}",
                vocab_size * passage_len,
                logits.len()
            )));
        }
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("logits contain non-finite values".into()));
        }
        Ok(TokenScoreMatrix {
            vocab_size,
            passage_len,
            logits,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn passage_len(&self) -> usize {
        self.passage_len
    }

    pub fn get(&self, token: usize, pos: usize) -> f64 {
        self.logits[token * self.passage_len + pos]
    }
}

/// Inference-time parameters for the max-dot-product encoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpartaParams {
    /// Additive bias applied to the matching score before the ReLU.
    pub bias: f64,
}

impl Default for SpartaParams {
    fn default() -> Self {
        SpartaParams { bias: 0.0 }
    }
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Builds a term-weight vector by matching every vocabulary token against all
/// passage token embeddings.
///
/// For vocabulary token i with input embedding e_i and passage embeddings
/// s_1..s_l, the matching score is y_i = max_j dot(e_i, s_j) and the weight is
/// ln(ReLU(y_i + bias) + 1). Zero weights are omitted.
pub fn sparta_term_weights(
    vocab: &Vocabulary,
    input_embeds: &EmbeddingMatrix,
    passage_embeds: &EmbeddingMatrix,
    params: &SpartaParams,
) -> Result<TermWeightVector> {
    if !params.bias.is_finite() {
        return Err(Error::InvalidInput("bias must be finite".into()));
    }
    if input_embeds.dim() != passage_embeds.dim() {
        return Err(Error::InvalidInput(format!(
            "embedding dimensions disagree: {} vs {}",
            input_embeds.dim(),
            passage_embeds.dim()
        )));
    }
    if input_embeds.rows() != vocab.len() {
        return Err(Error::InvalidInput(format!(
            "input embedding rows ({}) must match vocabulary size ({})",
            input_embeds.rows(),
            vocab.len()
        )));
    }

    let mut out = TermWeightVector::new();
    for i in 0..vocab.len() {
        let e = input_embeds.row(i);
        let mut best = f64::NEG_INFINITY;
        for j in 0..passage_embeds.rows() {
            let s = passage_embeds.row(j);
            let dot: f64 = e.iter().zip(s).map(|(a, b)| a * b).sum();
            if dot > best {
                best = dot;
            }
        }
        let w = (relu(best + params.bias) + 1.0).ln();
        if w > 0.0 {
            out.insert_positive(vocab.token(i as u32).unwrap(), w);
        }
    }
    Ok(out)
}

/// Builds a term-weight vector from token-prediction logits by max-pooling
/// ln(1 + ReLU(w_ij)) over the passage positions. Zero weights are omitted.
pub fn splade_term_weights(vocab: &Vocabulary, logits: &TokenScoreMatrix) -> Result<TermWeightVector> {
    if logits.vocab_size() != vocab.len() {
        return Err(Error::InvalidInput(format!(
            "logit rows ({}) must match vocabulary size ({})",
            logits.vocab_size(),
            vocab.len()
        )));
    }

    let mut out = TermWeightVector::new();
    for i in 0..vocab.len() {
        let mut best = 0.0f64;
        for j in 0..logits.passage_len() {
            let w = (1.0 + relu(logits.get(i, j))).ln();
            if w > best {
                best = w;
            }
        }
        if best > 0.0 {
            out.insert_positive(vocab.token(i as u32).unwrap(), best);
        }
    }
    Ok(out)
}

/// Weights each distinct token with exactly 1.0; duplicates collapse.
pub fn binary_query_weights<I, S>(tokens: I) -> TermWeightVector
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut out = TermWeightVector::new();
    for tok in tokens {
        out.insert_positive(tok, 1.0);
    }
    out
}

/// Weights each token with its raw occurrence count.
pub fn tf_term_weights<I, S>(tokens: I) -> TermWeightVector
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for tok in tokens {
        *counts.entry(tok.into()).or_insert(0) += 1;
    }
    let mut out = TermWeightVector::new();
    for (tok, c) in counts {
        out.insert_positive(tok, c as f64);
    }
    out
}

/// Drops every entry whose token is not in `original_tokens`; surviving
/// weights are unchanged.
pub fn strip_expansion_tokens(
    rep: &TermWeightVector,
    original_tokens: &HashSet<String>,
) -> TermWeightVector {
    let mut out = TermWeightVector::new();
    for (tok, w) in rep.iter() {
        if original_tokens.contains(tok) {
            out.insert_positive(tok, w);
        }
    }
    out
}

/// Same filter over quantized representations.
pub fn strip_expansion_impacts(
    rep: &QuantizedWeights,
    original_tokens: &HashSet<String>,
) -> QuantizedWeights {
    let mut out = QuantizedWeights::new();
    for (tok, w) in rep.iter() {
        if original_tokens.contains(tok) {
            out.insert(tok, w);
        }
    }
    out
}
