//! Readers and writers for the on-disk exchange formats: BEIR-style corpora,
//! queries and qrels, term-weight vector files, expansion files, and
//! TREC-format run files.
//!
//! Readers stream line by line so multi-million-document corpora never fully
//! reside in memory, and fail loudly with the offending line number on
//! malformed input.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::index::CorpusDoc;
use crate::repr::{QuantizedWeights, TermWeightVector};
use crate::search::RankedList;

/// A query: id plus raw text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub text: String,
}

/// Relevance judgments: (query id, doc id) -> grade >= 0.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Qrels {
    grades: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts one judgment; duplicate (query, doc) pairs are an error.
    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) -> Result<()> {
        let per_query = self.grades.entry(query_id.to_string()).or_default();
        if per_query.insert(doc_id.to_string(), grade).is_some() {
            return Err(Error::Data(format!(
                "duplicate qrels pair ({query_id}, {doc_id})"
            )));
        }
        Ok(())
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> u32 {
        self.grades
            .get(query_id)
            .and_then(|m| m.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    pub fn query_grades(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.grades.get(query_id)
    }

    /// Query ids in ascending order.
    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.grades.keys().map(String::as_str)
    }

    pub fn num_queries(&self) -> usize {
        self.grades.len()
    }

    /// True when the query has at least one doc with grade > 0.
    pub fn has_relevant(&self, query_id: &str) -> bool {
        self.grades
            .get(query_id)
            .is_some_and(|m| m.values().any(|&g| g > 0))
    }
}

/// One parsed line of a TREC run file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub query_id: String,
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = std::io::Result<String>>> {
    let file = File::open(path).map_err(|e| Error::parse_file(path, format!("cannot open: {e}")))?;
    Ok(BufReader::new(file).lines())
}

#[derive(Deserialize)]
struct CorpusLine {
    _id: String,
    #[serde(default)]
    title: String,
    text: String,
}

#[derive(Deserialize)]
struct QueryLine {
    _id: String,
    text: String,
}

/// Streams a BEIR corpus file (JSON Lines with `_id`, optional `title`,
/// `text`). Duplicate-id detection happens in [`read_corpus`].
pub fn stream_corpus(path: &Path) -> Result<impl Iterator<Item = Result<CorpusDoc>>> {
    let path_buf = path.to_path_buf();
    let lines = open_lines(path)?;
    Ok(lines.enumerate().filter_map(move |(i, line)| {
        let lineno = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        };
        if line.trim().is_empty() {
            return None;
        }
        match serde_json::from_str::<CorpusLine>(&line) {
            Ok(doc) => Some(Ok(CorpusDoc {
                id: doc._id,
                title: doc.title,
                text: doc.text,
            })),
            Err(e) => Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        }
    }))
}

/// Reads a whole corpus, enforcing unique ids.
pub fn read_corpus(path: &Path) -> Result<Vec<CorpusDoc>> {
    let mut seen = std::collections::HashSet::new();
    let mut docs = Vec::new();
    for doc in stream_corpus(path)? {
        let doc = doc?;
        if !seen.insert(doc.id.clone()) {
            return Err(Error::Data(format!("duplicate doc id '{}'", doc.id)));
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Reads a BEIR queries file (JSON Lines with `_id`, `text`).
pub fn read_queries(path: &Path) -> Result<Vec<Query>> {
    let mut seen = std::collections::HashSet::new();
    let mut queries = Vec::new();
    for (i, line) in open_lines(path)?.enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let q: QueryLine =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if !seen.insert(q._id.clone()) {
            return Err(Error::Data(format!("duplicate query id '{}'", q._id)));
        }
        queries.push(Query {
            id: q._id,
            text: q.text,
        });
    }
    Ok(queries)
}

/// Reads a BEIR qrels file: tab-separated `query-id corpus-id score` with one
/// header line.
pub fn read_qrels(path: &Path) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (i, line) in open_lines(path)?.enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if lineno == 1 {
            continue; // header
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (qid, did, grade) = match (parts.next(), parts.next(), parts.next()) {
            (Some(q), Some(d), Some(g)) => (q, d, g),
            _ => {
                return Err(Error::parse(
                    path,
                    lineno,
                    "expected 3 tab-separated fields: query-id, corpus-id, score",
                ))
            }
        };
        let grade: u32 = grade.trim().parse().map_err(|_| {
            Error::parse(
                path,
                lineno,
                format!("relevance grade '{grade}' is not a non-negative integer"),
            )
        })?;
        qrels.insert(qid, did, grade)?;
    }
    Ok(qrels)
}

/// Streams a float vector file: JSON Lines `{"id": str, "vector": {token: weight}}`
/// with strictly positive weights.
pub fn stream_float_vectors(
    path: &Path,
) -> Result<impl Iterator<Item = Result<(String, TermWeightVector)>>> {
    #[derive(Deserialize)]
    struct VectorLine {
        id: String,
        vector: BTreeMap<String, f64>,
    }
    let path_buf = path.to_path_buf();
    let lines = open_lines(path)?;
    Ok(lines.enumerate().filter_map(move |(i, line)| {
        let lineno = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        };
        if line.trim().is_empty() {
            return None;
        }
        let parsed: VectorLine = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => return Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        };
        match TermWeightVector::from_entries(parsed.vector) {
            Ok(v) => Some(Ok((parsed.id, v))),
            Err(e) => Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        }
    }))
}

pub fn read_float_vectors(path: &Path) -> Result<Vec<(String, TermWeightVector)>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for item in stream_float_vectors(path)? {
        let (id, v) = item?;
        if !seen.insert(id.clone()) {
            return Err(Error::Data(format!("duplicate vector id '{id}'")));
        }
        out.push((id, v));
    }
    Ok(out)
}

/// Streams a quantized vector file; weights must be positive integers.
pub fn stream_quantized_vectors(
    path: &Path,
) -> Result<impl Iterator<Item = Result<(String, QuantizedWeights)>>> {
    #[derive(Deserialize)]
    struct VectorLine {
        id: String,
        vector: BTreeMap<String, serde_json::Number>,
    }
    let path_buf = path.to_path_buf();
    let lines = open_lines(path)?;
    Ok(lines.enumerate().filter_map(move |(i, line)| {
        let lineno = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        };
        if line.trim().is_empty() {
            return None;
        }
        let parsed: VectorLine = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => return Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        };
        let mut entries = Vec::with_capacity(parsed.vector.len());
        for (tok, num) in parsed.vector {
            match num.as_u64() {
                Some(w) if (1..=u32::MAX as u64).contains(&w) => {
                    entries.push((tok, w as u32));
                }
                _ => {
                    return Some(Err(Error::parse(
                        &path_buf,
                        lineno,
                        format!("impact for token '{tok}' must be a positive integer, got {num}"),
                    )))
                }
            }
        }
        match QuantizedWeights::from_entries(entries) {
            Ok(v) => Some(Ok((parsed.id, v))),
            Err(e) => Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        }
    }))
}

pub fn read_quantized_vectors(path: &Path) -> Result<Vec<(String, QuantizedWeights)>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for item in stream_quantized_vectors(path)? {
        let (id, v) = item?;
        if !seen.insert(id.clone()) {
            return Err(Error::Data(format!("duplicate vector id '{id}'")));
        }
        out.push((id, v));
    }
    Ok(out)
}

fn write_json_lines<T: serde::Serialize>(path: &Path, rows: impl Iterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a float vector file; inverse of [`read_float_vectors`].
pub fn write_float_vectors<'a, I>(path: &Path, vectors: I) -> Result<()>
where
    I: IntoIterator<Item = &'a (String, TermWeightVector)>,
{
    #[derive(serde::Serialize)]
    struct Row<'r> {
        id: &'r str,
        vector: &'r BTreeMap<String, f64>,
    }
    write_json_lines(
        path,
        vectors.into_iter().map(|(id, v)| Row {
            id,
            vector: v.entries(),
        }),
    )
}

/// Writes a quantized vector file; inverse of [`read_quantized_vectors`].
pub fn write_quantized_vectors<'a, I>(path: &Path, vectors: I) -> Result<()>
where
    I: IntoIterator<Item = &'a (String, QuantizedWeights)>,
{
    #[derive(serde::Serialize)]
    struct Row<'r> {
        id: &'r str,
        vector: &'r BTreeMap<String, u32>,
    }
    write_json_lines(
        path,
        vectors.into_iter().map(|(id, v)| Row {
            id,
            vector: v.entries(),
        }),
    )
}

/// A document expansion payload, one of two kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum ExpansionRecord {
    /// Synthetic queries to append to the passage text.
    GeneratedQueries { doc_id: String, queries: Vec<String> },
    /// Weighted vocabulary tokens; the top-k get appended.
    WeightedTokens {
        doc_id: String,
        weights: TermWeightVector,
    },
}

impl ExpansionRecord {
    pub fn doc_id(&self) -> &str {
        match self {
            ExpansionRecord::GeneratedQueries { doc_id, .. } => doc_id,
            ExpansionRecord::WeightedTokens { doc_id, .. } => doc_id,
        }
    }
}

/// Reads an expansion file: JSON Lines, either `{"id", "queries": [...]}` or
/// `{"id", "vector": {...}}`, one kind per record.
pub fn read_expansions(path: &Path) -> Result<BTreeMap<String, ExpansionRecord>> {
    #[derive(Deserialize)]
    struct ExpansionLine {
        id: String,
        #[serde(default)]
        queries: Option<Vec<String>>,
        #[serde(default)]
        vector: Option<BTreeMap<String, f64>>,
    }
    let mut out = BTreeMap::new();
    for (i, line) in open_lines(path)?.enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ExpansionLine =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let record = match (parsed.queries, parsed.vector) {
            (Some(queries), None) => ExpansionRecord::GeneratedQueries {
                doc_id: parsed.id.clone(),
                queries,
            },
            (None, Some(vector)) => ExpansionRecord::WeightedTokens {
                doc_id: parsed.id.clone(),
                weights: TermWeightVector::from_entries(vector)
                    .map_err(|e| Error::parse(path, lineno, e.to_string()))?,
            },
            _ => {
                return Err(Error::parse(
                    path,
                    lineno,
                    "expected exactly one of 'queries' or 'vector'",
                ))
            }
        };
        if out.insert(parsed.id.clone(), record).is_some() {
            return Err(Error::Data(format!(
                "duplicate expansion id '{}'",
                parsed.id
            )));
        }
    }
    Ok(out)
}

/// Writes ranked lists as a TREC run file: `qid Q0 docid rank score tag`,
/// single spaces, scores with six decimal places, queries in input order.
pub fn write_run(path: &Path, runs: &[RankedList], tag: &str) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for run in runs {
        for (rank, (doc_id, score)) in run.hits.iter().enumerate() {
            writeln!(
                w,
                "{} Q0 {} {} {:.6} {}",
                run.query_id,
                doc_id,
                rank + 1,
                score,
                tag
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses a run file written by [`write_run`] (or any whitespace-delimited
/// six-column TREC run).
pub fn read_run(path: &Path) -> Result<Vec<RunEntry>> {
    let mut entries = Vec::new();
    for (i, line) in open_lines(path)?.enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 6 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 6 whitespace-separated fields, got {}", parts.len()),
            ));
        }
        let rank: usize = parts[3]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad rank '{}'", parts[3])))?;
        let score: f64 = parts[4]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad score '{}'", parts[4])))?;
        entries.push(RunEntry {
            query_id: parts[0].to_string(),
            doc_id: parts[2].to_string(),
            rank,
            score,
            tag: parts[5].to_string(),
        });
    }
    Ok(entries)
}

/// Groups run entries by query, preserving rank order within each query and
/// first-appearance order of the queries.
pub fn group_run_by_query(entries: &[RunEntry]) -> Vec<RankedList> {
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, Vec<(usize, String, f64)>> = BTreeMap::new();
    for e in entries {
        if !grouped.contains_key(&e.query_id) {
            order.push(e.query_id.clone());
        }
        grouped.entry(e.query_id.clone()).or_default().push((
            e.rank,
            e.doc_id.clone(),
            e.score,
        ));
    }
    order
        .into_iter()
        .map(|qid| {
            let mut hits = grouped.remove(&qid).unwrap();
            hits.sort_by_key(|(rank, _, _)| *rank);
            RankedList {
                query_id: qid,
                hits: hits.into_iter().map(|(_, id, s)| (id, s)).collect(),
            }
        })
        .collect()
}

/// Vocabulary-pooling model inputs: the shared token list, per-token input
/// embeddings and the inference bias.
pub struct MaxDotModel {
    pub vocab: crate::repr::Vocabulary,
    pub input_embeds: crate::repr::EmbeddingMatrix,
    pub bias: f64,
}

/// Reads a max-dot-product model file: JSON with `tokens` (|V| strings),
/// `dim`, `embeddings` (|V| rows of `dim` floats) and optional `bias`.
pub fn read_max_dot_model(path: &Path) -> Result<MaxDotModel> {
    #[derive(Deserialize)]
    struct ModelFile {
        tokens: Vec<String>,
        dim: usize,
        embeddings: Vec<Vec<f64>>,
        #[serde(default)]
        bias: f64,
    }
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Error::parse_file(path, format!("cannot open: {e}")))?;
    let parsed: ModelFile =
        serde_json::from_str(&raw).map_err(|e| Error::parse_file(path, e.to_string()))?;
    if parsed.embeddings.len() != parsed.tokens.len() {
        return Err(Error::parse_file(
            path,
            format!(
                "expected {} embedding rows, got {}",
                parsed.tokens.len(),
                parsed.embeddings.len()
            ),
        ));
    }
    for (i, row) in parsed.embeddings.iter().enumerate() {
        if row.len() != parsed.dim {
            return Err(Error::parse_file(
                path,
                format!("embedding row {i} has {} values, expected {}", row.len(), parsed.dim),
            ));
        }
    }
    let rows = parsed.embeddings.len();
    let vocab = crate::repr::Vocabulary::new(parsed.tokens)?;
    let input_embeds =
        crate::repr::EmbeddingMatrix::new(rows, parsed.dim, parsed.embeddings.concat())
            .map_err(|e| Error::parse_file(path, e.to_string()))?;
    Ok(MaxDotModel {
        vocab,
        input_embeds,
        bias: parsed.bias,
    })
}

/// Streams per-passage embedding files: JSON Lines
/// `{"id": str, "embeddings": [[f64; dim]; l]}`.
pub fn stream_passage_embeds(
    path: &Path,
    dim: usize,
) -> Result<impl Iterator<Item = Result<(String, crate::repr::EmbeddingMatrix)>>> {
    #[derive(Deserialize)]
    struct EmbedLine {
        id: String,
        embeddings: Vec<Vec<f64>>,
    }
    let path_buf = path.to_path_buf();
    let lines = open_lines(path)?;
    Ok(lines.enumerate().filter_map(move |(i, line)| {
        let lineno = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        };
        if line.trim().is_empty() {
            return None;
        }
        let parsed: EmbedLine = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => return Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        };
        for row in &parsed.embeddings {
            if row.len() != dim {
                return Some(Err(Error::parse(
                    &path_buf,
                    lineno,
                    format!("embedding row has {} values, expected {dim}", row.len()),
                )));
            }
        }
        let rows = parsed.embeddings.len();
        match crate::repr::EmbeddingMatrix::new(rows, dim, parsed.embeddings.concat()) {
            Ok(m) => Some(Ok((parsed.id, m))),
            Err(e) => Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        }
    }))
}

/// Streams token-logit files: JSON Lines `{"id": str, "logits": [[f64; l]; |V|]}`
/// with one row per vocabulary token.
pub fn stream_token_logits(
    path: &Path,
    vocab_size: usize,
) -> Result<impl Iterator<Item = Result<(String, crate::repr::TokenScoreMatrix)>>> {
    #[derive(Deserialize)]
    struct LogitLine {
        id: String,
        logits: Vec<Vec<f64>>,
    }
    let path_buf = path.to_path_buf();
    let lines = open_lines(path)?;
    Ok(lines.enumerate().filter_map(move |(i, line)| {
        let lineno = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        };
        if line.trim().is_empty() {
            return None;
        }
        let parsed: LogitLine = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => return Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        };
        if parsed.logits.len() != vocab_size {
            return Some(Err(Error::parse(
                &path_buf,
                lineno,
                format!("expected {vocab_size} logit rows, got {}", parsed.logits.len()),
            )));
        }
        let l = parsed.logits.first().map(Vec::len).unwrap_or(0);
        for row in &parsed.logits {
            if row.len() != l {
                return Some(Err(Error::parse(
                    &path_buf,
                    lineno,
                    "ragged logit rows".to_string(),
                )));
            }
        }
        match crate::repr::TokenScoreMatrix::new(vocab_size, l, parsed.logits.concat()) {
            Ok(m) => Some(Ok((parsed.id, m))),
            Err(e) => Some(Err(Error::parse(&path_buf, lineno, e.to_string()))),
        }
    }))
}

/// Standard BEIR dataset layout under a data directory.
pub struct BeirPaths {
    pub corpus: PathBuf,
    pub queries: PathBuf,
    pub qrels: PathBuf,
}

impl BeirPaths {
    pub fn new(data_dir: &Path, split: &str) -> Self {
        BeirPaths {
            corpus: data_dir.join("corpus.jsonl"),
            queries: data_dir.join("queries.jsonl"),
            qrels: data_dir.join("qrels").join(format!("{split}.tsv")),
        }
    }
}
