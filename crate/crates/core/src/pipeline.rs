//! The all-in-one inference pipeline: encode -> quantize -> index -> search
//! -> evaluate, plus the same five stages as independently runnable steps.
//!
//! Every step reads and writes canonical files under the output directory, so
//! running the steps one by one is byte-equivalent to one `aio` run. A
//! manifest records the config echo, content hashes of inputs and outputs and
//! per-step status; re-running with identical inputs reproduces identical
//! bytes, independent of the encode thread count.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analyzer::{Analyzer, AnalyzerMode};
use crate::dataio::{self, ExpansionRecord};
use crate::error::{Error, Result};
use crate::eval::{self, MetricReport};
use crate::expansion;
use crate::index::{self, CorpusDoc, ImpactIndex};
use crate::quant::{self, QuantizationConfig};
use crate::repr::{self, QuantizedWeights, TermWeightVector};
use crate::search::{self, Bm25Params, RankedList};

pub const DOC_VECTORS_FLOAT: &str = "doc_vectors.float.jsonl";
pub const QUERY_VECTORS_FLOAT: &str = "query_vectors.float.jsonl";
pub const DOC_VECTORS_QUANTIZED: &str = "doc_vectors.quantized.jsonl";
pub const QUERY_VECTORS_QUANTIZED: &str = "query_vectors.quantized.jsonl";
pub const SEGMENT_DIR: &str = "segment";
pub const RUN_FILE: &str = "run.trec";
pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_TSV: &str = "metrics.tsv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Environment variable naming a directory for segment reuse across runs.
pub const CACHE_DIR_ENV: &str = "SPRINT_CACHE_DIR";

/// Metric cutoffs reported by the evaluate step.
pub const REPORT_KS: [usize; 3] = [10, 100, 1000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderName {
    /// Distinct analyzed tokens weighted 1.
    Binary,
    /// Raw analyzed token counts.
    Tf,
    /// Max-dot-product pooling over per-passage embedding files.
    SpartaFile,
    /// Log-saturated max pooling over per-passage token-logit files.
    SpladeFile,
    /// Validated copy-through of precomputed vector files.
    VectorFile,
}

impl EncoderName {
    fn is_file_based(self) -> bool {
        matches!(
            self,
            EncoderName::SpartaFile | EncoderName::SpladeFile | EncoderName::VectorFile
        )
    }
}

impl std::fmt::Display for EncoderName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EncoderName::Binary => "binary",
            EncoderName::Tf => "tf",
            EncoderName::SpartaFile => "sparta-file",
            EncoderName::SpladeFile => "splade-file",
            EncoderName::VectorFile => "vector-file",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for EncoderName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(EncoderName::Binary),
            "tf" => Ok(EncoderName::Tf),
            "sparta-file" => Ok(EncoderName::SpartaFile),
            "splade-file" => Ok(EncoderName::SpladeFile),
            "vector-file" => Ok(EncoderName::VectorFile),
            other => Err(Error::Config(format!(
                "unknown encoder '{other}' (expected binary, tf, sparta-file, splade-file or vector-file)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FirstStage {
    /// Integer impact dot products over the quantized vectors.
    Impact,
    /// BM25 over a lexical index of the raw corpus.
    Bm25,
}

impl std::fmt::Display for FirstStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FirstStage::Impact => write!(f, "impact"),
            FirstStage::Bm25 => write!(f, "bm25"),
        }
    }
}

impl std::str::FromStr for FirstStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "impact" => Ok(FirstStage::Impact),
            "bm25" => Ok(FirstStage::Bm25),
            other => Err(Error::Config(format!(
                "unknown first stage '{other}' (expected 'impact' or 'bm25')"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionKind {
    GeneratedQueries,
    WeightedTokens,
}

impl std::str::FromStr for ExpansionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generated-queries" => Ok(ExpansionKind::GeneratedQueries),
            "weighted-tokens" => Ok(ExpansionKind::WeightedTokens),
            other => Err(Error::Config(format!(
                "unknown expansion kind '{other}' (expected 'generated-queries' or 'weighted-tokens')"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub kind: ExpansionKind,
    pub file: PathBuf,
    /// Number of generated queries to append (generated-queries kind).
    pub num_queries: usize,
    /// Number of top-weight tokens to append (weighted-tokens kind).
    pub top_k: usize,
}

/// Full pipeline configuration; echoed verbatim into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub encoder_name: EncoderName,
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    pub topic_split: String,
    pub k: usize,
    pub do_quantization: bool,
    pub quantization: QuantizationConfig,
    pub expansion: Option<ExpansionConfig>,
    pub first_stage: FirstStage,
    pub rerank_depth: Option<usize>,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    pub analyzer: AnalyzerMode,
    /// Worker threads for the encode step only.
    pub threads: usize,
    /// Segment reuse directory; usually from `SPRINT_CACHE_DIR`.
    pub cache_dir: Option<PathBuf>,
    /// Tag written into the run file.
    pub tag: String,
}

impl PipelineConfig {
    pub fn new(data_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            encoder_name: EncoderName::Tf,
            data_dir: data_dir.into(),
            output_dir: output_dir.into(),
            topic_split: "test".into(),
            k: 1000,
            do_quantization: false,
            quantization: QuantizationConfig::default(),
            expansion: None,
            first_stage: FirstStage::Impact,
            rerank_depth: None,
            bm25_k1: 0.9,
            bm25_b: 0.4,
            analyzer: AnalyzerMode::WhitespaceLower,
            threads: 1,
            cache_dir: None,
            tag: "sprint".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        if self.topic_split.is_empty() {
            return Err(Error::Config("topic_split must not be empty".into()));
        }
        if self.do_quantization {
            self.quantization.validate()?;
        }
        Bm25Params {
            k1: self.bm25_k1,
            b: self.bm25_b,
        }
        .validate()?;
        if let Some(depth) = self.rerank_depth {
            if depth == 0 {
                return Err(Error::Config("rerank depth must be >= 1".into()));
            }
        }
        if self.expansion.is_some()
            && self.first_stage == FirstStage::Impact
            && self.encoder_name.is_file_based()
        {
            return Err(Error::Config(
                "document expansion has no effect with a file-based encoder and impact retrieval; \
                 supply vectors computed from expanded passages instead"
                    .into(),
            ));
        }
        Ok(())
    }

    fn bm25_params(&self) -> Bm25Params {
        Bm25Params {
            k1: self.bm25_k1,
            b: self.bm25_b,
        }
    }

    /// The impact route (or reranking) needs encoded vectors; a plain BM25
    /// run does not.
    fn needs_vectors(&self) -> bool {
        self.first_stage == FirstStage::Impact || self.rerank_depth.is_some()
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    fn beir(&self) -> dataio::BeirPaths {
        dataio::BeirPaths::new(&self.data_dir, &self.topic_split)
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Manifest {
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    steps: BTreeMap<String, String>,
    incomplete: bool,
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

fn load_manifest(cfg: &PipelineConfig) -> Manifest {
    fs::read_to_string(cfg.out(MANIFEST_FILE))
        .ok()
        .and_then(|raw| serde_json::from_str(&raw).ok())
        .unwrap_or_default()
}

fn store_manifest(cfg: &PipelineConfig, manifest: &mut Manifest) -> Result<()> {
    manifest.config = serde_json::to_value(cfg)?;
    manifest.incomplete = manifest.steps.values().any(|s| s != "complete" && s != "skipped");
    let mut body = serde_json::to_string_pretty(manifest)?;
    body.push('\n');
    fs::write(cfg.out(MANIFEST_FILE), body)?;
    Ok(())
}

fn record_input(manifest: &mut Manifest, label: &str, path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::Data(format!(
            "missing input file: {}",
            path.display()
        )));
    }
    manifest.inputs.insert(label.to_string(), sha256_file(path)?);
    Ok(())
}

fn record_output(manifest: &mut Manifest, label: &str, path: &Path) -> Result<()> {
    manifest.outputs.insert(label.to_string(), sha256_file(path)?);
    Ok(())
}

/// Loads expansions and applies them to the passage text.
fn apply_expansion(
    text: String,
    doc_id: &str,
    exp_cfg: &ExpansionConfig,
    records: &BTreeMap<String, ExpansionRecord>,
    analyzer: &Analyzer,
) -> Result<String> {
    let Some(record) = records.get(doc_id) else {
        return Ok(text);
    };
    match (exp_cfg.kind, record) {
        (ExpansionKind::GeneratedQueries, ExpansionRecord::GeneratedQueries { queries, .. }) => {
            Ok(expansion::append_generated_queries(
                &text,
                queries,
                exp_cfg.num_queries,
            ))
        }
        (ExpansionKind::WeightedTokens, ExpansionRecord::WeightedTokens { weights, .. }) => Ok(
            expansion::append_top_k_tokens(&text, weights, exp_cfg.top_k, analyzer),
        ),
        _ => Err(Error::Data(format!(
            "expansion record for '{doc_id}' does not match the configured expansion kind"
        ))),
    }
}

/// The corpus with expansions merged in, as (id, passage text) pairs.
fn load_expanded_corpus(cfg: &PipelineConfig) -> Result<Vec<(String, String)>> {
    let paths = cfg.beir();
    let corpus = dataio::read_corpus(&paths.corpus)?;
    let expansions = match &cfg.expansion {
        Some(exp) => Some((exp, dataio::read_expansions(&exp.file)?)),
        None => None,
    };
    let analyzer = Analyzer::new(cfg.analyzer);

    corpus
        .into_iter()
        .map(|doc| {
            let text = if doc.title.is_empty() {
                doc.text
            } else {
                format!("{} {}", doc.title, doc.text)
            };
            let text = match &expansions {
                Some((exp_cfg, records)) => {
                    apply_expansion(text, &doc.id, exp_cfg, records, &analyzer)?
                }
                None => text,
            };
            Ok((doc.id, text))
        })
        .collect()
}

/// Encodes texts with a pure text encoder, sharded over `threads` workers.
/// Outputs are merged in shard order, so thread count never affects bytes.
fn encode_texts_parallel(
    texts: Vec<(String, String)>,
    encoder: EncoderName,
    analyzer: &Analyzer,
    threads: usize,
) -> Vec<(String, TermWeightVector)> {
    let encode_one = |text: &str| -> TermWeightVector {
        let tokens = analyzer.analyze(text);
        match encoder {
            EncoderName::Binary => repr::binary_query_weights(tokens),
            EncoderName::Tf => repr::tf_term_weights(tokens),
            _ => unreachable!("file-based encoders do not run text encoding"),
        }
    };

    if threads <= 1 || texts.len() < 2 {
        return texts
            .into_iter()
            .map(|(id, text)| {
                let v = encode_one(&text);
                (id, v)
            })
            .collect();
    }

    let chunk_size = texts.len().div_ceil(threads);
    let chunks: Vec<&[(String, String)]> = texts.chunks(chunk_size).collect();
    let mut merged = Vec::with_capacity(texts.len());
    std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|(id, text)| (id.clone(), encode_one(text)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            merged.extend(handle.join().expect("encode worker panicked"));
        }
    });
    merged
}

fn encode_documents(cfg: &PipelineConfig) -> Result<Vec<(String, TermWeightVector)>> {
    let mut docs = match cfg.encoder_name {
        EncoderName::Binary | EncoderName::Tf => {
            let corpus = load_expanded_corpus(cfg)?;
            let analyzer = Analyzer::new(cfg.analyzer);
            encode_texts_parallel(corpus, cfg.encoder_name, &analyzer, cfg.threads)
        }
        EncoderName::VectorFile => dataio::read_float_vectors(&cfg.data_dir.join("doc_vectors.jsonl"))?,
        EncoderName::SpartaFile => {
            let model = dataio::read_max_dot_model(&cfg.data_dir.join("sparta_model.json"))?;
            let params = repr::SpartaParams { bias: model.bias };
            let mut out = Vec::new();
            for item in
                dataio::stream_passage_embeds(&cfg.data_dir.join("sparta_doc_embeds.jsonl"), model.input_embeds.dim())?
            {
                let (id, embeds) = item?;
                out.push((
                    id,
                    repr::sparta_term_weights(&model.vocab, &model.input_embeds, &embeds, &params)?,
                ));
            }
            out
        }
        EncoderName::SpladeFile => {
            let vocab = read_token_list(&cfg.data_dir.join("splade_vocab.json"))?;
            let mut out = Vec::new();
            for item in
                dataio::stream_token_logits(&cfg.data_dir.join("splade_doc_logits.jsonl"), vocab.len())?
            {
                let (id, logits) = item?;
                out.push((id, repr::splade_term_weights(&vocab, &logits)?));
            }
            out
        }
    };
    docs.sort_by(|a, b| a.0.cmp(&b.0));
    for pair in docs.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::Data(format!("duplicate doc id '{}'", pair[0].0)));
        }
    }
    Ok(docs)
}

fn read_token_list(path: &Path) -> Result<repr::Vocabulary> {
    #[derive(Deserialize)]
    struct TokenFile {
        tokens: Vec<String>,
    }
    let raw = fs::read_to_string(path)
        .map_err(|e| Error::parse_file(path, format!("cannot open: {e}")))?;
    let parsed: TokenFile =
        serde_json::from_str(&raw).map_err(|e| Error::parse_file(path, e.to_string()))?;
    repr::Vocabulary::new(parsed.tokens)
}

fn encode_queries(cfg: &PipelineConfig) -> Result<Vec<(String, TermWeightVector)>> {
    let queries = dataio::read_queries(&cfg.beir().queries)?;
    let mut out = match cfg.encoder_name {
        // Scalar-weight routes tokenize the query into a binary vector.
        EncoderName::Binary | EncoderName::Tf | EncoderName::SpartaFile => {
            let analyzer = Analyzer::new(cfg.analyzer);
            queries
                .iter()
                .map(|q| {
                    (
                        q.id.clone(),
                        repr::binary_query_weights(analyzer.analyze(&q.text)),
                    )
                })
                .collect()
        }
        EncoderName::VectorFile => {
            dataio::read_float_vectors(&cfg.data_dir.join("query_vectors.jsonl"))?
        }
        EncoderName::SpladeFile => {
            let vocab = read_token_list(&cfg.data_dir.join("splade_vocab.json"))?;
            let mut encoded = Vec::new();
            for item in dataio::stream_token_logits(
                &cfg.data_dir.join("splade_query_logits.jsonl"),
                vocab.len(),
            )? {
                let (id, logits) = item?;
                encoded.push((id, repr::splade_term_weights(&vocab, &logits)?));
            }
            encoded
        }
    };
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Step 1: encode documents and queries into float term-weight vectors.
pub fn step_encode(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut manifest = load_manifest(cfg);

    if !cfg.needs_vectors() {
        manifest.steps.insert("encode".into(), "skipped".into());
        return store_manifest(cfg, &mut manifest);
    }

    let result = (|| -> Result<()> {
        let docs = encode_documents(cfg)?;
        dataio::write_float_vectors(&cfg.out(DOC_VECTORS_FLOAT), &docs)?;
        let queries = encode_queries(cfg)?;
        dataio::write_float_vectors(&cfg.out(QUERY_VECTORS_FLOAT), &queries)?;
        record_output(&mut manifest, DOC_VECTORS_FLOAT, &cfg.out(DOC_VECTORS_FLOAT))?;
        record_output(&mut manifest, QUERY_VECTORS_FLOAT, &cfg.out(QUERY_VECTORS_FLOAT))?;
        Ok(())
    })();

    match result {
        Ok(()) => {
            manifest.steps.insert("encode".into(), "complete".into());
            store_manifest(cfg, &mut manifest)?;
            Ok(())
        }
        Err(e) => {
            manifest.steps.insert("encode".into(), format!("failed: {e}"));
            store_manifest(cfg, &mut manifest)?;
            Err(e.in_step("encode"))
        }
    }
}

fn quantize_file(cfg: &PipelineConfig, input: &Path, output: &Path) -> Result<u64> {
    let vectors = dataio::read_float_vectors(input)?;
    let mut quantized = Vec::with_capacity(vectors.len());
    let mut clamped_total = 0u64;
    for (id, v) in &vectors {
        let q = if cfg.do_quantization {
            let (q, clamped) = quant::quantize_vector(v, &cfg.quantization)?;
            clamped_total += clamped;
            q
        } else {
            integral_pass_through(id, v)?
        };
        quantized.push((id.clone(), q));
    }
    dataio::write_quantized_vectors(output, &quantized)?;
    Ok(clamped_total)
}

/// Without quantization the float weights must already be positive integers
/// (binary or tf encodings); anything else needs `do_quantization`.
fn integral_pass_through(id: &str, v: &TermWeightVector) -> Result<QuantizedWeights> {
    let mut out = QuantizedWeights::new();
    for (tok, w) in v.iter() {
        if w.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&w) {
            return Err(Error::Config(format!(
                "vector '{id}' has non-integral weight {w} for token '{tok}'; \
                 enable quantization to index real-valued weights"
            )));
        }
        out.insert(tok, w as u32);
    }
    Ok(out)
}

/// Step 2: quantize the float vectors into integer impacts.
pub fn step_quantize(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut manifest = load_manifest(cfg);

    if !cfg.needs_vectors() {
        manifest.steps.insert("quantize".into(), "skipped".into());
        return store_manifest(cfg, &mut manifest);
    }

    let result = (|| -> Result<u64> {
        let docs_clamped = quantize_file(
            cfg,
            &cfg.out(DOC_VECTORS_FLOAT),
            &cfg.out(DOC_VECTORS_QUANTIZED),
        )?;
        let queries_clamped = quantize_file(
            cfg,
            &cfg.out(QUERY_VECTORS_FLOAT),
            &cfg.out(QUERY_VECTORS_QUANTIZED),
        )?;
        record_output(
            &mut manifest,
            DOC_VECTORS_QUANTIZED,
            &cfg.out(DOC_VECTORS_QUANTIZED),
        )?;
        record_output(
            &mut manifest,
            QUERY_VECTORS_QUANTIZED,
            &cfg.out(QUERY_VECTORS_QUANTIZED),
        )?;
        Ok(docs_clamped + queries_clamped)
    })();

    match result {
        Ok(clamped) => {
            if clamped > 0 {
                log::warn!("{clamped} weights exceeded the configured score range and were clamped");
            }
            manifest
                .steps
                .insert("quantize".into(), "complete".into());
            manifest
                .outputs
                .insert("clamped_weights".into(), clamped.to_string());
            store_manifest(cfg, &mut manifest)?;
            Ok(())
        }
        Err(e) => {
            manifest.steps.insert("quantize".into(), format!("failed: {e}"));
            store_manifest(cfg, &mut manifest)?;
            Err(e.in_step("quantize"))
        }
    }
}

/// Index-relevant configuration; part of the segment cache key.
fn index_config_echo(cfg: &PipelineConfig) -> BTreeMap<String, String> {
    let mut echo = BTreeMap::new();
    echo.insert("first_stage".into(), cfg.first_stage.to_string());
    match cfg.first_stage {
        FirstStage::Impact => {
            echo.insert("encoder".into(), cfg.encoder_name.to_string());
            echo.insert("do_quantization".into(), cfg.do_quantization.to_string());
            if cfg.do_quantization {
                echo.insert("quantization_method".into(), cfg.quantization.method.to_string());
                echo.insert(
                    "original_score_range".into(),
                    format!("{}", cfg.quantization.original_score_range),
                );
                echo.insert("quantization_nbits".into(), cfg.quantization.nbits.to_string());
            }
        }
        FirstStage::Bm25 => {
            echo.insert("analyzer".into(), cfg.analyzer.to_string());
        }
    }
    if let Some(exp) = &cfg.expansion {
        echo.insert(
            "expansion".into(),
            format!("{:?}:{}:{}", exp.kind, exp.num_queries, exp.top_k),
        );
    }
    echo
}

fn build_index(cfg: &PipelineConfig) -> Result<ImpactIndex> {
    let echo = index_config_echo(cfg);
    match cfg.first_stage {
        FirstStage::Impact => {
            let docs = dataio::read_quantized_vectors(&cfg.out(DOC_VECTORS_QUANTIZED))?;
            index::build_impact_index(docs, echo)
        }
        FirstStage::Bm25 => {
            let corpus = load_expanded_corpus(cfg)?;
            let analyzer = Analyzer::new(cfg.analyzer);
            index::build_lexical_index(
                corpus.into_iter().map(|(id, text)| CorpusDoc {
                    id,
                    title: String::new(),
                    text,
                }),
                &analyzer,
                echo,
            )
        }
    }
}

/// Content-addressed cache key over the index source file and configuration.
fn segment_cache_key(cfg: &PipelineConfig) -> Result<String> {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(&index_config_echo(cfg))?);
    let source = match cfg.first_stage {
        FirstStage::Impact => cfg.out(DOC_VECTORS_QUANTIZED),
        FirstStage::Bm25 => cfg.beir().corpus,
    };
    hasher.update(sha256_file(&source)?.as_bytes());
    if let Some(exp) = &cfg.expansion {
        hasher.update(sha256_file(&exp.file)?.as_bytes());
    }
    Ok(format!("{:x}", hasher.finalize()))
}

fn copy_segment(from: &Path, to: &Path) -> Result<()> {
    fs::create_dir_all(to)?;
    for name in ["meta.json", "docs.tsv", "postings.bin"] {
        fs::copy(from.join(name), to.join(name))?;
    }
    Ok(())
}

/// Step 3: build (or reuse) the inverted index segment.
pub fn step_index(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut manifest = load_manifest(cfg);

    let result = (|| -> Result<()> {
        let segment_dir = cfg.out(SEGMENT_DIR);
        let mut cache_hit = false;
        if let Some(cache_root) = &cfg.cache_dir {
            let key = segment_cache_key(cfg)?;
            let cached = cache_root.join(&key);
            if cached.join("postings.bin").exists() {
                copy_segment(&cached, &segment_dir)?;
                cache_hit = true;
                log::info!("segment cache hit: {}", cached.display());
            } else {
                let index = build_index(cfg)?;
                index::write_segment(&index, &segment_dir)?;
                copy_segment(&segment_dir, &cached)?;
            }
        } else {
            let index = build_index(cfg)?;
            index::write_segment(&index, &segment_dir)?;
        }
        manifest
            .outputs
            .insert("segment_cache_hit".into(), cache_hit.to_string());
        manifest.outputs.insert(
            "segment_bytes".into(),
            index::segment_size_bytes(&segment_dir)?.to_string(),
        );
        record_output(&mut manifest, "segment/meta.json", &segment_dir.join("meta.json"))?;
        record_output(&mut manifest, "segment/docs.tsv", &segment_dir.join("docs.tsv"))?;
        record_output(
            &mut manifest,
            "segment/postings.bin",
            &segment_dir.join("postings.bin"),
        )?;
        Ok(())
    })();

    match result {
        Ok(()) => {
            manifest.steps.insert("index".into(), "complete".into());
            store_manifest(cfg, &mut manifest)?;
            Ok(())
        }
        Err(e) => {
            manifest.steps.insert("index".into(), format!("failed: {e}"));
            store_manifest(cfg, &mut manifest)?;
            Err(e.in_step("index"))
        }
    }
}

fn run_queries(cfg: &PipelineConfig, index: &ImpactIndex) -> Result<Vec<RankedList>> {
    let queries = dataio::read_queries(&cfg.beir().queries)?;
    let first_stage_k = match cfg.rerank_depth {
        Some(depth) => cfg.k.max(depth),
        None => cfg.k,
    };

    let query_vectors: HashMap<String, QuantizedWeights> = if cfg.needs_vectors() {
        dataio::read_quantized_vectors(&cfg.out(QUERY_VECTORS_QUANTIZED))?
            .into_iter()
            .collect()
    } else {
        HashMap::new()
    };
    let doc_vectors: HashMap<String, QuantizedWeights> = if cfg.rerank_depth.is_some() {
        dataio::read_quantized_vectors(&cfg.out(DOC_VECTORS_QUANTIZED))?
            .into_iter()
            .collect()
    } else {
        HashMap::new()
    };
    let analyzer = Analyzer::new(cfg.analyzer);
    let bm25 = cfg.bm25_params();
    let empty_vector = QuantizedWeights::new();

    let mut runs = Vec::with_capacity(queries.len());
    for query in &queries {
        let mut ranked = match cfg.first_stage {
            FirstStage::Impact => {
                let qv = query_vectors.get(&query.id).unwrap_or(&empty_vector);
                search::search_impact(qv, index, first_stage_k)
            }
            FirstStage::Bm25 => {
                search::search_bm25(&query.text, index, &analyzer, &bm25, first_stage_k)
            }
        };
        ranked.query_id = query.id.clone();
        if let Some(depth) = cfg.rerank_depth {
            let qv = query_vectors.get(&query.id).unwrap_or(&empty_vector);
            ranked = search::rerank(&ranked, &doc_vectors, qv, depth)?;
            ranked.hits.truncate(cfg.k);
        }
        runs.push(ranked);
    }
    Ok(runs)
}

/// Step 4: retrieve the top k for every query and write the TREC run file.
pub fn step_search(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut manifest = load_manifest(cfg);

    let result = (|| -> Result<()> {
        let index = index::read_segment(&cfg.out(SEGMENT_DIR))?;
        let runs = run_queries(cfg, &index)?;
        dataio::write_run(&cfg.out(RUN_FILE), &runs, &cfg.tag)?;
        record_output(&mut manifest, RUN_FILE, &cfg.out(RUN_FILE))?;
        Ok(())
    })();

    match result {
        Ok(()) => {
            manifest.steps.insert("search".into(), "complete".into());
            store_manifest(cfg, &mut manifest)?;
            Ok(())
        }
        Err(e) => {
            manifest.steps.insert("search".into(), format!("failed: {e}"));
            store_manifest(cfg, &mut manifest)?;
            Err(e.in_step("search"))
        }
    }
}

/// Step 5: score the run file against the split's qrels.
pub fn step_evaluate(cfg: &PipelineConfig) -> Result<MetricReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut manifest = load_manifest(cfg);

    let result = (|| -> Result<MetricReport> {
        let report = eval::evaluate_run(&cfg.out(RUN_FILE), &cfg.beir().qrels, &REPORT_KS)?;
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        fs::write(cfg.out(METRICS_JSON), json)?;
        fs::write(cfg.out(METRICS_TSV), report.to_tsv())?;
        record_output(&mut manifest, METRICS_JSON, &cfg.out(METRICS_JSON))?;
        record_output(&mut manifest, METRICS_TSV, &cfg.out(METRICS_TSV))?;
        Ok(report)
    })();

    match result {
        Ok(report) => {
            manifest.steps.insert("evaluate".into(), "complete".into());
            store_manifest(cfg, &mut manifest)?;
            Ok(report)
        }
        Err(e) => {
            manifest.steps.insert("evaluate".into(), format!("failed: {e}"));
            store_manifest(cfg, &mut manifest)?;
            Err(e.in_step("evaluate"))
        }
    }
}

/// Runs the whole pipeline: encode, quantize, index, search, evaluate.
pub fn run_aio(cfg: &PipelineConfig) -> Result<MetricReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;

    // Record input hashes up front so the manifest traces outputs to inputs.
    let mut manifest = load_manifest(cfg);
    let paths = cfg.beir();
    record_input(&mut manifest, "corpus.jsonl", &paths.corpus).or_else(|e| {
        // Corpus is optional for pure vector-file routes.
        if cfg.first_stage == FirstStage::Bm25 || !cfg.encoder_name.is_file_based() {
            Err(e)
        } else {
            Ok(())
        }
    })?;
    record_input(&mut manifest, "queries.jsonl", &paths.queries)?;
    record_input(&mut manifest, "qrels", &paths.qrels)?;
    if let Some(exp) = &cfg.expansion {
        record_input(&mut manifest, "expansion", &exp.file)?;
    }
    store_manifest(cfg, &mut manifest)?;

    step_encode(cfg)?;
    step_quantize(cfg)?;
    step_index(cfg)?;
    step_search(cfg)?;
    step_evaluate(cfg)
}
