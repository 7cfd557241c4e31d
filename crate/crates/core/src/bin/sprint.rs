//! `sprint`: sparse retrieval pipeline CLI.
//!
//! The `aio` subcommand runs the full encode -> quantize -> index -> search
//! -> evaluate pipeline; the step subcommands run the same stages one at a
//! time against the same output directory. `analyze` produces sparsity,
//! latency and Pareto reports from pipeline artifacts.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sprint_core::analysis;
use sprint_core::analyzer::{Analyzer, AnalyzerMode};
use sprint_core::dataio;
use sprint_core::error::{Error, Result};
use sprint_core::eval;
use sprint_core::index::{self, IndexKind};
use sprint_core::pipeline::{
    self, EncoderName, ExpansionConfig, ExpansionKind, FirstStage, PipelineConfig,
};
use sprint_core::quant::{QuantizationConfig, QuantizationMethod};
use sprint_core::repr::QuantizedWeights;
use sprint_core::search::{self, Bm25Params};

#[derive(Parser)]
#[command(name = "sprint", version, about = "Sparse retrieval engine and evaluation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Document/query encoder: binary, tf, sparta-file, splade-file, vector-file
    #[arg(long, default_value = "tf")]
    encoder_name: String,

    /// BEIR-format dataset directory (corpus.jsonl, queries.jsonl, qrels/)
    #[arg(long)]
    data_dir: PathBuf,

    /// Directory for pipeline artifacts
    #[arg(long)]
    output_dir: PathBuf,

    /// Qrels split to evaluate against
    #[arg(long, default_value = "test")]
    split: String,

    /// Retrieval depth
    #[arg(long, default_value_t = 1000)]
    k: usize,

    /// Quantize float weights into integer impacts
    #[arg(long, default_value_t = false)]
    do_quantization: bool,

    /// Quantization method: range-nbits or scale-100
    #[arg(long, default_value = "range-nbits")]
    quantization_method: String,

    /// Score range mapped onto the integer range (range-nbits)
    #[arg(long, default_value_t = 5.0)]
    original_score_range: f64,

    /// Bits per stored impact (range-nbits)
    #[arg(long, default_value_t = 8)]
    quantization_nbits: u8,

    /// Document expansion kind: generated-queries or weighted-tokens
    #[arg(long)]
    expansion_kind: Option<String>,

    /// Expansion file (JSON Lines)
    #[arg(long)]
    expansion_file: Option<PathBuf>,

    /// Generated queries to append per document
    #[arg(long, default_value_t = sprint_core::expansion::DEFAULT_GENERATED_QUERIES)]
    expansion_q: usize,

    /// Top-weight tokens to append per document
    #[arg(long, default_value_t = sprint_core::expansion::DEFAULT_TOP_K_TOKENS)]
    expansion_topk: usize,

    /// Rerank the first-stage top-N with the encoded vectors
    #[arg(long)]
    rerank_depth: Option<usize>,

    /// First retrieval stage: impact or bm25
    #[arg(long, default_value = "impact")]
    first_stage: String,

    /// BM25 k1
    #[arg(long, default_value_t = 0.9)]
    bm25_k1: f64,

    /// BM25 b
    #[arg(long, default_value_t = 0.4)]
    bm25_b: f64,

    /// Text analyzer: whitespace-lower or english-porter
    #[arg(long, default_value = "whitespace-lower")]
    analyzer: String,

    /// Encode-step worker threads (other steps are single-threaded)
    #[arg(long, default_value_t = 1)]
    threads: usize,

    /// Run-file tag
    #[arg(long, default_value = "sprint")]
    tag: String,
}

impl PipelineArgs {
    fn into_config(self) -> Result<PipelineConfig> {
        let expansion = match (&self.expansion_kind, &self.expansion_file) {
            (None, None) => None,
            (Some(kind), Some(file)) => Some(ExpansionConfig {
                kind: kind.parse::<ExpansionKind>()?,
                file: file.clone(),
                num_queries: self.expansion_q,
                top_k: self.expansion_topk,
            }),
            _ => {
                return Err(Error::Config(
                    "--expansion-kind and --expansion-file must be given together".into(),
                ))
            }
        };
        let cfg = PipelineConfig {
            encoder_name: self.encoder_name.parse::<EncoderName>()?,
            data_dir: self.data_dir,
            output_dir: self.output_dir,
            topic_split: self.split,
            k: self.k,
            do_quantization: self.do_quantization,
            quantization: QuantizationConfig {
                method: self.quantization_method.parse::<QuantizationMethod>()?,
                original_score_range: self.original_score_range,
                nbits: self.quantization_nbits,
            },
            expansion,
            first_stage: self.first_stage.parse::<FirstStage>()?,
            rerank_depth: self.rerank_depth,
            bm25_k1: self.bm25_k1,
            bm25_b: self.bm25_b,
            analyzer: self.analyzer.parse::<AnalyzerMode>()?,
            threads: self.threads,
            cache_dir: std::env::var_os(pipeline::CACHE_DIR_ENV).map(PathBuf::from),
            tag: self.tag,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline: encode, quantize, index, search, evaluate
    Aio(PipelineArgs),
    /// Encode documents and queries into float term-weight vectors
    Encode(PipelineArgs),
    /// Quantize float vectors into integer impacts
    Quantize(PipelineArgs),
    /// Build the inverted index segment
    Index(PipelineArgs),
    /// Search the segment and write the TREC run file
    Search(PipelineArgs),
    /// Score a run against qrels
    Evaluate(EvaluateArgs),
    /// Sparsity, latency and Pareto reports
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct EvaluateArgs {
    /// Run file to score; defaults to <output-dir>/run.trec
    #[arg(long)]
    run: Option<PathBuf>,

    /// Qrels file; defaults to <data-dir>/qrels/<split>.tsv
    #[arg(long)]
    qrels: Option<PathBuf>,

    #[arg(long)]
    data_dir: Option<PathBuf>,

    #[arg(long)]
    output_dir: Option<PathBuf>,

    #[arg(long, default_value = "test")]
    split: String,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(subcommand)]
    kind: AnalyzeKind,
}

#[derive(Subcommand)]
enum AnalyzeKind {
    /// Stored-entry statistics over a vector file
    Sparsity {
        /// Vector file (float or quantized JSON Lines)
        #[arg(long)]
        input: PathBuf,
        /// Write the TSV report here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Single-thread query latency binned by query word length
    Latency {
        /// Pipeline output directory holding the segment (and query vectors)
        #[arg(long)]
        output_dir: PathBuf,
        /// Dataset directory holding queries.jsonl
        #[arg(long)]
        data_dir: PathBuf,
        /// Timed repetitions per query (median is kept)
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long, default_value_t = 1000)]
        k: usize,
        #[arg(long, default_value = "whitespace-lower")]
        analyzer: String,
        #[arg(long, default_value_t = 0.9)]
        bm25_k1: f64,
        #[arg(long, default_value_t = 0.4)]
        bm25_b: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Pareto-frontier flags over system records
    Pareto {
        /// TSV with header: system latency_ms ndcg10 index_mb
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn emit(report: String, output: Option<PathBuf>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, report)?,
        None => print!("{report}"),
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let run_path = match (&args.run, &args.output_dir) {
        (Some(run), _) => run.clone(),
        (None, Some(dir)) => dir.join(pipeline::RUN_FILE),
        (None, None) => {
            return Err(Error::Config("evaluate needs --run or --output-dir".into()))
        }
    };
    let qrels_path = match (&args.qrels, &args.data_dir) {
        (Some(qrels), _) => qrels.clone(),
        (None, Some(dir)) => dataio::BeirPaths::new(dir, &args.split).qrels,
        (None, None) => {
            return Err(Error::Config("evaluate needs --qrels or --data-dir".into()))
        }
    };
    let report = eval::evaluate_run(&run_path, &qrels_path, &pipeline::REPORT_KS)?;
    print!("{}", report.to_tsv());
    if let Some(dir) = &args.output_dir {
        std::fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
        json.push('\n');
        std::fs::write(dir.join(pipeline::METRICS_JSON), json)?;
        std::fs::write(dir.join(pipeline::METRICS_TSV), report.to_tsv())?;
    }
    Ok(())
}

fn vector_entry_counts(input: &std::path::Path) -> Result<Vec<usize>> {
    // Accept either float or quantized vector files.
    match dataio::read_float_vectors(input) {
        Ok(vectors) => Ok(vectors.iter().map(|(_, v)| v.len()).collect()),
        Err(_) => Ok(dataio::read_quantized_vectors(input)?
            .iter()
            .map(|(_, v)| v.len())
            .collect()),
    }
}

fn cmd_analyze_sparsity(input: PathBuf, output: Option<PathBuf>) -> Result<()> {
    let stats = analysis::sparsity_stats(vector_entry_counts(&input)?)?;
    let mut report = String::from("statistic\tvalue\n");
    report.push_str(&format!("mean_entries\t{:.4}\n", stats.mean));
    report.push_str(&format!("vectors\t{}\n", stats.count));
    for (entries, count) in &stats.histogram {
        report.push_str(&format!("hist_{entries}\t{count}\n"));
    }
    emit(report, output)
}

#[allow(clippy::too_many_arguments)]
fn cmd_analyze_latency(
    output_dir: PathBuf,
    data_dir: PathBuf,
    repetitions: usize,
    k: usize,
    analyzer: String,
    bm25_k1: f64,
    bm25_b: f64,
    output: Option<PathBuf>,
) -> Result<()> {
    let segment = index::read_segment(&output_dir.join(pipeline::SEGMENT_DIR))?;
    let queries = dataio::read_queries(&data_dir.join("queries.jsonl"))?;

    let report = match segment.kind() {
        IndexKind::Impact => {
            let vectors: HashMap<String, QuantizedWeights> = dataio::read_quantized_vectors(
                &output_dir.join(pipeline::QUERY_VECTORS_QUANTIZED),
            )?
            .into_iter()
            .collect();
            let empty = QuantizedWeights::new();
            let inputs: Vec<(String, &QuantizedWeights)> = queries
                .iter()
                .map(|q| (q.text.clone(), vectors.get(&q.id).unwrap_or(&empty)))
                .collect();
            analysis::latency_benchmark(
                &inputs,
                |qv| {
                    search::search_impact(qv, &segment, k);
                },
                repetitions,
            )?
        }
        IndexKind::Lexical => {
            let analyzer = Analyzer::new(analyzer.parse::<AnalyzerMode>()?);
            let params = Bm25Params {
                k1: bm25_k1,
                b: bm25_b,
            };
            params.validate()?;
            let inputs: Vec<(String, String)> = queries
                .iter()
                .map(|q| (q.text.clone(), q.text.clone()))
                .collect();
            analysis::latency_benchmark(
                &inputs,
                |text: &String| {
                    search::search_bm25(text, &segment, &analyzer, &params, k);
                },
                repetitions,
            )?
        }
    };
    emit(report.to_tsv(), output)
}

fn cmd_analyze_pareto(input: PathBuf, output: Option<PathBuf>) -> Result<()> {
    let raw = std::fs::read_to_string(&input)
        .map_err(|e| Error::parse_file(&input, format!("cannot open: {e}")))?;
    let mut records = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue; // header
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 4 {
            return Err(Error::parse(
                &input,
                i + 1,
                "expected 4 tab-separated fields: system latency_ms ndcg10 index_mb",
            ));
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::parse(&input, i + 1, format!("bad {what} '{s}'")))
        };
        records.push(analysis::ParetoRecord {
            system: parts[0].to_string(),
            latency_ms: parse_f(parts[1], "latency")?,
            ndcg10: parse_f(parts[2], "ndcg10")?,
            index_mb: parse_f(parts[3], "index_mb")?,
        });
    }
    emit(analysis::pareto_table(&records), output)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Aio(args) => {
            let cfg = args.into_config()?;
            let report = pipeline::run_aio(&cfg)?;
            print!("{}", report.to_tsv());
            Ok(())
        }
        Command::Encode(args) => pipeline::step_encode(&args.into_config()?),
        Command::Quantize(args) => pipeline::step_quantize(&args.into_config()?),
        Command::Index(args) => pipeline::step_index(&args.into_config()?),
        Command::Search(args) => pipeline::step_search(&args.into_config()?),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Analyze(args) => match args.kind {
            AnalyzeKind::Sparsity { input, output } => cmd_analyze_sparsity(input, output),
            AnalyzeKind::Latency {
                output_dir,
                data_dir,
                repetitions,
                k,
                analyzer,
                bm25_k1,
                bm25_b,
                output,
            } => cmd_analyze_latency(
                output_dir, data_dir, repetitions, k, analyzer, bm25_k1, bm25_b, output,
            ),
            AnalyzeKind::Pareto { input, output } => cmd_analyze_pareto(input, output),
        },
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
