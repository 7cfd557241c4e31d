//! Sparse retrieval engine and evaluation toolkit.
//!
//! The crate implements the full inference path for learned sparse retrieval
//! over BEIR-format datasets: encode texts into sparse term-weight vectors,
//! quantize the weights into integer impacts, build an inverted impact index,
//! search it with integer dot products (or BM25 over a lexical index), and
//! score the results against relevance judgments. An `analysis` module adds
//! sparsity statistics, single-thread latency profiling, and Pareto-frontier
//! reporting on top of the run artifacts.
//!
//! The `sprint` binary wires these pieces into an `aio` (all-in-one) pipeline
//! plus per-step subcommands; see the crate README for usage.

pub mod analysis;
pub mod analyzer;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod expansion;
pub mod index;
pub mod pipeline;
pub mod quant;
pub mod repr;
pub mod search;

pub use analyzer::{Analyzer, AnalyzerMode};
pub use error::{Error, Result};
pub use index::ImpactIndex;
pub use quant::{QuantizationConfig, QuantizationMethod};
pub use repr::{QuantizedWeights, TermWeightVector, Vocabulary};
pub use search::{Bm25Params, RankedList};
