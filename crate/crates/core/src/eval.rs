//! Run scoring: nDCG@k, MRR@k and Recall@k per query plus macro-averaged
//! reports with trec_eval-style conventions.
//!
//! Gains are exponential (2^grade - 1), which reduces to linear gain on
//! binary judgments. Macro averages run over the qrels queries that have at
//! least one relevant document; the number of excluded queries is reported.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::dataio::{self, Qrels};
use crate::error::Result;
use crate::search::RankedList;

fn gain(grade: u32) -> f64 {
    2f64.powi(grade as i32) - 1.0
}

fn discount(rank: usize) -> f64 {
    // ranks are 1-based; discount = log2(rank + 1)
    ((rank + 1) as f64).log2()
}

/// Normalized discounted cumulative gain at cutoff k, or 0 when the query has
/// no relevant documents.
pub fn ndcg_at_k(run: &RankedList, qrels: &Qrels, k: usize) -> f64 {
    let Some(grades) = qrels.query_grades(&run.query_id) else {
        return 0.0;
    };
    let mut dcg = 0.0;
    for (i, (doc_id, _)) in run.hits.iter().take(k).enumerate() {
        let g = grades.get(doc_id).copied().unwrap_or(0);
        if g > 0 {
            dcg += gain(g) / discount(i + 1);
        }
    }

    let mut ideal: Vec<u32> = grades.values().copied().filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) / discount(i + 1))
        .sum();

    if idcg > 0.0 {
        dcg / idcg
    } else {
        0.0
    }
}

/// Reciprocal rank of the first relevant document within the top k, else 0.
pub fn mrr_at_k(run: &RankedList, qrels: &Qrels, k: usize) -> f64 {
    for (i, (doc_id, _)) in run.hits.iter().take(k).enumerate() {
        if qrels.grade(&run.query_id, doc_id) > 0 {
            return 1.0 / (i + 1) as f64;
        }
    }
    0.0
}

/// Fraction of this query's relevant documents retrieved in the top k, or 0
/// when the query has no relevant documents.
pub fn recall_at_k(run: &RankedList, qrels: &Qrels, k: usize) -> f64 {
    let Some(grades) = qrels.query_grades(&run.query_id) else {
        return 0.0;
    };
    let total_relevant = grades.values().filter(|&&g| g > 0).count();
    if total_relevant == 0 {
        return 0.0;
    }
    let hit = run
        .hits
        .iter()
        .take(k)
        .filter(|(doc_id, _)| grades.get(doc_id).copied().unwrap_or(0) > 0)
        .count();
    hit as f64 / total_relevant as f64
}

/// Per-query metric values and macro-averages over one run.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MetricReport {
    /// Cutoffs the metrics were computed at.
    pub ks: Vec<usize>,
    /// metric label (e.g. "ndcg@10") -> macro average.
    pub means: BTreeMap<String, f64>,
    /// query id -> metric label -> value.
    pub per_query: BTreeMap<String, BTreeMap<String, f64>>,
    /// Queries contributing to the macro average.
    pub evaluated_queries: usize,
    /// Qrels queries skipped for lack of any relevant document.
    pub excluded_queries: usize,
}

impl MetricReport {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.means.get(metric).copied()
    }

    /// Tab-separated rendering: a `mean` block then one row per query.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("query\tmetric\tvalue\n");
        for (metric, value) in &self.means {
            out.push_str(&format!("all\t{metric}\t{value:.6}\n"));
        }
        out.push_str(&format!("all\tevaluated_queries\t{}\n", self.evaluated_queries));
        out.push_str(&format!("all\texcluded_queries\t{}\n", self.excluded_queries));
        for (qid, metrics) in &self.per_query {
            for (metric, value) in metrics {
                out.push_str(&format!("{qid}\t{metric}\t{value:.6}\n"));
            }
        }
        out
    }
}

/// Scores ranked lists against qrels at each cutoff in `ks`.
///
/// Every qrels query with at least one relevant document contributes to the
/// macro average; queries absent from the run score 0 on all metrics.
pub fn evaluate_rankings(runs: &[RankedList], qrels: &Qrels, ks: &[usize]) -> MetricReport {
    let by_query: BTreeMap<&str, &RankedList> = runs
        .iter()
        .map(|r| (r.query_id.as_str(), r))
        .collect();

    let mut per_query: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    let mut evaluated = 0usize;
    let mut excluded = 0usize;

    for qid in qrels.query_ids() {
        if !qrels.has_relevant(qid) {
            excluded += 1;
            continue;
        }
        evaluated += 1;
        let empty = RankedList::empty(qid);
        let run = by_query.get(qid).copied().unwrap_or(&empty);
        let mut metrics = BTreeMap::new();
        for &k in ks {
            metrics.insert(format!("ndcg@{k}"), ndcg_at_k(run, qrels, k));
            metrics.insert(format!("mrr@{k}"), mrr_at_k(run, qrels, k));
            metrics.insert(format!("recall@{k}"), recall_at_k(run, qrels, k));
        }
        for (m, v) in &metrics {
            *sums.entry(m.clone()).or_insert(0.0) += v;
        }
        per_query.insert(qid.to_string(), metrics);
    }

    let means = sums
        .into_iter()
        .map(|(m, s)| (m, if evaluated > 0 { s / evaluated as f64 } else { 0.0 }))
        .collect();

    MetricReport {
        ks: ks.to_vec(),
        means,
        per_query,
        evaluated_queries: evaluated,
        excluded_queries: excluded,
    }
}

/// Parses a run file and qrels file, then scores them with
/// [`evaluate_rankings`].
pub fn evaluate_run(run_path: &Path, qrels_path: &Path, ks: &[usize]) -> Result<MetricReport> {
    let entries = dataio::read_run(run_path)?;
    let runs = dataio::group_run_by_query(&entries);
    let qrels = dataio::read_qrels(qrels_path)?;
    Ok(evaluate_rankings(&runs, &qrels, ks))
}
