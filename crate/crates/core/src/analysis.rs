//! Post-hoc studies over run artifacts: representation sparsity statistics,
//! single-thread query latency with word-length binning, and
//! efficiency/effectiveness Pareto tables.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};

/// Distribution of stored (non-zero) entry counts over a vector stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityStats {
    /// Mean number of stored entries per vector.
    pub mean: f64,
    /// Number of vectors seen.
    pub count: usize,
    /// entry count -> number of vectors with that count.
    pub histogram: BTreeMap<usize, usize>,
}

/// Computes sparsity statistics from per-vector stored-entry counts.
pub fn sparsity_stats<I>(entry_counts: I) -> Result<SparsityStats>
where
    I: IntoIterator<Item = usize>,
{
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    let mut total = 0u64;
    let mut count = 0usize;
    for c in entry_counts {
        *histogram.entry(c).or_insert(0) += 1;
        total += c as u64;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Data("no vectors".into()));
    }
    Ok(SparsityStats {
        mean: total as f64 / count as f64,
        count,
        histogram,
    })
}

/// Latency summary of one query word-length bin [lo, hi).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyBin {
    pub lo: usize,
    pub hi: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub n: usize,
}

/// Binned latency profile plus the Pearson correlation of bin means against
/// bin midpoints. The correlation is `None` with fewer than three non-empty
/// bins or when either side has zero variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyReport {
    pub bins: Vec<LatencyBin>,
    pub correlation: Option<f64>,
}

impl LatencyReport {
    /// Tab-separated rendering with a `bin_lo bin_hi mean_ms std_ms n` header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bin_lo\tbin_hi\tmean_ms\tstd_ms\tn\n");
        for b in &self.bins {
            out.push_str(&format!(
                "{}\t{}\t{:.4}\t{:.4}\t{}\n",
                b.lo, b.hi, b.mean_ms, b.std_ms, b.n
            ));
        }
        if let Some(r) = self.correlation {
            out.push_str(&format!("# pearson_r\t{r:.6}\n"));
        } else {
            out.push_str("# pearson_r\tundefined\n");
        }
        out
    }
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 3 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Bins (word length, latency ms) samples into contiguous width-5 intervals
/// starting at the smallest observed length.
pub fn bin_latency_samples(samples: &[(usize, f64)]) -> Result<LatencyReport> {
    if samples.is_empty() {
        return Err(Error::Data("no latency samples".into()));
    }
    let min_len = samples.iter().map(|(l, _)| *l).min().unwrap();
    let max_len = samples.iter().map(|(l, _)| *l).max().unwrap();
    let width = 5usize;
    let n_bins = (max_len - min_len) / width + 1;

    let mut values: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    for (len, ms) in samples {
        values[(len - min_len) / width].push(*ms);
    }

    let mut bins = Vec::with_capacity(n_bins);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, vs) in values.iter().enumerate() {
        let lo = min_len + i * width;
        let hi = lo + width;
        if vs.is_empty() {
            bins.push(LatencyBin {
                lo,
                hi,
                mean_ms: 0.0,
                std_ms: 0.0,
                n: 0,
            });
            continue;
        }
        let n = vs.len() as f64;
        let mean = vs.iter().sum::<f64>() / n;
        let var = vs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        bins.push(LatencyBin {
            lo,
            hi,
            mean_ms: mean,
            std_ms: var.sqrt(),
            n: vs.len(),
        });
        xs.push(lo as f64 + width as f64 / 2.0);
        ys.push(mean);
    }

    Ok(LatencyReport {
        bins,
        correlation: pearson(&xs, &ys),
    })
}

/// Times `run_query` over the query set on the calling thread and bins the
/// results by the whitespace word count of the query text.
///
/// Each pair carries the raw query text (for word counting) and whatever
/// payload the engine consumes. Every query gets one untimed warmup pass,
/// then `repetitions` timed runs; the per-query sample is the median, which
/// damps scheduler noise. Only the search call is inside the timer.
pub fn latency_benchmark<Q, F>(
    queries: &[(String, Q)],
    mut run_query: F,
    repetitions: usize,
) -> Result<LatencyReport>
where
    F: FnMut(&Q),
{
    if queries.is_empty() {
        return Err(Error::Data("no queries".into()));
    }
    let repetitions = repetitions.max(1);

    for (_, payload) in queries {
        run_query(payload);
    }

    let mut samples = Vec::with_capacity(queries.len());
    let mut times = Vec::with_capacity(repetitions);
    for (text, payload) in queries {
        times.clear();
        for _ in 0..repetitions {
            let start = Instant::now();
            run_query(payload);
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
        times.sort_by(f64::total_cmp);
        let median = times[times.len() / 2];
        let word_len = text.split_whitespace().count();
        samples.push((word_len, median));
    }
    bin_latency_samples(&samples)
}

/// One system's operating point for the Pareto study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoRecord {
    pub system: String,
    pub latency_ms: f64,
    pub ndcg10: f64,
    pub index_mb: f64,
}

/// Frontier flags, parallel to `records`. A record is dominated iff another
/// record has strictly lower latency and not-lower nDCG, or equal latency and
/// strictly higher nDCG; identical records are both on the frontier.
pub fn pareto_frontier(records: &[ParetoRecord]) -> Vec<bool> {
    records
        .iter()
        .map(|r| {
            !records.iter().any(|other| {
                (other.latency_ms < r.latency_ms && other.ndcg10 >= r.ndcg10)
                    || (other.latency_ms == r.latency_ms && other.ndcg10 > r.ndcg10)
            })
        })
        .collect()
}

/// Tab-separated Pareto table: `system latency_ms ndcg10 index_mb frontier`.
pub fn pareto_table(records: &[ParetoRecord]) -> String {
    let flags = pareto_frontier(records);
    let mut out = String::from("system\tlatency_ms\tndcg10\tindex_mb\tfrontier\n");
    for (r, on) in records.iter().zip(flags) {
        out.push_str(&format!(
            "{}\t{:.2}\t{:.4}\t{:.2}\t{}\n",
            r.system,
            r.latency_ms,
            r.ndcg10,
            r.index_mb,
            if on { "yes" } else { "no" }
        ));
    }
    out
}
