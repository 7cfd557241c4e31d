//! Acceptance suite: one criterion per function, all run sequentially from a
//! single test so the latency study is not perturbed by sibling tests.
//!
//! Prints one line per criterion:
//!
//! ```text
//! ACCEPTANCE <n> <name>: PASS | FAIL (<why>) | SKIPPED (<why>)
//! ```
//!
//! Run with `cargo test -p sprint-core --test acceptance -- --nocapture`.
//!
//! Criterion 1 reproduces published BM25 baselines and needs the real BEIR
//! datasets (scifact, nfcorpus) under `$SPRINT_BEIR_DIR`; it reports SKIPPED
//! when they are not present.

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sprint_core::analysis;
use sprint_core::analyzer::AnalyzerMode;
use sprint_core::dataio::Qrels;
use sprint_core::eval;
use sprint_core::index::build_impact_index;
use sprint_core::pipeline::{self, FirstStage, PipelineConfig};
use sprint_core::quant::{self, QuantizationConfig, QuantizationMethod};
use sprint_core::repr::{
    sparta_term_weights, splade_term_weights, strip_expansion_impacts,
    EmbeddingMatrix, QuantizedWeights, SpartaParams, TokenScoreMatrix, Vocabulary,
};
use sprint_core::search::{search_impact, RankedList};

enum Outcome {
    Pass,
    Fail(String),
    Skipped(String),
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: &[Criterion] = &[
    (1, "bm25_beir_reproduction", c1_bm25_beir_reproduction),
    (2, "ranking_oracle_equivalence", c2_ranking_oracle),
    (3, "representation_oracle", c3_representation_oracle),
    (4, "quantization_properties", c4_quantization_properties),
    (5, "metric_parity", c5_metric_parity),
    (6, "expansion_ablation_dominance", c6_expansion_ablation),
    (7, "latency_linearity", c7_latency_linearity),
    (8, "determinism", c8_determinism),
];

#[test]
fn acceptance() {
    let mut failures = Vec::new();
    for (num, name, run) in CRITERIA {
        match run() {
            Outcome::Pass => println!("ACCEPTANCE {num} {name}: PASS"),
            Outcome::Fail(why) => {
                println!("ACCEPTANCE {num} {name}: FAIL ({why})");
                failures.push(format!("{num} {name}: {why}"));
            }
            Outcome::Skipped(why) => println!("ACCEPTANCE {num} {name}: SKIPPED ({why})"),
        }
    }
    assert!(
        failures.is_empty(),
        "acceptance criteria failed:\n{}",
        failures.join("\n")
    );
}

fn fail(msg: impl Into<String>) -> Outcome {
    Outcome::Fail(msg.into())
}

// --- criterion 1: BM25 reproduction on BEIR -------------------------------

/// Published nDCG@10 baselines with the tolerance that absorbs
/// analyzer-variant drift.
const BM25_BASELINES: &[(&str, f64)] = &[("scifact", 0.665), ("nfcorpus", 0.325)];
const BM25_TOLERANCE: f64 = 0.02;

fn beir_root() -> PathBuf {
    std::env::var_os("SPRINT_BEIR_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/beir")
        })
}

fn c1_bm25_beir_reproduction() -> Outcome {
    let root = beir_root();
    let missing: Vec<&str> = BM25_BASELINES
        .iter()
        .filter(|(name, _)| !root.join(name).join("corpus.jsonl").exists())
        .map(|(name, _)| *name)
        .collect();
    if !missing.is_empty() {
        return Outcome::Skipped(format!(
            "BEIR datasets not found under {} (missing: {}); set SPRINT_BEIR_DIR",
            root.display(),
            missing.join(", ")
        ));
    }

    for (name, expected) in BM25_BASELINES {
        let started = Instant::now();
        let out = tempfile::tempdir().unwrap();
        let mut cfg = PipelineConfig::new(root.join(name), out.path());
        cfg.first_stage = FirstStage::Bm25;
        cfg.analyzer = AnalyzerMode::EnglishPorter;
        cfg.bm25_k1 = 0.9;
        cfg.bm25_b = 0.4;
        cfg.k = 1000;
        let report = match pipeline::run_aio(&cfg) {
            Ok(r) => r,
            Err(e) => return fail(format!("{name}: pipeline failed: {e}")),
        };
        let got = report.mean("ndcg@10").unwrap_or(0.0);
        let elapsed = started.elapsed();
        if (got - expected).abs() > BM25_TOLERANCE {
            return fail(format!(
                "{name}: nDCG@10 = {got:.4}, expected {expected} +/- {BM25_TOLERANCE}"
            ));
        }
        if elapsed.as_secs() >= 600 {
            return fail(format!("{name}: took {elapsed:?}, limit 10 min"));
        }
        println!("  bm25 {name}: nDCG@10 = {got:.4} (reference {expected}) in {elapsed:?}");
    }
    Outcome::Pass
}

// --- criterion 2: exhaustive-scoring oracle equivalence -------------------

fn brute_force_ranking(
    query: &QuantizedWeights,
    docs: &[(String, QuantizedWeights)],
    k: usize,
) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, u64)> = docs
        .iter()
        .map(|(id, v)| (id.clone(), query.dot(v)))
        .filter(|(_, s)| *s > 0)
        .collect();
    scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored.into_iter().map(|(id, s)| (id, s as f64)).collect()
}

fn c2_ranking_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    for corpus_i in 0..50 {
        let n_docs = rng.gen_range(50..=1000);
        let vocab_size = rng.gen_range(10..=500);
        let docs: Vec<(String, QuantizedWeights)> = (0..n_docs)
            .map(|d| {
                let mut v = QuantizedWeights::new();
                for _ in 0..rng.gen_range(1..=8) {
                    v.insert(format!("t{}", rng.gen_range(0..vocab_size)), rng.gen_range(1..=100));
                }
                (format!("d{d:05}"), v)
            })
            .collect();
        let index = build_impact_index(docs.clone(), BTreeMap::new()).unwrap();

        for query_i in 0..20 {
            let mut q = QuantizedWeights::new();
            for _ in 0..rng.gen_range(1..=5) {
                q.insert(format!("t{}", rng.gen_range(0..vocab_size)), rng.gen_range(1..=10));
            }
            let k = rng.gen_range(1..=50);
            let got = search_impact(&q, &index, k);
            let want = brute_force_ranking(&q, &docs, k);
            if got.hits != want {
                return fail(format!(
                    "corpus {corpus_i} query {query_i}: engine != brute force"
                ));
            }
        }
    }
    let elapsed = started.elapsed();
    if elapsed.as_secs() >= 60 {
        return fail(format!("took {elapsed:?}, limit 1 min"));
    }
    Outcome::Pass
}

// --- criterion 3: representation math vs scalar-loop oracles --------------

fn c3_representation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    for instance in 0..1000 {
        let vocab_size = rng.gen_range(1..=16);
        let passage_len = rng.gen_range(1..=8);
        let dim = rng.gen_range(1..=8);
        let vocab = Vocabulary::new((0..vocab_size).map(|i| format!("t{i}"))).unwrap();

        // max-dot-product encoder
        let e_rows: Vec<Vec<f64>> = (0..vocab_size)
            .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let s_rows: Vec<Vec<f64>> = (0..passage_len)
            .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let bias: f64 = rng.gen_range(-1.0..1.0);
        let e = EmbeddingMatrix::new(vocab_size, dim, e_rows.concat()).unwrap();
        let s = EmbeddingMatrix::new(passage_len, dim, s_rows.concat()).unwrap();
        let got = sparta_term_weights(&vocab, &e, &s, &SpartaParams { bias }).unwrap();
        for (i, e_row) in e_rows.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for s_row in &s_rows {
                let mut dot = 0.0;
                for (a, b) in e_row.iter().zip(s_row) {
                    dot += a * b;
                }
                best = best.max(dot);
            }
            let z = best + bias;
            let want = ((if z > 0.0 { z } else { 0.0 }) + 1.0).ln();
            let g = got.get(&format!("t{i}")).unwrap_or(0.0);
            if (g - want).abs() >= 1e-9 {
                return fail(format!(
                    "instance {instance}: max-dot token {i}: {g} vs {want}"
                ));
            }
        }

        // log-saturated max-pooling encoder
        let w_rows: Vec<Vec<f64>> = (0..vocab_size)
            .map(|_| (0..passage_len).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let m = TokenScoreMatrix::new(vocab_size, passage_len, w_rows.concat()).unwrap();
        let got = splade_term_weights(&vocab, &m).unwrap();
        for (i, row) in w_rows.iter().enumerate() {
            let mut want = 0.0f64;
            for &x in row {
                let v = (1.0 + if x > 0.0 { x } else { 0.0 }).ln();
                want = want.max(v);
            }
            let g = got.get(&format!("t{i}")).unwrap_or(0.0);
            if (g - want).abs() >= 1e-9 {
                return fail(format!(
                    "instance {instance}: pooled token {i}: {g} vs {want}"
                ));
            }
        }
    }
    Outcome::Pass
}

// --- criterion 4: quantization monotonicity, bounds, worked values --------

fn c4_quantization_properties() -> Outcome {
    let cfg = QuantizationConfig {
        method: QuantizationMethod::RangeNbits,
        original_score_range: 5.0,
        nbits: 8,
    };
    match quant::quantize_range_nbits(2.5, &cfg) {
        Ok(128) => {}
        other => return fail(format!("2.5 @ R=5,b=8 -> {other:?}, expected 128")),
    }
    match quant::quantize_scale100(1.234) {
        Ok(123) => {}
        other => return fail(format!("1.234 scale-100 -> {other:?}, expected 123")),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);

    // range-nbits over several bit widths
    for &nbits in &[2u8, 8, 16] {
        let cfg = QuantizationConfig {
            method: QuantizationMethod::RangeNbits,
            original_score_range: 5.0,
            nbits,
        };
        let top = (1u32 << nbits) - 1;
        let mut weights: Vec<f64> = (0..100_000).map(|_| rng.gen_range(1e-9..10.0)).collect();
        weights.sort_by(f64::total_cmp);
        let mut prev = 0u32;
        for &w in &weights {
            let q = match quant::quantize_range_nbits(w, &cfg) {
                Ok(q) => q,
                Err(e) => return fail(format!("range-nbits({w}) errored: {e}")),
            };
            if q < 1 || q > top {
                return fail(format!("range-nbits({w}) = {q} outside [1, {top}]"));
            }
            if q < prev {
                return fail(format!("range-nbits not monotone at w={w}: {q} < {prev}"));
            }
            prev = q;
        }
    }

    // scale-100
    let mut weights: Vec<f64> = (0..100_000).map(|_| rng.gen_range(1e-9..1e4)).collect();
    weights.sort_by(f64::total_cmp);
    let mut prev = 0u32;
    for &w in &weights {
        let q = match quant::quantize_scale100(w) {
            Ok(q) => q,
            Err(e) => return fail(format!("scale-100({w}) errored: {e}")),
        };
        if q < 1 {
            return fail(format!("scale-100({w}) = {q} below 1"));
        }
        if q < prev {
            return fail(format!("scale-100 not monotone at w={w}: {q} < {prev}"));
        }
        prev = q;
    }
    Outcome::Pass
}

// --- criterion 5: metric parity against an independent oracle -------------

/// Direct-formula scorer kept deliberately separate from the eval module:
/// plain loops over (query, ranked docs, grade map) triples.
mod metric_oracle {
    use std::collections::BTreeMap;

    pub struct Fixture {
        /// query -> ranked doc ids (may omit qrels queries)
        pub runs: BTreeMap<String, Vec<String>>,
        /// query -> doc -> grade
        pub qrels: BTreeMap<String, BTreeMap<String, u32>>,
    }

    fn dcg(gains: &[f64]) -> f64 {
        gains
            .iter()
            .enumerate()
            .map(|(i, g)| g / ((i + 2) as f64).log2())
            .sum()
    }

    pub fn ndcg(ranked: &[String], grades: &BTreeMap<String, u32>, k: usize) -> f64 {
        let gains: Vec<f64> = ranked
            .iter()
            .take(k)
            .map(|d| {
                let g = grades.get(d).copied().unwrap_or(0);
                (2f64).powi(g as i32) - 1.0
            })
            .collect();
        let mut ideal: Vec<f64> = grades
            .values()
            .map(|&g| (2f64).powi(g as i32) - 1.0)
            .collect();
        ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ideal.truncate(k);
        let idcg = dcg(&ideal);
        if idcg == 0.0 {
            0.0
        } else {
            dcg(&gains) / idcg
        }
    }

    pub fn rr(ranked: &[String], grades: &BTreeMap<String, u32>, k: usize) -> f64 {
        for (i, d) in ranked.iter().take(k).enumerate() {
            if grades.get(d).copied().unwrap_or(0) > 0 {
                return 1.0 / (i as f64 + 1.0);
            }
        }
        0.0
    }

    pub fn recall(ranked: &[String], grades: &BTreeMap<String, u32>, k: usize) -> f64 {
        let relevant: Vec<&String> = grades.iter().filter(|(_, &g)| g > 0).map(|(d, _)| d).collect();
        if relevant.is_empty() {
            return 0.0;
        }
        let retrieved = ranked
            .iter()
            .take(k)
            .filter(|d| grades.get(*d).copied().unwrap_or(0) > 0)
            .count();
        retrieved as f64 / relevant.len() as f64
    }

    /// Macro averages over qrels queries with at least one relevant doc;
    /// queries missing from the run contribute zeros.
    pub fn macro_averages(fixture: &Fixture, k: usize) -> (f64, f64, f64, usize) {
        let empty: Vec<String> = Vec::new();
        let mut n = 0usize;
        let (mut s_ndcg, mut s_rr, mut s_recall) = (0.0, 0.0, 0.0);
        for (qid, grades) in &fixture.qrels {
            if !grades.values().any(|&g| g > 0) {
                continue;
            }
            n += 1;
            let ranked = fixture.runs.get(qid).unwrap_or(&empty);
            s_ndcg += ndcg(ranked, grades, k);
            s_rr += rr(ranked, grades, k);
            s_recall += recall(ranked, grades, k);
        }
        if n == 0 {
            (0.0, 0.0, 0.0, 0)
        } else {
            (s_ndcg / n as f64, s_rr / n as f64, s_recall / n as f64, n)
        }
    }
}

fn c5_metric_parity() -> Outcome {
    // exact spot value: single relevant doc at rank 2
    {
        let mut qrels = Qrels::new();
        qrels.insert("q", "rel", 1).unwrap();
        let run = RankedList {
            query_id: "q".into(),
            hits: vec![("other".into(), 2.0), ("rel".into(), 1.0)],
        };
        let got = eval::ndcg_at_k(&run, &qrels, 10);
        let want = 1.0 / 3f64.log2();
        if (got - want).abs() > 1e-12 {
            return fail(format!("spot nDCG {got} != {want}"));
        }
        if (got - 0.6309).abs() > 1e-4 {
            return fail(format!("spot nDCG {got} != 0.6309"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    for fixture_i in 0..100 {
        let n_queries = rng.gen_range(5..=20);
        let n_docs = rng.gen_range(5..=30);
        let doc_pool: Vec<String> = (0..n_docs).map(|d| format!("d{d}")).collect();

        let mut fixture = metric_oracle::Fixture {
            runs: BTreeMap::new(),
            qrels: BTreeMap::new(),
        };
        let mut qrels = Qrels::new();
        let mut runs: Vec<RankedList> = Vec::new();

        for qi in 0..n_queries {
            let qid = format!("q{qi}");
            let mut grades = BTreeMap::new();
            for doc in &doc_pool {
                if rng.gen_bool(0.3) {
                    let grade = rng.gen_range(0..=3u32);
                    grades.insert(doc.clone(), grade);
                    qrels.insert(&qid, doc, grade).unwrap();
                }
            }
            fixture.qrels.insert(qid.clone(), grades);

            // some queries are missing from the run entirely
            if rng.gen_bool(0.85) {
                let mut ranked = doc_pool.clone();
                for i in (1..ranked.len()).rev() {
                    ranked.swap(i, rng.gen_range(0..=i));
                }
                ranked.truncate(rng.gen_range(1..=n_docs));
                runs.push(RankedList {
                    query_id: qid.clone(),
                    hits: ranked
                        .iter()
                        .enumerate()
                        .map(|(i, d)| (d.clone(), (ranked.len() - i) as f64))
                        .collect(),
                });
                fixture.runs.insert(qid, ranked);
            }
        }

        for k in [5usize, 10] {
            let report = eval::evaluate_rankings(&runs, &qrels, &[k]);
            let (ndcg, rr, recall, n) = metric_oracle::macro_averages(&fixture, k);
            if report.evaluated_queries != n {
                return fail(format!(
                    "fixture {fixture_i}: evaluated {} queries, oracle {n}",
                    report.evaluated_queries
                ));
            }
            let checks = [
                ("ndcg", report.mean(&format!("ndcg@{k}")).unwrap_or(0.0), ndcg),
                ("mrr", report.mean(&format!("mrr@{k}")).unwrap_or(0.0), rr),
                (
                    "recall",
                    report.mean(&format!("recall@{k}")).unwrap_or(0.0),
                    recall,
                ),
            ];
            for (name, got, want) in checks {
                if (got - want).abs() > 1e-6 {
                    return fail(format!(
                        "fixture {fixture_i} {name}@{k}: {got} vs oracle {want}"
                    ));
                }
            }
        }
    }
    Outcome::Pass
}

// --- criterion 6: expansion ablation dominance -----------------------------

fn c6_expansion_ablation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
    let original_pool: Vec<String> = (0..20).map(|i| format!("orig{i:02}")).collect();
    let expansion_pool: Vec<String> = (0..10).map(|i| format!("exp{i:02}")).collect();

    // Build 50 docs; half get injected expansion tokens.
    let mut full_docs: Vec<(String, QuantizedWeights)> = Vec::new();
    let mut stripped_docs: Vec<(String, QuantizedWeights)> = Vec::new();
    for d in 0..50 {
        let id = format!("d{d:02}");
        let mut original_tokens = HashSet::new();
        let mut v = QuantizedWeights::new();
        for _ in 0..rng.gen_range(3..=6) {
            let tok = &original_pool[rng.gen_range(0..original_pool.len())];
            original_tokens.insert(tok.clone());
            v.insert(tok.clone(), rng.gen_range(1..=9));
        }
        if d % 2 == 0 {
            for _ in 0..rng.gen_range(1..=3) {
                let tok = &expansion_pool[rng.gen_range(0..expansion_pool.len())];
                v.insert(tok.clone(), rng.gen_range(1..=9));
            }
        }
        let stripped = strip_expansion_impacts(&v, &original_tokens);
        full_docs.push((id.clone(), v));
        stripped_docs.push((id, stripped));
    }

    // Per-document dominance for arbitrary non-negative queries.
    for _ in 0..200 {
        let mut q = QuantizedWeights::new();
        for _ in 0..rng.gen_range(1..=4) {
            let tok = if rng.gen_bool(0.5) {
                &original_pool[rng.gen_range(0..original_pool.len())]
            } else {
                &expansion_pool[rng.gen_range(0..expansion_pool.len())]
            };
            q.insert(tok.clone(), rng.gen_range(1..=5));
        }
        for ((id, full), (_, stripped)) in full_docs.iter().zip(&stripped_docs) {
            if q.dot(stripped) > q.dot(full) {
                return fail(format!("doc {id}: stripped score exceeds full score"));
            }
        }
    }

    // Retrieval-level check with queries that only match expansion tokens.
    let full_index = build_impact_index(full_docs.clone(), BTreeMap::new()).unwrap();
    let stripped_index = build_impact_index(stripped_docs.clone(), BTreeMap::new()).unwrap();

    let mut qrels = Qrels::new();
    let mut full_runs = Vec::new();
    let mut stripped_runs = Vec::new();
    for (qi, exp_tok) in expansion_pool.iter().enumerate() {
        let qid = format!("q{qi}");
        for (id, v) in &full_docs {
            if v.get(exp_tok).is_some() {
                qrels.insert(&qid, id, 1).unwrap();
            }
        }
        let query = QuantizedWeights::from_entries([(exp_tok.clone(), 1u32)]).unwrap();
        let mut full = search_impact(&query, &full_index, 10);
        full.query_id = qid.clone();
        full_runs.push(full);
        let mut stripped = search_impact(&query, &stripped_index, 10);
        stripped.query_id = qid.clone();
        stripped_runs.push(stripped);
    }

    let full_report = eval::evaluate_rankings(&full_runs, &qrels, &[10]);
    let stripped_report = eval::evaluate_rankings(&stripped_runs, &qrels, &[10]);
    let full_ndcg = full_report.mean("ndcg@10").unwrap_or(0.0);
    let stripped_ndcg = stripped_report.mean("ndcg@10").unwrap_or(0.0);
    if stripped_ndcg > full_ndcg {
        return fail(format!(
            "stripped macro nDCG@10 {stripped_ndcg:.4} improved over full {full_ndcg:.4}"
        ));
    }
    if full_ndcg <= 0.0 {
        return fail("expansion-only queries found nothing in the full index");
    }
    Outcome::Pass
}

// --- criterion 7: latency scales with query length -------------------------

fn thread_count() -> Option<usize> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find(|l| l.starts_with("Threads:"))?
        .split_whitespace()
        .nth(1)?
        .parse()
        .ok()
}

fn c7_latency_linearity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    let vocab_size = 5000usize;
    let n_docs = 100_000usize;
    let tokens_per_doc = 10usize;

    let docs: Vec<(String, QuantizedWeights)> = (0..n_docs)
        .map(|d| {
            let mut v = QuantizedWeights::new();
            while v.len() < tokens_per_doc {
                v.insert(
                    format!("t{:04}", rng.gen_range(0..vocab_size)),
                    rng.gen_range(1..=16),
                );
            }
            (format!("d{d:06}"), v)
        })
        .collect();
    let index = build_impact_index(docs, BTreeMap::new()).unwrap();

    // 12 queries per controlled length 5, 10, ..., 40.
    let mut queries: Vec<(String, QuantizedWeights)> = Vec::new();
    for len in (5..=40).step_by(5) {
        for _ in 0..12 {
            let mut toks = Vec::new();
            let mut seen = HashSet::new();
            while toks.len() < len {
                let t = format!("t{:04}", rng.gen_range(0..vocab_size));
                if seen.insert(t.clone()) {
                    toks.push(t);
                }
            }
            let text = toks.join(" ");
            let mut qv = QuantizedWeights::new();
            for t in toks {
                qv.insert(t, 1);
            }
            queries.push((text, qv));
        }
    }

    let threads_before = thread_count();
    let report = match analysis::latency_benchmark(
        &queries,
        |qv: &QuantizedWeights| {
            search_impact(qv, &index, 10);
        },
        5,
    ) {
        Ok(r) => r,
        Err(e) => return fail(format!("benchmark failed: {e}")),
    };
    let threads_after = thread_count();

    match (threads_before, threads_after) {
        (Some(before), Some(after)) if before == after => {}
        (Some(before), Some(after)) => {
            return fail(format!(
                "thread count changed during benchmark: {before} -> {after}"
            ))
        }
        _ => return fail("could not verify single-thread execution"),
    }

    let Some(r) = report.correlation else {
        return fail("correlation undefined");
    };
    // Relaxed from the full-scale >0.99 observation; pinned at desk scale.
    if r <= 0.9 {
        return fail(format!("pearson r = {r:.4}, need > 0.9"));
    }
    println!("  latency/word-length pearson r = {r:.4}");
    for bin in report.bins.iter().filter(|b| b.n > 0) {
        println!(
            "  bin [{:2}, {:2}): {:8.4} +/- {:.4} ms (n={})",
            bin.lo, bin.hi, bin.mean_ms, bin.std_ms, bin.n
        );
    }
    Outcome::Pass
}

// --- criterion 8: byte-identical reruns -------------------------------------

fn c8_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    std::fs::create_dir_all(data.join("qrels")).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let word_pool: Vec<String> = (0..60).map(|i| format!("word{i:02}")).collect();
    let mut corpus = String::new();
    for d in 0..200 {
        let words: Vec<&str> = (0..rng.gen_range(5..=30))
            .map(|_| word_pool[rng.gen_range(0..word_pool.len())].as_str())
            .collect();
        corpus.push_str(&format!(
            "{{\"_id\":\"d{d:03}\",\"title\":\"\",\"text\":\"{}\"}}\n",
            words.join(" ")
        ));
    }
    std::fs::write(data.join("corpus.jsonl"), corpus).unwrap();
    let mut queries = String::new();
    for q in 0..25 {
        let words: Vec<&str> = (0..rng.gen_range(1..=4))
            .map(|_| word_pool[rng.gen_range(0..word_pool.len())].as_str())
            .collect();
        queries.push_str(&format!(
            "{{\"_id\":\"q{q:02}\",\"text\":\"{}\"}}\n",
            words.join(" ")
        ));
    }
    std::fs::write(data.join("queries.jsonl"), queries).unwrap();
    std::fs::write(
        data.join("qrels/test.tsv"),
        "query-id\tcorpus-id\tscore\nq00\td000\t1\n",
    )
    .unwrap();

    type Artifacts = (Vec<u8>, Vec<u8>, Vec<u8>, Vec<u8>);
    let mut artifacts: Vec<Artifacts> = Vec::new();
    for (i, threads) in [1usize, 4, 1].iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let mut cfg = PipelineConfig::new(&data, &out);
        cfg.threads = *threads;
        cfg.do_quantization = true;
        cfg.quantization = QuantizationConfig {
            method: QuantizationMethod::RangeNbits,
            original_score_range: 5.0,
            nbits: 8,
        };
        if let Err(e) = pipeline::run_aio(&cfg) {
            return fail(format!("run {i} failed: {e}"));
        }
        let seg = out.join(pipeline::SEGMENT_DIR);
        artifacts.push((
            std::fs::read(out.join(pipeline::RUN_FILE)).unwrap(),
            std::fs::read(seg.join("postings.bin")).unwrap(),
            std::fs::read(seg.join("docs.tsv")).unwrap(),
            std::fs::read(seg.join("meta.json")).unwrap(),
        ));
    }
    if artifacts[0] != artifacts[1] {
        return fail("threads=1 and threads=4 runs differ");
    }
    if artifacts[0] != artifacts[2] {
        return fail("identical reruns differ");
    }
    Outcome::Pass
}
