//! Query processing over an [`ImpactIndex`]: integer impact dot products,
//! BM25 over a lexical index, and second-stage reranking.
//!
//! All rankings share one tie-break rule: score descending, then external
//! doc id ascending. Ordinals are assigned in ascending doc-id order, so
//! ordinal order and id order agree.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::HashMap;

use crate::analyzer::Analyzer;
use crate::error::{Error, Result};
use crate::index::{ImpactIndex, Posting};
use crate::repr::QuantizedWeights;

/// Top-k hits for one query, scores non-increasing, ties by ascending doc id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: String,
    /// (external doc id, score) pairs in rank order.
    pub hits: Vec<(String, f64)>,
}

impl RankedList {
    pub fn empty(query_id: impl Into<String>) -> Self {
        RankedList {
            query_id: query_id.into(),
            hits: Vec::new(),
        }
    }
}

/// BM25 parameters; defaults mirror common inverted-index defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !self.k1.is_finite() || self.k1 <= 0.0 {
            return Err(Error::Config(format!("k1 must be positive, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Config(format!("b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

/// Candidate in the bounded top-k heap; orders worst-first so the heap root
/// is the entry to evict. Lower score is worse; on ties the higher ordinal
/// (larger doc id) is worse.
#[derive(Debug, PartialEq)]
struct HeapEntry {
    score: f64,
    ordinal: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.ordinal.cmp(&other.ordinal))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Bounded top-k selection; input scores must be final per ordinal.
fn collect_top_k(
    scored: impl Iterator<Item = (u32, f64)>,
    k: usize,
    index: &ImpactIndex,
) -> Vec<(String, f64)> {
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(k + 1);
    for (ordinal, score) in scored {
        heap.push(HeapEntry { score, ordinal });
        if heap.len() > k {
            heap.pop();
        }
    }
    let mut entries = heap.into_vec();
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.ordinal.cmp(&b.ordinal)));
    entries
        .into_iter()
        .map(|e| (index.doc_id(e.ordinal).to_string(), e.score))
        .collect()
}

/// Cursor over one posting list with the query-side weight attached.
struct Cursor<'a, W> {
    weight: W,
    list: &'a [Posting],
    pos: usize,
}

/// Document-at-a-time traversal of the query terms' posting lists, invoking
/// `emit(ordinal, (query weight, impact) pairs)` once per matching document
/// in ordinal order.
fn daat<W: Copy>(mut cursors: Vec<Cursor<'_, W>>, mut emit: impl FnMut(u32, &[(W, u32)])) {
    let mut at_doc: Vec<(W, u32)> = Vec::with_capacity(cursors.len());
    loop {
        let mut next_doc = u32::MAX;
        let mut exhausted = true;
        for c in &cursors {
            if c.pos < c.list.len() {
                exhausted = false;
                next_doc = next_doc.min(c.list[c.pos].doc);
            }
        }
        if exhausted {
            return;
        }
        at_doc.clear();
        for c in &mut cursors {
            if c.pos < c.list.len() && c.list[c.pos].doc == next_doc {
                at_doc.push((c.weight, c.list[c.pos].impact));
                c.pos += 1;
            }
        }
        emit(next_doc, &at_doc);
    }
}

/// Scores every document sharing a token with the query by the integer dot
/// product of query impacts and stored impacts, returning the top k.
/// Query tokens absent from the index vocabulary contribute nothing.
pub fn search_impact(query: &QuantizedWeights, index: &ImpactIndex, k: usize) -> RankedList {
    let mut cursors = Vec::new();
    for (tok, weight) in query.iter() {
        match index.postings(tok) {
            Some(list) if !list.is_empty() => cursors.push(Cursor {
                weight: weight as u64,
                list,
                pos: 0,
            }),
            _ => log::debug!("query token '{tok}' not in index vocabulary"),
        }
    }
    if cursors.is_empty() || k == 0 {
        return RankedList::empty("");
    }

    let mut scored: Vec<(u32, u64)> = Vec::new();
    daat(cursors, |doc, contributions| {
        let score: u64 = contributions.iter().map(|(w, imp)| w * *imp as u64).sum();
        scored.push((doc, score));
    });

    RankedList {
        query_id: String::new(),
        hits: collect_top_k(scored.into_iter().map(|(d, s)| (d, s as f64)), k, index),
    }
}

/// BM25 scoring over a lexical index. The query text is analyzed with the
/// same analyzer as the corpus; repeated query terms count with their
/// multiplicity.
///
/// score(q, d) = sum over query terms of
///   qtf * idf(t) * tf / (tf + k1 * (1 - b + b * dl/avgdl)),
/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
pub fn search_bm25(
    query_text: &str,
    index: &ImpactIndex,
    analyzer: &Analyzer,
    params: &Bm25Params,
    k: usize,
) -> RankedList {
    // BTreeMap keeps cursor order (and so f64 summation order) deterministic.
    let tokens = analyzer.analyze(query_text);
    let mut qtf: std::collections::BTreeMap<String, u64> = std::collections::BTreeMap::new();
    for t in tokens {
        *qtf.entry(t).or_insert(0) += 1;
    }

    let n = index.num_docs() as f64;
    let avgdl = index.avg_doc_length();
    let mut cursors = Vec::new();
    for (tok, count) in &qtf {
        match index.postings(tok) {
            Some(list) if !list.is_empty() => {
                let df = list.len() as f64;
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                cursors.push(Cursor {
                    weight: *count as f64 * idf,
                    list,
                    pos: 0,
                });
            }
            _ => log::debug!("query token '{tok}' not in index vocabulary"),
        }
    }
    if cursors.is_empty() || k == 0 {
        return RankedList::empty("");
    }

    let k1 = params.k1;
    let b = params.b;
    let mut scored: Vec<(u32, f64)> = Vec::new();
    daat(cursors, |doc, contributions| {
        let dl = index.doc_length(doc) as f64;
        let norm = k1 * (1.0 - b + if avgdl > 0.0 { b * dl / avgdl } else { 0.0 });
        let mut score = 0.0;
        for (weighted_idf, impact) in contributions {
            let tf = *impact as f64;
            score += weighted_idf * tf / (tf + norm);
        }
        scored.push((doc, score));
    });

    RankedList {
        query_id: String::new(),
        hits: collect_top_k(scored.into_iter(), k, index),
    }
}

/// Re-scores the top `depth` candidates with the integer impact dot product;
/// candidates beyond `depth` are dropped. Every rescored candidate must have
/// a vector in `doc_vectors`.
pub fn rerank(
    candidates: &RankedList,
    doc_vectors: &HashMap<String, QuantizedWeights>,
    query: &QuantizedWeights,
    depth: usize,
) -> Result<RankedList> {
    let depth = depth.min(candidates.hits.len());
    let mut rescored: Vec<(String, u64)> = Vec::with_capacity(depth);
    for (doc_id, _) in &candidates.hits[..depth] {
        let vec = doc_vectors.get(doc_id).ok_or_else(|| {
            Error::Data(format!("no document vector for candidate '{doc_id}'"))
        })?;
        rescored.push((doc_id.clone(), query.dot(vec)));
    }
    rescored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(RankedList {
        query_id: candidates.query_id.clone(),
        hits: rescored
            .into_iter()
            .map(|(id, s)| (id, s as f64))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::AnalyzerMode;
    use crate::index::{build_impact_index, build_lexical_index, CorpusDoc};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn qw(entries: &[(&str, u32)]) -> QuantizedWeights {
        QuantizedWeights::from_entries(entries.iter().map(|(t, w)| (t.to_string(), *w))).unwrap()
    }

    fn toy_index() -> ImpactIndex {
        build_impact_index(
            vec![
                ("d1".to_string(), qw(&[("a", 3)])),
                ("d2".to_string(), qw(&[("a", 1), ("c", 5)])),
            ],
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn impact_search_worked_example() {
        let idx = toy_index();
        let ranked = search_impact(&qw(&[("a", 2), ("b", 1)]), &idx, 10);
        assert_eq!(
            ranked.hits,
            vec![("d1".to_string(), 6.0), ("d2".to_string(), 2.0)]
        );
    }

    #[test]
    fn empty_query_returns_empty_list() {
        let idx = toy_index();
        assert!(search_impact(&QuantizedWeights::new(), &idx, 10).hits.is_empty());
    }

    #[test]
    fn out_of_vocab_tokens_contribute_zero() {
        let idx = toy_index();
        let ranked = search_impact(&qw(&[("zzz", 4)]), &idx, 10);
        assert!(ranked.hits.is_empty());
    }

    #[test]
    fn ties_break_by_ascending_doc_id() {
        let idx = build_impact_index(
            vec![
                ("b".to_string(), qw(&[("t", 2)])),
                ("a".to_string(), qw(&[("t", 2)])),
                ("c".to_string(), qw(&[("t", 1)])),
            ],
            BTreeMap::new(),
        )
        .unwrap();
        let ranked = search_impact(&qw(&[("t", 1)]), &idx, 3);
        let ids: Vec<&str> = ranked.hits.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn k_bounds_result_size() {
        let idx = toy_index();
        let ranked = search_impact(&qw(&[("a", 1)]), &idx, 1);
        assert_eq!(ranked.hits.len(), 1);
        assert_eq!(ranked.hits[0].0, "d1");
    }

    #[test]
    fn bm25_worked_example() {
        let analyzer = Analyzer::new(AnalyzerMode::WhitespaceLower);
        let idx = build_lexical_index(
            vec![
                CorpusDoc {
                    id: "d1".into(),
                    title: String::new(),
                    text: "cat cat".into(),
                },
                CorpusDoc {
                    id: "d2".into(),
                    title: String::new(),
                    text: "dog".into(),
                },
            ],
            &analyzer,
            BTreeMap::new(),
        )
        .unwrap();
        let ranked = search_bm25("cat", &idx, &analyzer, &Bm25Params::default(), 10);

        // Hand oracle: idf = ln 2; tf part = 2 / (2 + 0.9*(0.6 + 0.4*2/1.5))
        let idf = 2.0f64.ln();
        let tf_part = 2.0 / (2.0 + 0.9 * (1.0 - 0.4 + 0.4 * 2.0 / 1.5));
        let expected = idf * tf_part;
        assert_eq!(ranked.hits.len(), 1);
        assert_eq!(ranked.hits[0].0, "d1");
        assert!((ranked.hits[0].1 - expected).abs() < 1e-12);
        assert!((expected - 0.4591).abs() < 5e-4);
    }

    #[test]
    fn bm25_out_of_vocab_query_is_empty() {
        let analyzer = Analyzer::new(AnalyzerMode::WhitespaceLower);
        let idx = build_lexical_index(
            vec![CorpusDoc {
                id: "d1".into(),
                title: String::new(),
                text: "cat".into(),
            }],
            &analyzer,
            BTreeMap::new(),
        )
        .unwrap();
        assert!(search_bm25("zebra", &idx, &analyzer, &Bm25Params::default(), 10)
            .hits
            .is_empty());
    }

    #[test]
    fn rerank_worked_example() {
        let candidates = RankedList {
            query_id: "q".into(),
            hits: vec![("d2".to_string(), 9.9), ("d1".to_string(), 5.5)],
        };
        let doc_vectors: HashMap<String, QuantizedWeights> = HashMap::from([
            ("d1".to_string(), qw(&[("a", 9)])),
            ("d2".to_string(), qw(&[("a", 1)])),
        ]);
        let out = rerank(&candidates, &doc_vectors, &qw(&[("a", 1)]), 2).unwrap();
        assert_eq!(
            out.hits,
            vec![("d1".to_string(), 9.0), ("d2".to_string(), 1.0)]
        );

        let depth1 = rerank(&candidates, &doc_vectors, &qw(&[("a", 1)]), 1).unwrap();
        assert_eq!(depth1.hits, vec![("d2".to_string(), 1.0)]);

        let deep = rerank(&candidates, &doc_vectors, &qw(&[("a", 1)]), 100).unwrap();
        assert_eq!(deep.hits.len(), 2);
    }

    #[test]
    fn rerank_missing_vector_names_doc() {
        let candidates = RankedList {
            query_id: "q".into(),
            hits: vec![("ghost".to_string(), 1.0)],
        };
        let err = rerank(&candidates, &HashMap::new(), &qw(&[("a", 1)]), 1).unwrap_err();
        assert!(err.to_string().contains("ghost"));
    }

    /// Exhaustive scoring oracle: score every doc, sort, truncate.
    fn brute_force(
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

    proptest! {
        #[test]
        fn impact_search_matches_brute_force(
            docs in proptest::collection::btree_map(
                "[a-z]{1,3}",
                proptest::collection::btree_map("[a-h]", 1u32..20, 1..6),
                1..40,
            ),
            query in proptest::collection::btree_map("[a-h]", 1u32..10, 1..5),
            k in 1usize..10,
        ) {
            let docs: Vec<(String, QuantizedWeights)> = docs
                .into_iter()
                .map(|(id, ws)| {
                    let mut q = QuantizedWeights::new();
                    for (t, w) in ws {
                        q.insert(t, w);
                    }
                    (id, q)
                })
                .collect();
            let mut qv = QuantizedWeights::new();
            for (t, w) in query {
                qv.insert(t, w);
            }
            let idx = build_impact_index(docs.clone(), BTreeMap::new()).unwrap();
            let got = search_impact(&qv, &idx, k);
            prop_assert_eq!(got.hits, brute_force(&qv, &docs, k));
        }

        #[test]
        fn scaling_query_weights_scales_scores_and_keeps_order(
            scale in 2u32..5,
            k in 1usize..6,
        ) {
            let docs = vec![
                ("d1".to_string(), qw(&[("a", 3), ("b", 1)])),
                ("d2".to_string(), qw(&[("a", 1), ("b", 3)])),
                ("d3".to_string(), qw(&[("b", 2)])),
                ("d4".to_string(), qw(&[("a", 2), ("b", 2)])),
            ];
            let idx = build_impact_index(docs, BTreeMap::new()).unwrap();
            let q1 = qw(&[("a", 1), ("b", 2)]);
            let q2 = QuantizedWeights::from_entries(
                q1.iter().map(|(t, w)| (t.to_string(), w * scale)),
            ).unwrap();

            let r1 = search_impact(&q1, &idx, k);
            let r2 = search_impact(&q2, &idx, k);
            prop_assert_eq!(r1.hits.len(), r2.hits.len());
            for ((id1, s1), (id2, s2)) in r1.hits.iter().zip(&r2.hits) {
                prop_assert_eq!(id1, id2);
                prop_assert!((s1 * scale as f64 - s2).abs() < 1e-9);
            }
        }

        #[test]
        fn rerank_over_full_candidates_matches_search_impact(
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let tokens = ["a", "b", "c", "d"];
            let docs: Vec<(String, QuantizedWeights)> = (0..12)
                .map(|i| {
                    let mut v = QuantizedWeights::new();
                    for t in tokens {
                        if rng.gen_bool(0.6) {
                            v.insert(t, rng.gen_range(1..9));
                        }
                    }
                    if v.is_empty() {
                        v.insert("a", 1);
                    }
                    (format!("d{i:02}"), v)
                })
                .collect();
            let idx = build_impact_index(docs.clone(), BTreeMap::new()).unwrap();
            let q = qw(&[("a", 2), ("c", 3)]);
            let k = 5;

            let direct = search_impact(&q, &idx, k);
            let vectors: HashMap<String, QuantizedWeights> = docs.into_iter().collect();
            let reranked = rerank(&direct, &vectors, &q, k).unwrap();
            prop_assert_eq!(reranked.hits, direct.hits);
        }
    }
}
