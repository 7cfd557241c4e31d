//! Document expansion: merge externally generated material into passage text
//! before encoding or indexing.
//!
//! Two merge rules are supported. Generated-query expansion appends the first
//! q synthetic queries verbatim (duplicated keywords across queries are kept
//! on purpose; the repetition is part of the signal for lexical scoring).
//! Weighted-token expansion appends the k highest-weight tokens that do not
//! already occur in the analyzed passage. Both rules preserve the original
//! text verbatim as a prefix.

use std::collections::HashSet;

use crate::analyzer::Analyzer;
use crate::repr::TermWeightVector;

/// Default number of generated queries to append.
pub const DEFAULT_GENERATED_QUERIES: usize = 20;
/// Default number of weighted tokens to append.
pub const DEFAULT_TOP_K_TOKENS: usize = 200;

/// Appends the first `q` generated queries to the passage, space-separated.
pub fn append_generated_queries(doc_text: &str, queries: &[String], q: usize) -> String {
    let take = q.min(queries.len());
    if take == 0 {
        return doc_text.to_string();
    }
    let mut out = String::with_capacity(
        doc_text.len() + queries[..take].iter().map(|s| s.len() + 1).sum::<usize>(),
    );
    out.push_str(doc_text);
    for query in &queries[..take] {
        out.push(' ');
        out.push_str(query);
    }
    out
}

/// Appends the `k` highest-weight tokens (ties broken by ascending token)
/// that do not already occur in the passage. Presence is decided on analyzer
/// output, so under a stemming analyzer a candidate whose stem is already in
/// the passage counts as present.
pub fn append_top_k_tokens(
    doc_text: &str,
    token_weights: &TermWeightVector,
    k: usize,
    analyzer: &Analyzer,
) -> String {
    if k == 0 || token_weights.is_empty() {
        return doc_text.to_string();
    }
    let present: HashSet<String> = analyzer.analyze(doc_text).into_iter().collect();
    let already_present = |tok: &str| {
        let analyzed = analyzer.analyze(tok);
        !analyzed.is_empty() && analyzed.iter().all(|t| present.contains(t))
    };

    let mut candidates: Vec<(&str, f64)> = token_weights
        .iter()
        .filter(|(tok, _)| !already_present(tok))
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    candidates.truncate(k);

    let mut out = String::from(doc_text);
    for (tok, _) in candidates {
        out.push(' ');
        out.push_str(tok);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::AnalyzerMode;

    #[test]
    fn generated_queries_concatenation() {
        let queries = vec!["do cats purr".to_string(), "why cats purr".to_string()];
        assert_eq!(
            append_generated_queries("cats purr", &queries, 2),
            "cats purr do cats purr why cats purr"
        );
        assert_eq!(append_generated_queries("cats purr", &queries, 0), "cats purr");
        // q beyond the available queries uses what exists
        assert_eq!(
            append_generated_queries("x", &queries, 10),
            "x do cats purr why cats purr"
        );
    }

    #[test]
    fn generated_queries_preserve_prefix_exactly() {
        let original = "Some text, with punctuation!  And spacing.";
        let queries = vec!["q one".to_string()];
        let expanded = append_generated_queries(original, &queries, 1);
        assert!(expanded.starts_with(original));
        // Stripping the appended span recovers the original.
        assert_eq!(&expanded[..original.len()], original);
    }

    #[test]
    fn top_k_tokens_skip_present_terms() {
        let analyzer = Analyzer::new(AnalyzerMode::WhitespaceLower);
        let weights =
            TermWeightVector::from_entries([("purr", 5.0), ("feline", 4.0), ("pet", 3.0)])
                .unwrap();
        assert_eq!(
            append_top_k_tokens("cats purr", &weights, 2, &analyzer),
            "cats purr feline pet"
        );
        assert_eq!(append_top_k_tokens("cats purr", &weights, 0, &analyzer), "cats purr");
    }

    #[test]
    fn top_k_ties_break_by_token_order() {
        let analyzer = Analyzer::new(AnalyzerMode::WhitespaceLower);
        let weights =
            TermWeightVector::from_entries([("zeta", 2.0), ("alpha", 2.0), ("mid", 2.0)]).unwrap();
        assert_eq!(
            append_top_k_tokens("base", &weights, 2, &analyzer),
            "base alpha mid"
        );
    }

    #[test]
    fn top_k_appendix_has_no_duplicates_with_body() {
        let analyzer = Analyzer::new(AnalyzerMode::WhitespaceLower);
        let weights = TermWeightVector::from_entries([("a", 3.0), ("b", 2.0), ("c", 1.0)]).unwrap();
        let out = append_top_k_tokens("a c", &weights, 3, &analyzer);
        assert_eq!(out, "a c b");
        let tokens = analyzer.analyze(&out);
        let unique: HashSet<&String> = tokens.iter().collect();
        assert_eq!(tokens.len(), unique.len());
    }

    #[test]
    fn top_k_presence_is_checked_on_analyzer_output() {
        // Under the stemming analyzer, "cats" is already present in a
        // passage containing "cat", so it is not appended.
        let analyzer = Analyzer::new(AnalyzerMode::EnglishPorter);
        let weights =
            TermWeightVector::from_entries([("cats", 5.0), ("feline", 4.0)]).unwrap();
        let out = append_top_k_tokens("the cat sat", &weights, 2, &analyzer);
        assert_eq!(out, "the cat sat feline");
        let tokens = analyzer.analyze(&out);
        let unique: HashSet<&String> = tokens.iter().collect();
        assert_eq!(tokens.len(), unique.len());
    }
}
