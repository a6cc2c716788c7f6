//! Weighted unigram consistency scoring.
//!
//! Each response becomes a bag of lowercase unigrams with relative term
//! frequencies. Two responses are compared by weighted Jaccard,
//! `sum_t min(f_i, f_j) / sum_t max(f_i, f_j)`, and a response's score is its
//! mean similarity to the others. An empty response has similarity 0 to
//! everything, including another empty response.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::SimilarityMatrix;
use crate::selection::{argmax, Method, SelectionConfig, SelectionResult};
use crate::text::unigrams;
use crate::{Error, Result};

/// Relative term frequencies of a text.
pub type TermFrequencies = BTreeMap<String, f64>;

pub fn term_frequencies(text: &str) -> TermFrequencies {
    let tokens = unigrams(text);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in &tokens {
        *counts.entry(t.clone()).or_insert(0) += 1;
    }
    let total = tokens.len() as f64;
    counts.into_iter().map(|(t, c)| (t, c as f64 / total)).collect()
}

/// Weighted Jaccard similarity of two frequency bags.
pub fn weighted_jaccard(a: &TermFrequencies, b: &TermFrequencies) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut min_sum = 0.0;
    let mut max_sum = 0.0;
    for (t, &fa) in a {
        let fb = b.get(t).copied().unwrap_or(0.0);
        min_sum += fa.min(fb);
        max_sum += fa.max(fb);
    }
    for (t, &fb) in b {
        if !a.contains_key(t) {
            max_sum += fb;
        }
    }
    min_sum / max_sum
}

/// Pairwise weighted-Jaccard matrix (values lie in `[0, 1]`).
pub fn wucs_matrix<S: AsRef<str>>(texts: &[S]) -> Result<SimilarityMatrix> {
    let bags: Vec<TermFrequencies> = texts.iter().map(|t| term_frequencies(t.as_ref())).collect();
    SimilarityMatrix::from_fn(bags.len(), |i, j| weighted_jaccard(&bags[i], &bags[j]))
}

/// Scores each response by its mean weighted-Jaccard similarity to the rest.
pub fn wucs_scores<S: AsRef<str>>(texts: &[S], cfg: &SelectionConfig) -> Result<SelectionResult> {
    let n = texts.len();
    if n < 2 {
        return Err(Error::TooFewCandidates { required: 2, found: n });
    }
    let s = wucs_matrix(texts)?;
    let scores: Vec<f64> = (0..n).map(|i| s.peers(i).map(|(_, v)| v).sum::<f64>() / (n - 1) as f64).collect();
    let winner_index = argmax(&scores, cfg.tie_break);
    let confidence = scores[winner_index].clamp(0.0, 1.0);
    Ok(SelectionResult { winner_index, scores, method: Method::Wucs, k_star: None, confidence })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_texts_score_one() {
        let r = wucs_scores(&["same words here", "Same, words here!"], &SelectionConfig::default()).unwrap();
        assert_eq!(r.scores, [1.0, 1.0]);
        assert_eq!(r.confidence, 1.0);
    }

    #[test]
    fn hand_computed_small_corpus() {
        let r = wucs_scores(&["a b", "a c", "d"], &SelectionConfig::default()).unwrap();
        assert!((r.scores[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((r.scores[1] - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.scores[2], 0.0);
        assert_eq!(r.winner_index, 0);
    }

    #[test]
    fn empty_texts_never_match() {
        let r = wucs_scores(&["", "x y", "x y", ""], &SelectionConfig::default()).unwrap();
        assert_eq!(r.scores[0], 0.0);
        assert_eq!(r.scores[3], 0.0);
        assert_eq!(r.winner_index, 1);
    }

    #[test]
    fn repeated_tokens_weigh_more() {
        // f = {a: 2/3, b: 1/3} vs {a: 1/2, b: 1/2}: min sum 5/6, max sum 7/6.
        let j = weighted_jaccard(&term_frequencies("a a b"), &term_frequencies("a b"));
        assert!((j - 5.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn too_few() {
        assert_eq!(
            wucs_scores(&["only"], &SelectionConfig::default()).unwrap_err(),
            Error::TooFewCandidates { required: 2, found: 1 }
        );
    }
}
