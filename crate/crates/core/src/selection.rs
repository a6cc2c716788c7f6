//! Majority-response selection over a cosine similarity matrix.
//!
//! Three selectors share one result type:
//!
//! * [`select_exp_weighted`] scores each response by the mean of
//!   `exp(S_ij / tau')` over its peers, so near-duplicates dominate and
//!   low-similarity outliers contribute almost nothing.
//! * [`select_arithmetic_mean`] is the plain mean of `S_ij`, kept as an
//!   ablation. It is pulled toward the centroid of all responses.
//! * [`select_dynamic_topk`] estimates the size of the majority cluster from
//!   the largest drop in the best top-K mean similarity and then selects by
//!   top-K mean at that size.

use alloc::vec::Vec;

use crate::geometry::SimilarityMatrix;
use crate::{Error, Result};

/// Default temperature of the exponential weighting.
pub const DEFAULT_TAU_PRIME: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    LowestIndex,
    HighestIndex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    pub tau_prime: f64,
    pub tie_break: TieBreak,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { tau_prime: DEFAULT_TAU_PRIME, tie_break: TieBreak::LowestIndex }
    }
}

impl SelectionConfig {
    pub fn with_tau_prime(tau_prime: f64) -> Result<Self> {
        let cfg = Self { tau_prime, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_prime > 0.0 && self.tau_prime.is_finite()) {
            return Err(Error::InvalidConfig("tau_prime must be positive and finite"));
        }
        Ok(())
    }
}

/// Which selector produced a [`SelectionResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    ExpWeighted,
    DynamicTopK,
    ArithmeticMean,
    SelfConsistency,
    Wucs,
    Usc,
    Random,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::ExpWeighted,
        Method::DynamicTopK,
        Method::ArithmeticMean,
        Method::SelfConsistency,
        Method::Wucs,
        Method::Usc,
        Method::Random,
    ];

    /// Stable short name used on the command line and in reports.
    pub fn name(self) -> &'static str {
        match self {
            Method::ExpWeighted => "lsc",
            Method::DynamicTopK => "lsc-topk",
            Method::ArithmeticMean => "lsc-mean",
            Method::SelfConsistency => "sc",
            Method::Wucs => "wucs",
            Method::Usc => "usc",
            Method::Random => "random",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Whether the method consumes response embeddings.
    pub fn needs_embeddings(self) -> bool {
        matches!(self, Method::ExpWeighted | Method::DynamicTopK | Method::ArithmeticMean)
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub winner_index: usize,
    pub scores: Vec<f64>,
    pub method: Method,
    /// Estimated majority size, only set by dynamic top-K.
    pub k_star: Option<usize>,
    pub confidence: f64,
}

/// Index of the maximal score. Exact ties are resolved by `tie`.
pub fn argmax(scores: &[f64], tie: TieBreak) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        let better = match tie {
            TieBreak::LowestIndex => s > scores[best],
            TieBreak::HighestIndex => s >= scores[best],
        };
        if better {
            best = i;
        }
    }
    best
}

fn check_size(s: &SimilarityMatrix) -> Result<usize> {
    let n = s.len();
    if n < 2 {
        return Err(Error::TooFewCandidates { required: 2, found: n });
    }
    Ok(n)
}

fn finish(s: &SimilarityMatrix, scores: Vec<f64>, method: Method, k_star: Option<usize>, tie: TieBreak) -> Result<SelectionResult> {
    let winner_index = argmax(&scores, tie);
    let confidence = confidence_of_selection(s, winner_index)?;
    Ok(SelectionResult { winner_index, scores, method, k_star, confidence })
}

/// `w_i = 1/(N-1) * sum_{j != i} exp(S_ij / tau')`.
pub fn select_exp_weighted(s: &SimilarityMatrix, cfg: &SelectionConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    let n = check_size(s)?;
    let scores = (0..n)
        .map(|i| s.peers(i).map(|(_, v)| libm::exp(v / cfg.tau_prime)).sum::<f64>() / (n - 1) as f64)
        .collect();
    finish(s, scores, Method::ExpWeighted, None, cfg.tie_break)
}

fn arithmetic_scores(s: &SimilarityMatrix) -> Vec<f64> {
    let n = s.len();
    (0..n).map(|i| s.peers(i).map(|(_, v)| v).sum::<f64>() / (n - 1) as f64).collect()
}

/// Plain mean similarity to all peers.
pub fn select_arithmetic_mean(s: &SimilarityMatrix, cfg: &SelectionConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    check_size(s)?;
    finish(s, arithmetic_scores(s), Method::ArithmeticMean, None, cfg.tie_break)
}

/// Each row's peer similarities sorted descending, ties by ascending peer index.
fn sorted_peer_rows(s: &SimilarityMatrix) -> Vec<Vec<f64>> {
    (0..s.len())
        .map(|i| {
            let mut peers: Vec<(usize, f64)> = s.peers(i).collect();
            peers.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            peers.into_iter().map(|(_, v)| v).collect()
        })
        .collect()
}

/// Running prefix sums of each sorted row; `prefix[i][k-1]` sums the top `k`.
fn prefix_sums(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| {
            let mut acc = 0.0;
            row.iter()
                .map(|v| {
                    acc += v;
                    acc
                })
                .collect()
        })
        .collect()
}

/// Mean similarity of every response to its `k` most similar peers.
pub fn topk_mean_scores(s: &SimilarityMatrix, k: usize) -> Result<Vec<f64>> {
    let n = s.len();
    if k < 2 || k + 1 > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let prefix = prefix_sums(&sorted_peer_rows(s));
    Ok(prefix.iter().map(|p| p[k - 1] / k as f64).collect())
}

/// Per-K diagnostics of a dynamic top-K run.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKTrace {
    /// `(K, max_i w_i^(K))` for `K` in `2..=N-1`.
    pub max_scores: Vec<(usize, f64)>,
    /// `(K, Delta^(K))` for `K` in `3..=N-1`.
    pub drops: Vec<(usize, f64)>,
    /// Chosen peer-set size; `N - 1` when no drop is positive.
    pub k_star: usize,
}

/// Computes the top-K maxima, their drops, and the boundary `K*`.
///
/// `K* = argmax_K Delta^(K) - 1` with ties toward smaller `K`. With fewer
/// than four candidates there is no drop to inspect, and when every drop is
/// zero the whole peer set is used: `K* = N - 1`.
pub fn dynamic_topk_trace(s: &SimilarityMatrix) -> Result<TopKTrace> {
    let n = check_size(s)?;
    let prefix = prefix_sums(&sorted_peer_rows(s));
    let max_scores: Vec<(usize, f64)> = (2..n)
        .map(|k| {
            let best = prefix.iter().map(|p| p[k - 1] / k as f64).fold(f64::NEG_INFINITY, f64::max);
            (k, best)
        })
        .collect();
    let drops: Vec<(usize, f64)> = max_scores.windows(2).map(|w| (w[1].0, w[0].1 - w[1].1)).collect();
    let mut best: Option<(usize, f64)> = None;
    for &(k, d) in &drops {
        if best.is_none_or(|(_, bd)| d > bd) {
            best = Some((k, d));
        }
    }
    let k_star = match best {
        Some((k, d)) if d > 0.0 => k - 1,
        _ => n - 1,
    };
    Ok(TopKTrace { max_scores, drops, k_star })
}

/// Selects by top-`K*` mean similarity, where `K*` comes from
/// [`dynamic_topk_trace`].
///
/// With two candidates no admissible `K` exists; scores fall back to the
/// single peer similarity and `k_star` is left unset.
pub fn select_dynamic_topk(s: &SimilarityMatrix, cfg: &SelectionConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    let n = check_size(s)?;
    if n == 2 {
        return finish(s, arithmetic_scores(s), Method::DynamicTopK, None, cfg.tie_break);
    }
    let trace = dynamic_topk_trace(s)?;
    let scores = topk_mean_scores(s, trace.k_star)?;
    finish(s, scores, Method::DynamicTopK, Some(trace.k_star), cfg.tie_break)
}

/// Uniformly random choice among `n` candidates, a pure function of
/// `(seed, stream)`. Scores are 1 for the winner and 0 elsewhere; the
/// confidence is the uninformative `1/n`.
pub fn select_random(n: usize, seed: u64, stream: u64) -> Result<SelectionResult> {
    use rand::{Rng, SeedableRng};
    if n == 0 {
        return Err(Error::TooFewCandidates { required: 1, found: 0 });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let winner_index = rng.random_range(0..n);
    let mut scores = alloc::vec![0.0; n];
    scores[winner_index] = 1.0;
    Ok(SelectionResult { winner_index, scores, method: Method::Random, k_star: None, confidence: 1.0 / n as f64 })
}

/// Mean of `(S_wj + 1) / 2` over the winner's peers, in `[0, 1]`.
pub fn confidence_of_selection(s: &SimilarityMatrix, winner: usize) -> Result<f64> {
    let n = s.len();
    if winner >= n {
        return Err(Error::IndexOutOfRange { index: winner, len: n });
    }
    if n < 2 {
        return Err(Error::TooFewCandidates { required: 2, found: n });
    }
    let c = s.peers(winner).map(|(_, v)| (v + 1.0) / 2.0).sum::<f64>() / (n - 1) as f64;
    Ok(c.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn matrix(n: usize, upper: &[(usize, usize, f64)], default: f64) -> SimilarityMatrix {
        SimilarityMatrix::from_fn(n, |i, j| {
            upper.iter().find(|&&(a, b, _)| (a, b) == (i, j)).map_or(default, |t| t.2)
        })
        .unwrap()
    }

    fn bridge() -> SimilarityMatrix {
        matrix(4, &[(0, 1, 0.8), (0, 2, 0.5), (1, 2, 0.5), (2, 3, 0.5), (0, 3, 0.0), (1, 3, 0.0)], f64::NAN)
    }

    fn cluster5() -> SimilarityMatrix {
        SimilarityMatrix::from_fn(5, |i, j| if i < 3 && j < 3 { 0.95 } else { 0.1 }).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn uniform_matrix_ties_to_lowest_index() {
        let s = SimilarityMatrix::from_fn(5, |_, _| 0.3).unwrap();
        let cfg = SelectionConfig::default();
        for r in [
            select_exp_weighted(&s, &cfg).unwrap(),
            select_arithmetic_mean(&s, &cfg).unwrap(),
            select_dynamic_topk(&s, &cfg).unwrap(),
        ] {
            assert_eq!(r.winner_index, 0);
            assert!(r.scores.iter().all(|&v| v == r.scores[0]));
        }
        assert_eq!(select_dynamic_topk(&s, &cfg).unwrap().k_star, Some(4));
    }

    #[test]
    fn highest_index_tie_break() {
        let s = SimilarityMatrix::from_fn(3, |_, _| 0.3).unwrap();
        let cfg = SelectionConfig { tie_break: TieBreak::HighestIndex, ..SelectionConfig::default() };
        assert_eq!(select_exp_weighted(&s, &cfg).unwrap().winner_index, 2);
    }

    #[test]
    fn exp_weighted_three_candidates() {
        let s = matrix(3, &[(0, 1, 0.9), (0, 2, 0.1), (1, 2, 0.2)], 0.0);
        let r = select_exp_weighted(&s, &SelectionConfig::default()).unwrap();
        assert!(close(r.scores[0], 3.6355, 1e-4), "{:?}", r.scores);
        assert!(close(r.scores[1], 3.7707, 1e-4));
        assert!(close(r.scores[2], 1.3566, 1e-4));
        assert_eq!(r.winner_index, 1);
        assert_eq!(r.method, Method::ExpWeighted);
    }

    #[test]
    fn bridge_splits_mean_from_exp_weighted() {
        let s = bridge();
        let cfg = SelectionConfig::default();
        let mean = select_arithmetic_mean(&s, &cfg).unwrap();
        assert_eq!(mean.winner_index, 2);
        assert!(close(mean.scores[2], 0.5, 1e-12));
        assert!(close(mean.scores[0], 1.3 / 3.0, 1e-12));
        let exp = select_exp_weighted(&s, &cfg).unwrap();
        assert_eq!(exp.winner_index, 0);
        assert!(close(exp.scores[0], 2.890, 1e-3));
        assert!(close(exp.scores[2], 2.718, 1e-3));
    }

    #[test]
    fn two_candidates() {
        let s = matrix(2, &[(0, 1, -0.4)], 0.0);
        let r = select_arithmetic_mean(&s, &SelectionConfig::default()).unwrap();
        assert_eq!(r.scores, vec![-0.4, -0.4]);
        assert_eq!(r.winner_index, 0);
        let r = select_dynamic_topk(&s, &SelectionConfig::default()).unwrap();
        assert_eq!((r.winner_index, r.k_star), (0, None));
    }

    #[test]
    fn topk_scores_on_cluster() {
        let s = cluster5();
        let w2 = topk_mean_scores(&s, 2).unwrap();
        let w3 = topk_mean_scores(&s, 3).unwrap();
        let w4 = topk_mean_scores(&s, 4).unwrap();
        assert!(close(w2[0], 0.95, 1e-12));
        assert!(close(w3[0], 2.0 / 3.0, 1e-12));
        assert!(close(w4[0], 0.525, 1e-12));
        for w in [&w2, &w3, &w4] {
            assert!(close(w[3], 0.1, 1e-12));
            assert!(close(w[4], 0.1, 1e-12));
        }
    }

    #[test]
    fn topk_full_peer_set_is_arithmetic_mean() {
        let s = bridge();
        let full = topk_mean_scores(&s, 3).unwrap();
        for (a, b) in full.iter().zip(arithmetic_scores(&s)) {
            assert!(close(*a, b, 1e-12));
        }
        let s3 = matrix(3, &[(0, 1, 0.9), (0, 2, 0.1), (1, 2, 0.2)], 0.0);
        let w = topk_mean_scores(&s3, 2).unwrap();
        assert!(close(w[0], 0.5, 1e-12) && close(w[1], 0.55, 1e-12) && close(w[2], 0.15, 1e-12));
    }

    #[test]
    fn topk_range_checked() {
        let s = cluster5();
        assert_eq!(topk_mean_scores(&s, 1).unwrap_err(), Error::KOutOfRange { k: 1, n: 5 });
        assert_eq!(topk_mean_scores(&s, 5).unwrap_err(), Error::KOutOfRange { k: 5, n: 5 });
    }

    #[test]
    fn dynamic_topk_on_cluster() {
        let trace = dynamic_topk_trace(&cluster5()).unwrap();
        assert_eq!(trace.drops.len(), 2);
        assert_eq!(trace.drops[0].0, 3);
        assert!(close(trace.drops[0].1, 0.95 - 2.0 / 3.0, 1e-12));
        assert!(close(trace.drops[0].1, 0.2833, 1e-4));
        assert!(close(trace.drops[1].1, 0.1417, 1e-4));
        assert_eq!(trace.k_star, 2);
        let r = select_dynamic_topk(&cluster5(), &SelectionConfig::default()).unwrap();
        assert_eq!((r.winner_index, r.k_star), (0, Some(2)));
    }

    #[test]
    fn dynamic_topk_three_candidates() {
        let s = matrix(3, &[(0, 1, 0.9), (0, 2, 0.1), (1, 2, 0.2)], 0.0);
        let r = select_dynamic_topk(&s, &SelectionConfig::default()).unwrap();
        assert_eq!(r.k_star, Some(2));
        assert_eq!(r.winner_index, 1);
    }

    #[test]
    fn confidence_examples() {
        let ones = SimilarityMatrix::from_fn(3, |_, _| 1.0).unwrap();
        assert_eq!(confidence_of_selection(&ones, 1).unwrap(), 1.0);
        let zeros = SimilarityMatrix::from_fn(3, |_, _| 0.0).unwrap();
        assert_eq!(confidence_of_selection(&zeros, 0).unwrap(), 0.5);
        let s = matrix(3, &[(0, 1, 0.9), (0, 2, 0.1), (1, 2, 0.2)], 0.0);
        assert!(close(confidence_of_selection(&s, 0).unwrap(), 0.75, 1e-12));
        assert_eq!(confidence_of_selection(&s, 3).unwrap_err(), Error::IndexOutOfRange { index: 3, len: 3 });
    }

    #[test]
    fn random_is_seeded() {
        let a = select_random(10, 7, 3).unwrap();
        assert_eq!(a, select_random(10, 7, 3).unwrap());
        assert_eq!(a.scores.iter().sum::<f64>(), 1.0);
        assert_eq!(a.scores[a.winner_index], 1.0);
        let winners: alloc::collections::BTreeSet<usize> =
            (0..50).map(|s| select_random(10, 7, s).unwrap().winner_index).collect();
        assert!(winners.len() > 3);
        assert!(select_random(0, 0, 0).is_err());
    }

    #[test]
    fn invalid_tau_prime() {
        assert!(SelectionConfig::with_tau_prime(0.0).is_err());
        assert!(SelectionConfig::with_tau_prime(f64::NAN).is_err());
    }

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(Method::from_name(m.name()), Some(m));
        }
        assert_eq!(Method::from_name("nope"), None);
    }
}
