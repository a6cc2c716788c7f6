//! Synthetic planted-cluster benchmark.
//!
//! Each instance places `n_candidates` unit embeddings around cluster
//! centers on the sphere: `majority_size` of them around one center and the
//! rest spread as evenly as possible over minority clusters of at most
//! `min(max_minority_cluster, majority_size - 1)` members, so the planted
//! majority is strictly the largest group. The default cap of 2 models a
//! recurring wrong answer next to scattered one-off answers. Centers are pairwise at cosine `<= 1 - separation`, and
//! every candidate is `normalize(center + N(0, noise_sigma^2 I))`. Candidate
//! positions are shuffled so the majority never sits at fixed indices.
//!
//! Instances are a pure function of `(seed, trial)`.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::{cosine_similarity_matrix, dot, Embedding};
use crate::selection::{
    select_arithmetic_mean, select_dynamic_topk, select_exp_weighted, select_random, Method, SelectionConfig,
};
use crate::{Error, Result};

/// Rejection-sampling budget per cluster center.
const CENTER_ATTEMPTS: usize = 10_000;
/// Stream offset that keeps random-selection draws apart from instance draws.
const SELECTION_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub n_candidates: usize,
    pub majority_size: usize,
    pub separation: f64,
    pub noise_sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub dimension: usize,
    /// Upper bound on the size of each minority cluster; the effective cap
    /// is also at most `majority_size - 1`.
    pub max_minority_cluster: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_candidates: 10,
            majority_size: 5,
            separation: 0.5,
            noise_sigma: 0.05,
            trials: 1000,
            seed: 0,
            dimension: 32,
            max_minority_cluster: 2,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.majority_size < 2 || self.majority_size > self.n_candidates {
            return Err(Error::InvalidConfig("majority size must lie in [2, n_candidates]"));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("need at least one trial"));
        }
        if !(0.0..=1.0).contains(&self.separation) {
            return Err(Error::InvalidConfig("separation must lie in [0, 1]"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig("noise sigma must be non-negative"));
        }
        if self.max_minority_cluster == 0 {
            return Err(Error::InvalidConfig("minority clusters need at least one member"));
        }
        if self.dimension < 2 {
            return Err(Error::InvalidConfig("dimension must be at least 2"));
        }
        Ok(())
    }

    /// Sizes of the minority clusters, each at most `majority_size - 1`.
    pub fn minority_clusters(&self) -> Vec<usize> {
        let rest = self.n_candidates - self.majority_size;
        if rest == 0 {
            return Vec::new();
        }
        let cap = (self.majority_size - 1).min(self.max_minority_cluster);
        let clusters = rest.div_ceil(cap);
        (0..clusters).map(|c| rest / clusters + usize::from(c < rest % clusters)).collect()
    }
}

/// One benchmark draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterInstance {
    pub embeddings: Vec<Embedding>,
    /// Cluster id per candidate; 0 is the planted majority.
    pub labels: Vec<usize>,
}

impl ClusterInstance {
    pub fn majority_indices(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == 0).collect()
    }
}

fn gaussian_vector(rng: &mut ChaCha8Rng, dim: usize, sigma: f64) -> Vec<f64> {
    (0..dim).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn instance_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Draws instance `trial` of the benchmark described by `cfg`.
pub fn sample_cluster_instance(cfg: &BenchConfig, trial: usize) -> Result<ClusterInstance> {
    cfg.validate()?;
    let mut rng = instance_rng(cfg.seed, trial);
    let sizes: Vec<usize> = core::iter::once(cfg.majority_size).chain(cfg.minority_clusters()).collect();
    let max_cos = 1.0 - cfg.separation;

    let mut centers: Vec<Embedding> = Vec::with_capacity(sizes.len());
    for _ in &sizes {
        let center = (0..CENTER_ATTEMPTS)
            .filter_map(|_| Embedding::normalize(gaussian_vector(&mut rng, cfg.dimension, 1.0)).ok())
            .find(|c| centers.iter().all(|o| o.dot(c) <= max_cos))
            .ok_or(Error::InfeasibleGeometry { dimension: cfg.dimension })?;
        centers.push(center);
    }

    let mut labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &s)| core::iter::repeat_n(c, s)).collect();
    labels.shuffle(&mut rng);
    let embeddings = labels
        .iter()
        .map(|&c| {
            let noise = gaussian_vector(&mut rng, cfg.dimension, cfg.noise_sigma);
            let v: Vec<f64> = centers[c].as_slice().iter().zip(&noise).map(|(a, b)| a + b).collect();
            Embedding::normalize(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterInstance { embeddings, labels })
}

/// Result of one method on one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub winner_index: usize,
    pub k_star: Option<usize>,
}

/// Runs an embedding-based method (or uniform random choice) on an instance.
pub fn run_method(method: Method, instance: &ClusterInstance, cfg: &BenchConfig, trial: usize) -> Result<TrialOutcome> {
    let select = SelectionConfig::default();
    if method == Method::Random {
        let r = select_random(instance.labels.len(), cfg.seed, SELECTION_STREAM | trial as u64)?;
        return Ok(TrialOutcome { winner_index: r.winner_index, k_star: None });
    }
    let s = cosine_similarity_matrix(&instance.embeddings)?;
    let r = match method {
        Method::ExpWeighted => select_exp_weighted(&s, &select)?,
        Method::DynamicTopK => select_dynamic_topk(&s, &select)?,
        Method::ArithmeticMean => select_arithmetic_mean(&s, &select)?,
        _ => return Err(Error::InvalidConfig("benchmark supports lsc, lsc-topk, lsc-mean and random")),
    };
    Ok(TrialOutcome { winner_index: r.winner_index, k_star: r.k_star })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub majority_size: usize,
    pub trials: usize,
    /// Fraction of trials whose winner belongs to the planted majority.
    pub consistency: f64,
    /// Mean `K*`, for methods that estimate it.
    pub mean_k_star: Option<f64>,
}

/// Consistency of every method at every majority size, rows ordered by
/// method then size.
pub fn run_consistency_sweep(methods: &[Method], sizes: &[usize], cfg: &BenchConfig) -> Result<Vec<SweepRow>> {
    for &size in sizes {
        BenchConfig { majority_size: size, ..*cfg }.validate()?;
    }
    let mut rows = Vec::with_capacity(methods.len() * sizes.len());
    for &method in methods {
        for &size in sizes {
            let cfg = BenchConfig { majority_size: size, ..*cfg };
            let (mut hits, mut k_sum, mut k_count) = (0usize, 0usize, 0usize);
            for trial in 0..cfg.trials {
                let instance = sample_cluster_instance(&cfg, trial)?;
                let out = run_method(method, &instance, &cfg, trial)?;
                hits += usize::from(instance.labels[out.winner_index] == 0);
                if let Some(k) = out.k_star {
                    k_sum += k;
                    k_count += 1;
                }
            }
            rows.push(SweepRow {
                method,
                majority_size: size,
                trials: cfg.trials,
                consistency: hits as f64 / cfg.trials as f64,
                mean_k_star: (k_count > 0).then(|| k_sum as f64 / k_count as f64),
            });
        }
    }
    Ok(rows)
}

/// Largest cosine between distinct cluster centers implied by an instance
/// with zero noise; exposed for tests.
pub fn max_cross_cluster_cosine(instance: &ClusterInstance) -> f64 {
    let n = instance.labels.len();
    let mut max = f64::NEG_INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            if instance.labels[i] != instance.labels[j] {
                max = max.max(dot(instance.embeddings[i].as_slice(), instance.embeddings[j].as_slice()));
            }
        }
    }
    max
}
