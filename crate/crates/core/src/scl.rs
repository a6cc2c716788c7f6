//! Supervised contrastive training of summary-token embeddings.
//!
//! The frozen language model is replaced by a deterministic toy encoder so
//! the objective and its gradient can be exercised end to end:
//!
//! ```text
//! phi(text)  = l2-normalized hashed unigram counts          (frozen, R^d)
//! h_m        = tanh(phi * u_m)        elementwise, m = 1..K (u is trainable)
//! z          = normalize(mean_m h_m)
//! ```
//!
//! The loss pulls together embeddings of responses that share an answer
//! label: for every anchor `i` with positives `P_i = {j != i : y_j = y_i}`,
//!
//! ```text
//! l_i = -1/|P_i| * sum_{j in P_i} log( exp(z_i.z_j / tau) / sum_{k != i} exp(z_i.z_k / tau) )
//! ```
//!
//! averaged over the anchors that have at least one positive.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{dot, mean_pool_normalize, Embedding, TokenStates, ZERO_NORM_EPS};
use crate::text::{fnv1a, unigrams};
use crate::{Error, Result};

pub const DEFAULT_TOKENS: usize = 6;
pub const DEFAULT_DIM: usize = 64;
pub const DEFAULT_TAU: f64 = 0.07;
pub const DEFAULT_LEARNING_RATE: f64 = 0.05;
/// Half-width of the uniform initialization of the suffix embeddings.
pub const INIT_RANGE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SclConfig {
    /// Number of appended summary tokens `K`.
    pub tokens: usize,
    /// Embedding dimension `d`.
    pub dim: usize,
    /// Contrastive temperature.
    pub tau: f64,
    pub learning_rate: f64,
    /// Training epochs.
    pub steps: usize,
    pub seed: u64,
}

impl Default for SclConfig {
    fn default() -> Self {
        Self {
            tokens: DEFAULT_TOKENS,
            dim: DEFAULT_DIM,
            tau: DEFAULT_TAU,
            learning_rate: DEFAULT_LEARNING_RATE,
            steps: 200,
            seed: 0,
        }
    }
}

impl SclConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tokens < 1 {
            return Err(Error::InvalidConfig("need at least one summary token"));
        }
        if self.dim < 2 {
            return Err(Error::InvalidConfig("embedding dimension must be at least 2"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig("tau must be positive and finite"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive and finite"));
        }
        Ok(())
    }
}

/// Responses of one question with their answer labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledGroup {
    pub responses: Vec<String>,
    pub labels: Vec<String>,
}

impl LabeledGroup {
    pub fn new(responses: Vec<String>, labels: Vec<String>) -> Result<Self> {
        if responses.len() != labels.len() {
            return Err(Error::LengthMismatch { left: responses.len(), right: labels.len() });
        }
        Ok(Self { responses, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// The trainable `K x d` suffix embedding matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffixEmbeddings {
    tokens: usize,
    dim: usize,
    values: Vec<f64>,
}

impl SuffixEmbeddings {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let tokens = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        if tokens == 0 || dim == 0 {
            return Err(Error::InvalidConfig("suffix embeddings must be nonempty"));
        }
        let mut values = Vec::with_capacity(tokens * dim);
        for (index, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { index, expected: dim, found: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(index));
            }
            values.extend(row);
        }
        Ok(Self { tokens, dim, values })
    }

    pub fn zeros(tokens: usize, dim: usize) -> Self {
        Self { tokens, dim, values: vec![0.0; tokens * dim] }
    }

    /// Entries drawn i.i.d. from `U[-0.1, 0.1]`.
    pub fn seeded(tokens: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..tokens * dim).map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE)).collect();
        Self { tokens, dim, values }
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.values[m * self.dim..(m + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn check_shape(&self, cfg: &SclConfig) -> Result<()> {
        if self.tokens != cfg.tokens || self.dim != cfg.dim {
            return Err(Error::InvalidConfig("suffix embedding shape does not match config"));
        }
        Ok(())
    }
}

/// Frozen text features: hashed unigram counts, l2-normalized.
pub fn text_features(text: &str, dim: usize) -> Vec<f64> {
    let mut phi = vec![0.0; dim];
    for token in unigrams(text) {
        phi[(fnv1a(token.as_bytes()) % dim as u64) as usize] += 1.0;
    }
    let norm = libm::sqrt(dot(&phi, &phi));
    if norm > 0.0 {
        phi.iter_mut().for_each(|v| *v /= norm);
    }
    phi
}

fn states_from_features(phi: &[f64], u: &SuffixEmbeddings) -> Vec<Vec<f64>> {
    (0..u.tokens())
        .map(|m| u.row(m).iter().zip(phi).map(|(w, p)| libm::tanh(p * w)).collect())
        .collect()
}

/// Summary-token states `h_m = tanh(phi(text) * u_m)`.
pub fn toy_encode(text: &str, u: &SuffixEmbeddings, cfg: &SclConfig) -> Result<TokenStates> {
    cfg.validate()?;
    u.check_shape(cfg)?;
    TokenStates::new(states_from_features(&text_features(text, cfg.dim), u))
}

/// Toy-encodes and pools a response into its unit embedding.
pub fn toy_embedding(text: &str, u: &SuffixEmbeddings, cfg: &SclConfig) -> Result<Embedding> {
    mean_pool_normalize(&toy_encode(text, u, cfg)?)
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    max + libm::log(xs.map(|x| libm::exp(x - max)).sum::<f64>())
}

/// Loss and, optionally, its gradient with respect to each `z_i`.
fn contrastive<L: PartialEq>(z: &[&[f64]], labels: &[L], tau: f64, want_grad: bool) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = z.len();
    if n != labels.len() {
        return Err(Error::LengthMismatch { left: n, right: labels.len() });
    }
    if n < 2 {
        return Err(Error::TooFewCandidates { required: 2, found: n });
    }
    let logits: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|k| dot(z[i], z[k]) / tau).collect()).collect();
    let anchors: Vec<(usize, Vec<usize>)> = (0..n)
        .map(|i| (i, (0..n).filter(|&j| j != i && labels[j] == labels[i]).collect::<Vec<_>>()))
        .filter(|(_, pos)| !pos.is_empty())
        .collect();
    if anchors.is_empty() {
        return Err(Error::NoPositivePairs);
    }
    let valid = anchors.len() as f64;
    let dim = z[0].len();
    let mut grads = if want_grad { vec![vec![0.0; dim]; n] } else { Vec::new() };
    let mut loss = 0.0;
    for (i, positives) in &anchors {
        let i = *i;
        let others = (0..n).filter(|&k| k != i).map(|k| logits[i][k]);
        let lse = log_sum_exp(others);
        let pos_mean = positives.iter().map(|&j| logits[i][j]).sum::<f64>() / positives.len() as f64;
        loss += lse - pos_mean;
        if want_grad {
            for k in (0..n).filter(|&k| k != i) {
                let p = libm::exp(logits[i][k] - lse);
                let target = if labels[k] == labels[i] { 1.0 / positives.len() as f64 } else { 0.0 };
                let coef = (p - target) / (valid * tau);
                for c in 0..dim {
                    grads[i][c] += coef * z[k][c];
                    grads[k][c] += coef * z[i][c];
                }
            }
        }
    }
    Ok((loss / valid, grads))
}

/// Supervised contrastive loss over unit embeddings.
///
/// Anchors without positives are skipped and the average runs over the
/// remaining ones.
pub fn scl_loss<L: PartialEq>(embeddings: &[Embedding], labels: &[L], tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidConfig("tau must be positive and finite"));
    }
    let z: Vec<&[f64]> = embeddings.iter().map(Embedding::as_slice).collect();
    contrastive(&z, labels, tau, false).map(|(l, _)| l)
}

/// Loss of one group and its analytic gradient with respect to `u`
/// (row-major `K x d`).
pub fn scl_loss_and_gradient(group: &LabeledGroup, u: &SuffixEmbeddings, cfg: &SclConfig) -> Result<(f64, Vec<f64>)> {
    cfg.validate()?;
    u.check_shape(cfg)?;
    struct Forward {
        phi: Vec<f64>,
        states: Vec<Vec<f64>>,
        z: Vec<f64>,
        norm: f64,
    }
    let k = u.tokens() as f64;
    let forward = group
        .responses
        .iter()
        .map(|text| {
            let phi = text_features(text, cfg.dim);
            let states = states_from_features(&phi, u);
            let mut mean = vec![0.0; cfg.dim];
            for h in &states {
                mean.iter_mut().zip(h).for_each(|(a, v)| *a += v / k);
            }
            let norm = libm::sqrt(dot(&mean, &mean));
            if norm <= ZERO_NORM_EPS {
                return Err(Error::ZeroNorm);
            }
            let z = mean.into_iter().map(|v| v / norm).collect();
            Ok(Forward { phi, states, z, norm })
        })
        .collect::<Result<Vec<_>>>()?;
    let z: Vec<&[f64]> = forward.iter().map(|f| f.z.as_slice()).collect();
    let (loss, grad_z) = contrastive(&z, &group.labels, cfg.tau, true)?;

    let mut grad = vec![0.0; u.tokens() * cfg.dim];
    for (f, gz) in forward.iter().zip(&grad_z) {
        // Project out the radial component: d z / d mean = (I - z z^T) / |mean|.
        let radial = dot(&f.z, gz);
        let g_mean: Vec<f64> = gz.iter().zip(&f.z).map(|(g, zc)| (g - zc * radial) / f.norm).collect();
        for (m, h) in f.states.iter().enumerate() {
            let row = &mut grad[m * cfg.dim..(m + 1) * cfg.dim];
            for c in 0..cfg.dim {
                row[c] += g_mean[c] / k * (1.0 - h[c] * h[c]) * f.phi[c];
            }
        }
    }
    Ok((loss, grad))
}

/// Analytic gradient of the group's contrastive loss with respect to `u`.
pub fn scl_gradient(group: &LabeledGroup, u: &SuffixEmbeddings, cfg: &SclConfig) -> Result<Vec<f64>> {
    scl_loss_and_gradient(group, u, cfg).map(|(_, g)| g)
}

/// Loss of one group under the toy encoder, without the gradient.
pub fn group_loss(group: &LabeledGroup, u: &SuffixEmbeddings, cfg: &SclConfig) -> Result<f64> {
    cfg.validate()?;
    u.check_shape(cfg)?;
    let embeddings = group.responses.iter().map(|t| toy_embedding(t, u, cfg)).collect::<Result<Vec<_>>>()?;
    scl_loss(&embeddings, &group.labels, cfg.tau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub suffix: SuffixEmbeddings,
    /// Mean group loss at the start of every epoch, followed by the mean
    /// loss of the final parameters (`steps + 1` entries).
    pub loss_history: Vec<f64>,
}

/// Full-batch gradient descent, one update per group, groups in order.
pub fn train_summary_embeddings(dataset: &[LabeledGroup], cfg: &SclConfig) -> Result<TrainingOutcome> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("training set is empty"));
    }
    let mut suffix = SuffixEmbeddings::seeded(cfg.tokens, cfg.dim, cfg.seed);
    let mut loss_history = Vec::with_capacity(cfg.steps + 1);
    for _ in 0..cfg.steps {
        let mut total = 0.0;
        for group in dataset {
            let (loss, grad) = scl_loss_and_gradient(group, &suffix, cfg)?;
            total += loss;
            for (w, g) in suffix.as_mut_slice().iter_mut().zip(&grad) {
                *w -= cfg.learning_rate * g;
            }
        }
        loss_history.push(total / dataset.len() as f64);
    }
    let mut total = 0.0;
    for group in dataset {
        total += group_loss(group, &suffix, cfg)?;
    }
    loss_history.push(total / dataset.len() as f64);
    Ok(TrainingOutcome { suffix, loss_history })
}

/// Mean cosine over same-label pairs and over different-label pairs, taken
/// across all within-group pairs of the dataset.
pub fn label_cosine_means(dataset: &[LabeledGroup], u: &SuffixEmbeddings, cfg: &SclConfig) -> Result<(f64, f64)> {
    let (mut intra, mut n_intra, mut inter, mut n_inter) = (0.0, 0usize, 0.0, 0usize);
    for group in dataset {
        let z = group.responses.iter().map(|t| toy_embedding(t, u, cfg)).collect::<Result<Vec<_>>>()?;
        for i in 0..z.len() {
            for j in i + 1..z.len() {
                let c = z[i].dot(&z[j]);
                if group.labels[i] == group.labels[j] {
                    intra += c;
                    n_intra += 1;
                } else {
                    inter += c;
                    n_inter += 1;
                }
            }
        }
    }
    let mean = |s: f64, n: usize| if n == 0 { f64::NAN } else { s / n as f64 };
    Ok((mean(intra, n_intra), mean(inter, n_inter)))
}

/// Two answer labels with disjoint vocabularies, balanced within each group.
///
/// Label `A` responses draw words `amber0..amber11`, label `B` responses
/// draw `cobalt0..cobalt11`; every response has 5 to 8 words.
pub fn synthetic_two_label_dataset(groups: usize, per_group: usize, seed: u64) -> Vec<LabeledGroup> {
    use core::fmt::Write;
    const VOCAB: usize = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..groups)
        .map(|_| {
            let mut responses = Vec::with_capacity(per_group);
            let mut labels = Vec::with_capacity(per_group);
            for r in 0..per_group {
                let (label, stem) = if r % 2 == 0 { ("A", "amber") } else { ("B", "cobalt") };
                let words = rng.random_range(5..=8);
                let mut text = String::new();
                for w in 0..words {
                    if w > 0 {
                        text.push(' ');
                    }
                    let _ = write!(text, "{stem}{}", rng.random_range(0..VOCAB));
                }
                responses.push(text);
                labels.push(String::from(label));
            }
            LabeledGroup { responses, labels }
        })
        .collect()
}
