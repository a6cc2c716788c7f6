//! Response embeddings and their pairwise cosine similarity.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Norm below which a pooled vector is treated as degenerate.
pub const ZERO_NORM_EPS: f64 = 1e-12;

/// Allowed drift of an [`Embedding`] from unit length.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Final-layer states of the `K` summary tokens appended to one response.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenStates {
    rows: Vec<Vec<f64>>,
    dim: usize,
}

impl TokenStates {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::InvalidConfig("token states must be nonempty"))?;
        if dim == 0 {
            return Err(Error::InvalidConfig("token state dimension must be positive"));
        }
        for (index, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { index, expected: dim, found: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(index));
            }
        }
        Ok(Self { rows, dim })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn token_count(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// A unit-norm response representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Scales `v` to unit length.
    pub fn normalize(v: Vec<f64>) -> Result<Self> {
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let norm = l2_norm(&v);
        if norm <= ZERO_NORM_EPS {
            return Err(Error::ZeroNorm);
        }
        Ok(Self(v.into_iter().map(|x| x / norm).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        dot(&self.0, &other.0)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

/// Mean-pools the summary-token states and normalizes the result.
pub fn mean_pool_normalize(states: &TokenStates) -> Result<Embedding> {
    let k = states.token_count() as f64;
    let mut mean = alloc::vec![0.0; states.dim()];
    for row in states.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= k;
    }
    Embedding::normalize(mean)
}

/// Dense symmetric `N x N` cosine matrix with a unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds a matrix from the strict upper triangle `f(i, j)`, `i < j`.
    /// Values are clamped into `[-1, 1]`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewCandidates { required: 2, found: n });
        }
        let mut values = alloc::vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
            for j in i + 1..n {
                let s = f(i, j);
                if !s.is_finite() {
                    return Err(Error::NonFinite(i * n + j));
                }
                let s = s.clamp(-1.0, 1.0);
                values[i * n + j] = s;
                values[j * n + i] = s;
            }
        }
        Ok(Self { n, values })
    }

    /// Validates a full row-major matrix. The diagonal is overwritten with 1.
    pub fn from_row_major(n: usize, mut values: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewCandidates { required: 2, found: n });
        }
        if values.len() != n * n {
            return Err(Error::LengthMismatch { left: values.len(), right: n * n });
        }
        for i in 0..n {
            values[i * n + i] = 1.0;
            for j in i + 1..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::NonFinite(i * n + j));
                }
                if libm::fabs(a - b) > UNIT_NORM_TOL {
                    return Err(Error::InvalidConfig("similarity matrix is not symmetric"));
                }
                if libm::fabs(a) > 1.0 + UNIT_NORM_TOL {
                    return Err(Error::InvalidConfig("similarity outside [-1, 1]"));
                }
                let s = a.clamp(-1.0, 1.0);
                values[i * n + j] = s;
                values[j * n + i] = s;
            }
        }
        Ok(Self { n, values })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Off-diagonal entries of row `i`, as `(peer, similarity)`.
    pub fn peers(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row(i).iter().copied().enumerate().filter(move |&(j, _)| j != i)
    }
}

/// Pairwise cosine similarities of unit embeddings.
pub fn cosine_similarity_matrix(embeddings: &[Embedding]) -> Result<SimilarityMatrix> {
    let n = embeddings.len();
    if n < 2 {
        return Err(Error::TooFewCandidates { required: 2, found: n });
    }
    let dim = embeddings[0].dim();
    for (index, e) in embeddings.iter().enumerate() {
        if e.dim() != dim {
            return Err(Error::DimensionMismatch { index, expected: dim, found: e.dim() });
        }
    }
    SimilarityMatrix::from_fn(n, |i, j| embeddings[i].dot(&embeddings[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn states(rows: &[&[f64]]) -> TokenStates {
        TokenStates::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn unit(v: &[f64]) -> Embedding {
        Embedding::normalize(v.to_vec()).unwrap()
    }

    #[test]
    fn pool_single_vector() {
        let z = mean_pool_normalize(&states(&[&[3.0, 4.0]])).unwrap();
        assert!((z.as_slice()[0] - 0.6).abs() < 1e-15);
        assert!((z.as_slice()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn pool_symmetric_pair() {
        let z = mean_pool_normalize(&states(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((z.as_slice()[0] - h).abs() < 1e-15);
        assert!((z.as_slice()[1] - h).abs() < 1e-15);
    }

    #[test]
    fn pool_cancelling_pair_is_zero_norm() {
        let err = mean_pool_normalize(&states(&[&[1.0, 0.0], &[-1.0, 0.0]])).unwrap_err();
        assert_eq!(err, Error::ZeroNorm);
    }

    #[test]
    fn ragged_states_rejected() {
        let err = TokenStates::new(vec![vec![1.0, 0.0], vec![1.0]]).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { index: 1, expected: 2, found: 1 });
    }

    #[test]
    fn cosine_examples() {
        let s = cosine_similarity_matrix(&[unit(&[1.0, 0.0]), unit(&[1.0, 0.0])]).unwrap();
        assert_eq!(s.get(0, 1), 1.0);
        let s = cosine_similarity_matrix(&[unit(&[1.0, 0.0]), unit(&[0.0, 1.0])]).unwrap();
        assert_eq!(s.get(0, 1), 0.0);
        let s = cosine_similarity_matrix(&[unit(&[1.0, 0.0]), unit(&[0.6, 0.8]), unit(&[0.0, 1.0])]).unwrap();
        assert!((s.get(0, 1) - 0.6).abs() < 1e-12);
        assert!((s.get(0, 2) - 0.0).abs() < 1e-12);
        assert!((s.get(1, 2) - 0.8).abs() < 1e-12);
        assert_eq!(s.get(2, 1), s.get(1, 2));
        assert_eq!(s.get(1, 1), 1.0);
    }

    #[test]
    fn cosine_errors() {
        assert_eq!(
            cosine_similarity_matrix(&[unit(&[1.0, 0.0])]).unwrap_err(),
            Error::TooFewCandidates { required: 2, found: 1 }
        );
        assert_eq!(
            cosine_similarity_matrix(&[unit(&[1.0, 0.0]), unit(&[1.0, 0.0, 0.0])]).unwrap_err(),
            Error::DimensionMismatch { index: 1, expected: 2, found: 3 }
        );
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let err = SimilarityMatrix::from_row_major(2, vec![1.0, 0.5, 0.4, 1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }
}
