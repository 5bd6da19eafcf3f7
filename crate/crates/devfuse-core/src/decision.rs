//! Multi-expert decision making: fuse a stack of pairwise preference
//! matrices into a collective matrix, derive its aggregational preference
//! column, and rank the alternatives.
//!
//! Expert `k` contributes a `p x p` matrix with `x_ijk` in `[0, 1]` encoding
//! the preference of alternative `i` over alternative `j`; the diagonal
//! holds a fixed self-preference value (0.5 meaning indifference, by
//! convention). Each cell of the collective matrix is the weighted
//! epsilon-family mean of the expert values, and each `d_i` the unweighted
//! mean of collective row `i`. The diagonal term stays in the row sum.

use alloc::vec;
use alloc::vec::Vec;

use crate::deviation::d_mean_epsilon_closed;
use crate::error::{Error, Result};

/// The default self-preference on matrix diagonals.
pub const DEFAULT_DIAGONAL: f64 = 0.5;

/// A `p x p x n` stack of expert preference matrices.
///
/// Layout: `data[k * p * p + i * p + j]` is `x_ijk`. All entries must lie
/// in `[0, 1]` and every diagonal entry must equal `diagonal_value`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceTensor {
    alternatives: usize,
    experts: usize,
    diagonal_value: f64,
    data: Vec<f64>,
}

impl PreferenceTensor {
    pub fn new(
        alternatives: usize,
        experts: usize,
        data: Vec<f64>,
        diagonal_value: f64,
    ) -> Result<Self> {
        if alternatives < 2 {
            return Err(Error::InvalidParameter {
                what: "alternatives (must be >= 2)",
                value: alternatives as f64,
            });
        }
        if experts == 0 {
            return Err(Error::Empty { what: "experts" });
        }
        let expected = alternatives * alternatives * experts;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                what: "preference data",
                expected,
                got: data.len(),
            });
        }
        if data
            .iter()
            .any(|v| !v.is_finite() || !(0.0..=1.0).contains(v))
        {
            return Err(Error::OutOfDomain {
                what: "preferences must lie in [0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&diagonal_value) {
            return Err(Error::InvalidParameter {
                what: "diagonal value (must be in [0, 1])",
                value: diagonal_value,
            });
        }
        for k in 0..experts {
            for i in 0..alternatives {
                if data[k * alternatives * alternatives + i * alternatives + i] != diagonal_value {
                    return Err(Error::OutOfDomain {
                        what: "diagonal entries must equal the fixed diagonal value",
                    });
                }
            }
        }
        Ok(Self {
            alternatives,
            experts,
            diagonal_value,
            data,
        })
    }

    /// Builds the tensor from one `p x p` nested matrix per expert.
    pub fn from_expert_matrices(matrices: &[Vec<Vec<f64>>], diagonal_value: f64) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::Empty { what: "experts" });
        }
        let p = matrices[0].len();
        let mut data = Vec::with_capacity(p * p * matrices.len());
        for m in matrices {
            if m.len() != p {
                return Err(Error::LengthMismatch {
                    what: "expert matrix rows",
                    expected: p,
                    got: m.len(),
                });
            }
            for row in m {
                if row.len() != p {
                    return Err(Error::LengthMismatch {
                        what: "expert matrix cols",
                        expected: p,
                        got: row.len(),
                    });
                }
                data.extend_from_slice(row);
            }
        }
        Self::new(p, matrices.len(), data, diagonal_value)
    }

    pub fn alternatives(&self) -> usize {
        self.alternatives
    }

    pub fn experts(&self) -> usize {
        self.experts
    }

    pub fn diagonal_value(&self) -> f64 {
        self.diagonal_value
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let p = self.alternatives;
        assert!(i < p && j < p && k < self.experts, "index out of range");
        self.data[k * p * p + i * p + j]
    }

    /// The preference vector `x_ij.` across experts.
    pub fn preference_vector(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.experts).map(|k| self.get(i, j, k)).collect()
    }
}

/// Non-negative expert weights, at least one positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertWeights(Vec<f64>);

impl ExpertWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty { what: "weights" });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights {
                reason: "expert weights must be finite and non-negative",
            });
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::InvalidWeights {
                reason: "at least one expert weight must be positive",
            });
        }
        Ok(Self(weights))
    }

    pub fn unit(experts: usize) -> Self {
        Self(vec![1.0; experts])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The expert-fused `p x p` collective preference matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveMatrix {
    alternatives: usize,
    data: Vec<f64>,
}

impl CollectiveMatrix {
    pub fn alternatives(&self) -> usize {
        self.alternatives
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(
            i < self.alternatives && j < self.alternatives,
            "index out of range"
        );
        self.data[i * self.alternatives + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        assert!(i < self.alternatives, "index out of range");
        &self.data[i * self.alternatives..(i + 1) * self.alternatives]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.alternatives)
            .map(|i| self.row(i).to_vec())
            .collect()
    }
}

/// The row-wise aggregate `d` and the ranking it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceColumn {
    values: Vec<f64>,
    ranking: Vec<usize>,
}

impl PreferenceColumn {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Alternatives ordered best-first, 0-based. Displays and wire formats
    /// conventionally add 1.
    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }
}

/// Fuses the expert stack into the collective matrix:
/// `c_ij = sum_k w_k x_ijk (x_ijk + eps) / sum_k w_k (x_ijk + eps)`,
/// the exact root of the weighted epsilon-family balance equation.
/// Unanimous entries (in particular the diagonal) come back exactly.
pub fn collective_matrix(
    x: &PreferenceTensor,
    w: &ExpertWeights,
    epsilon: f64,
) -> Result<CollectiveMatrix> {
    if w.len() != x.experts() {
        return Err(Error::LengthMismatch {
            what: "expert weights",
            expected: x.experts(),
            got: w.len(),
        });
    }
    let p = x.alternatives();
    let mut data = Vec::with_capacity(p * p);
    let mut stack = vec![0.0; x.experts()];
    for i in 0..p {
        for j in 0..p {
            for (k, slot) in stack.iter_mut().enumerate() {
                *slot = x.get(i, j, k);
            }
            data.push(d_mean_epsilon_closed(&stack, w.as_slice(), epsilon)?);
        }
    }
    Ok(CollectiveMatrix {
        alternatives: p,
        data,
    })
}

/// Aggregates each collective row into `d_i`, the unweighted epsilon-family
/// mean of `(c_i1, ..., c_ip)` (the diagonal included), and ranks the
/// alternatives by descending `d_i`.
pub fn preference_column(c: &CollectiveMatrix, epsilon: f64) -> Result<PreferenceColumn> {
    let p = c.alternatives();
    let unit = vec![1.0; p];
    let mut values = Vec::with_capacity(p);
    for i in 0..p {
        values.push(d_mean_epsilon_closed(c.row(i), &unit, epsilon)?);
    }
    let ranking = rank_alternatives(&values);
    Ok(PreferenceColumn { values, ranking })
}

/// Indices sorted by score descending; ties break toward the smaller index.
pub fn rank_alternatives(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}
