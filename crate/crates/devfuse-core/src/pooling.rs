//! MD/LMD pooling: block pooling by the epsilon-family aggregate, with a
//! learnable positive per-channel weight and analytic gradients.
//!
//! The forward pass reduces each disjoint `r x r` window of each channel
//! `c` by the closed form applied to the scaled activations `u = w_c * b`:
//!
//! ```text
//! y = N / Dn,    N = sum_ij u_ij (u_ij + eps),    Dn = r^2 eps + sum_ij u_ij
//! ```
//!
//! Weights scale the inputs rather than the deviation terms: a per-channel
//! scalar on the deviation terms would cancel and the weight would never
//! receive a gradient. At `w_c = 1` the pass is bit-identical to
//! [`crate::fusion::fuse`] with an epsilon spec and unit weights.
//!
//! The backward pass applies the quotient rule:
//!
//! ```text
//! dy/db_ij = w_c ((2 u_ij + eps) Dn - N) / Dn^2
//! dy/dw_c  = sum_ij b_ij ((2 u_ij + eps) Dn - N) / Dn^2
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::deviation::d_mean_epsilon_closed;
use crate::error::{Error, Result};
use crate::matrix::MultiMatrix;

/// An `H x W x C` activation tensor; alias of the planar matrix type.
pub type Tensor3 = MultiMatrix;

/// Whether the channel weights are fixed at one or learnable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolMode {
    /// Unweighted pooling; weights are forced to 1.
    Md,
    /// Learnable positive per-channel weights applied by input scaling.
    Lmd,
}

/// Pooling window size, epsilon, and per-channel weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolParams {
    r: usize,
    epsilon: f64,
    weights: Vec<f64>,
    mode: PoolMode,
}

impl PoolParams {
    /// Unweighted MD pooling over `r x r` windows.
    pub fn md(r: usize, epsilon: f64, channels: usize) -> Result<Self> {
        Self::validate_shape(r, epsilon, channels)?;
        Ok(Self {
            r,
            epsilon,
            weights: vec![1.0; channels],
            mode: PoolMode::Md,
        })
    }

    /// LMD pooling with learnable weights, one positive scalar per channel.
    pub fn lmd(r: usize, epsilon: f64, weights: Vec<f64>) -> Result<Self> {
        Self::validate_shape(r, epsilon, weights.len())?;
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidWeights {
                reason: "pooling weights must be finite and positive",
            });
        }
        Ok(Self {
            r,
            epsilon,
            weights,
            mode: PoolMode::Lmd,
        })
    }

    fn validate_shape(r: usize, epsilon: f64, channels: usize) -> Result<()> {
        if r < 2 {
            return Err(Error::InvalidParameter {
                what: "pooling window r (must be >= 2)",
                value: r as f64,
            });
        }
        if !epsilon.is_finite() || epsilon < 1.0 {
            return Err(Error::InvalidParameter {
                what: "epsilon (must be finite and >= 1)",
                value: epsilon,
            });
        }
        if channels == 0 {
            return Err(Error::Empty { what: "weights" });
        }
        Ok(())
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mode(&self) -> PoolMode {
        self.mode
    }
}

fn check_input(t: &Tensor3, p: &PoolParams) -> Result<()> {
    if t.channels() != p.weights.len() {
        return Err(Error::LengthMismatch {
            what: "pooling weights vs channels",
            expected: t.channels(),
            got: p.weights.len(),
        });
    }
    if !t.rows().is_multiple_of(p.r) {
        return Err(Error::NotDivisible {
            what: "tensor height",
            dim: t.rows(),
            r: p.r,
        });
    }
    if !t.cols().is_multiple_of(p.r) {
        return Err(Error::NotDivisible {
            what: "tensor width",
            dim: t.cols(),
            r: p.r,
        });
    }
    Ok(())
}

/// Forward pooling pass: `(H, W, C) -> (H/r, W/r, C)`.
///
/// The window size must divide both spatial dimensions; pad with edge
/// replication first otherwise.
pub fn md_pool_forward(t: &Tensor3, p: &PoolParams) -> Result<Tensor3> {
    check_input(t, p)?;
    let r = p.r;
    let out_rows = t.rows() / r;
    let out_cols = t.cols() / r;
    let mut out = MultiMatrix::filled(out_rows, out_cols, t.channels(), 0.0)?;
    let unit = vec![1.0; r * r];
    let mut scaled = vec![0.0; r * r];
    for k in 0..t.channels() {
        let w = p.weights[k];
        for a in 0..out_rows {
            for b in 0..out_cols {
                for i in 0..r {
                    for j in 0..r {
                        scaled[i * r + j] = w * t.get(a * r + i, b * r + j, k);
                    }
                }
                let y = d_mean_epsilon_closed(&scaled, &unit, p.epsilon)?;
                out.set(a, b, k, y);
            }
        }
    }
    Ok(out)
}

/// Backward pooling pass: gradients of the pooled outputs with respect to
/// the input activations and the per-channel weights.
///
/// `grad_out` must have shape `(H/r, W/r, C)`. Window contributions to
/// `grad_w` accumulate channel-major, row-major, so the reduction order is
/// fixed.
pub fn md_pool_backward(
    t: &Tensor3,
    p: &PoolParams,
    grad_out: &Tensor3,
) -> Result<(Tensor3, Vec<f64>)> {
    check_input(t, p)?;
    let r = p.r;
    let out_rows = t.rows() / r;
    let out_cols = t.cols() / r;
    if grad_out.rows() != out_rows
        || grad_out.cols() != out_cols
        || grad_out.channels() != t.channels()
    {
        return Err(Error::LengthMismatch {
            what: "grad_out shape",
            expected: out_rows * out_cols * t.channels(),
            got: grad_out.data().len(),
        });
    }
    let eps = p.epsilon;
    let window = (r * r) as f64;
    let mut grad_in = MultiMatrix::filled(t.rows(), t.cols(), t.channels(), 0.0)?;
    let mut grad_w = vec![0.0; t.channels()];
    for (k, grad_w_k) in grad_w.iter_mut().enumerate() {
        let w = p.weights[k];
        for a in 0..out_rows {
            for b in 0..out_cols {
                // N, Dn for this window
                let mut num = 0.0;
                let mut sum_u = 0.0;
                for i in 0..r {
                    for j in 0..r {
                        let u = w * t.get(a * r + i, b * r + j, k);
                        num += u * (u + eps);
                        sum_u += u;
                    }
                }
                let den = window * eps + sum_u;
                if den == 0.0 {
                    return Err(Error::DegenerateInput { denominator: den });
                }
                let inv_den_sq = 1.0 / (den * den);
                let g = grad_out.get(a, b, k);
                let mut w_acc = 0.0;
                for i in 0..r {
                    for j in 0..r {
                        let x = t.get(a * r + i, b * r + j, k);
                        let u = w * x;
                        let common = ((2.0 * u + eps) * den - num) * inv_den_sq;
                        grad_in.set(a * r + i, b * r + j, k, g * w * common);
                        w_acc += x * common;
                    }
                }
                *grad_w_k += g * w_acc;
            }
        }
    }
    Ok((grad_in, grad_w))
}
