//! Block-wise fusion: the weighted deviation-based aggregational substitute.
//!
//! [`fuse`] replaces every disjoint `r x r` block of a matrix of n-tuples by
//! one representative tuple, producing a `(rows/r) x (cols/r)` matrix. Each
//! channel of each block is reduced independently; blocks are processed
//! row-major with a fixed per-block summation order (row-major within the
//! block), so the result does not depend on evaluation strategy.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::deviation::{d_mean_bisect, d_mean_epsilon_closed, DeviationSpec, SolverConfig};
use crate::error::{Error, Result};
use crate::matrix::{Block, MultiMatrix};

/// The `(rows/r) x (cols/r)` aggregational substitute of a matrix.
pub type FusedMatrix = MultiMatrix;

/// How weights enter the per-block balance equation.
///
/// The two modes are not algebraically equivalent. `DeviationWeighted`
/// multiplies each deviation term, so a per-channel scalar weight cancels
/// between numerator and denominator; `InputScaled` multiplies the inputs
/// themselves, so the same scalar changes the result. Pooling with a
/// learnable weight therefore uses `InputScaled`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Solve `sum_ij w_ijk * D(b_ijk, y) = 0`.
    DeviationWeighted,
    /// Solve `sum_ij D(w_ijk * b_ijk, y) = 0`, i.e. aggregate the scaled block.
    InputScaled,
}

/// Weight data: one scalar per channel, or one `r x r` matrix per channel.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightPayload {
    /// `w[k]` applies to every entry of channel `k`.
    ChannelVector(Vec<f64>),
    /// `per_entry[k]` is a row-major `r x r` weighting matrix for channel `k`.
    PerEntry(Vec<Vec<f64>>),
}

/// A weighting mode plus its payload.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    pub mode: WeightMode,
    pub payload: WeightPayload,
}

impl WeightSpec {
    /// Unit channel weights in deviation-weighted mode: the plain
    /// unweighted aggregation.
    pub fn unit(channels: usize) -> Self {
        Self {
            mode: WeightMode::DeviationWeighted,
            payload: WeightPayload::ChannelVector(vec![1.0; channels]),
        }
    }

    pub fn deviation_weighted(payload: WeightPayload) -> Self {
        Self {
            mode: WeightMode::DeviationWeighted,
            payload,
        }
    }

    pub fn input_scaled(payload: WeightPayload) -> Self {
        Self {
            mode: WeightMode::InputScaled,
            payload,
        }
    }

    /// Per-entry weights for channel `k`, expanded into `buf` (length r*r).
    fn fill_entry_weights(&self, k: usize, buf: &mut [f64]) {
        match &self.payload {
            WeightPayload::ChannelVector(w) => buf.fill(w[k]),
            WeightPayload::PerEntry(mats) => buf.copy_from_slice(&mats[k]),
        }
    }

    fn validate(&self, channels: usize, r: usize) -> Result<()> {
        match &self.payload {
            WeightPayload::ChannelVector(w) => {
                if w.len() != channels {
                    return Err(Error::LengthMismatch {
                        what: "channel weight vector",
                        expected: channels,
                        got: w.len(),
                    });
                }
                if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidWeights {
                        reason: "channel weights must be finite and non-negative",
                    });
                }
                if self.mode == WeightMode::DeviationWeighted && w.contains(&0.0) {
                    return Err(Error::InvalidWeights {
                        reason: "deviation-weighted channel weights must be positive",
                    });
                }
            }
            WeightPayload::PerEntry(mats) => {
                if mats.len() != channels {
                    return Err(Error::LengthMismatch {
                        what: "per-entry weight matrices",
                        expected: channels,
                        got: mats.len(),
                    });
                }
                for m in mats {
                    if m.len() != r * r {
                        return Err(Error::LengthMismatch {
                            what: "per-entry weight matrix",
                            expected: r * r,
                            got: m.len(),
                        });
                    }
                    if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        return Err(Error::InvalidWeights {
                            reason: "entry weights must be finite and non-negative",
                        });
                    }
                    if self.mode == WeightMode::DeviationWeighted && !m.iter().any(|v| *v > 0.0) {
                        return Err(Error::InvalidWeights {
                            reason: "each channel needs at least one positive entry weight",
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Applies `reducer` to every disjoint `r x r` block, row-major, collecting
/// the returned n-tuples into the `(rows/r) x (cols/r)` output matrix.
///
/// `r` must divide both dimensions; pad first for arbitrary sizes.
pub fn reduce_blocks<F>(m: &MultiMatrix, r: usize, mut reducer: F) -> Result<FusedMatrix>
where
    F: FnMut(&Block) -> Result<Vec<f64>>,
{
    if r < 2 {
        return Err(Error::InvalidParameter {
            what: "r (must be >= 2)",
            value: r as f64,
        });
    }
    if !m.rows().is_multiple_of(r) {
        return Err(Error::NotDivisible {
            what: "rows",
            dim: m.rows(),
            r,
        });
    }
    if !m.cols().is_multiple_of(r) {
        return Err(Error::NotDivisible {
            what: "cols",
            dim: m.cols(),
            r,
        });
    }
    let out_rows = m.rows() / r;
    let out_cols = m.cols() / r;
    let channels = m.channels();
    let mut out = MultiMatrix::filled(out_rows, out_cols, channels, 0.0)?;
    for a in 0..out_rows {
        for b in 0..out_cols {
            let block = m.extract_block(a, b, r)?;
            let tuple = reducer(&block)?;
            if tuple.len() != channels {
                return Err(Error::LengthMismatch {
                    what: "reducer tuple",
                    expected: channels,
                    got: tuple.len(),
                });
            }
            for (k, &v) in tuple.iter().enumerate() {
                out.set(a, b, k, v);
            }
        }
    }
    Ok(out)
}

/// Weighted deviation-based fusion of every `r x r` block.
///
/// Epsilon-family specs are evaluated through the closed form, everything
/// else through bisection. Solver failures are annotated with the 1-based
/// `(alpha, beta, channel)` coordinates of the offending block.
pub fn fuse(
    m: &MultiMatrix,
    r: usize,
    spec: &DeviationSpec,
    weights: &WeightSpec,
    cfg: &SolverConfig,
) -> Result<FusedMatrix> {
    weights.validate(m.channels(), r)?;
    let entries = r * r;
    // Per-channel entry weights are the same for every block; expand once.
    let mut channel_weights = vec![vec![0.0; entries]; m.channels()];
    for (k, buf) in channel_weights.iter_mut().enumerate() {
        weights.fill_entry_weights(k, buf);
    }
    let unit = vec![1.0; entries];
    let mut scaled = vec![0.0; entries];

    reduce_blocks(m, r, |block| {
        let mut tuple = Vec::with_capacity(block.channels());
        for (k, entry_weights) in channel_weights.iter().enumerate() {
            let values = block.channel_values(k);
            let solved = match weights.mode {
                WeightMode::DeviationWeighted => solve_channel(spec, values, entry_weights, cfg),
                WeightMode::InputScaled => {
                    for (u, (&x, &w)) in scaled.iter_mut().zip(values.iter().zip(entry_weights)) {
                        *u = w * x;
                    }
                    solve_channel(spec, &scaled, &unit, cfg)
                }
            };
            let (alpha, beta) = block.origin();
            tuple.push(solved.map_err(|e| Error::Fusion {
                alpha,
                beta,
                channel: k + 1,
                source: Box::new(e),
            })?);
        }
        Ok(tuple)
    })
}

fn solve_channel(
    spec: &DeviationSpec,
    values: &[f64],
    weights: &[f64],
    cfg: &SolverConfig,
) -> Result<f64> {
    match spec.epsilon_value() {
        Some(eps) => d_mean_epsilon_closed(values, weights, eps),
        None => d_mean_bisect(spec, values, weights, cfg),
    }
}
