//! Deviation-based fusion of multi-channel matrices.
//!
//! The crate aggregates matrices of real n-tuples (RGB pixels, feature
//! channels, expert preference stacks) by replacing each disjoint `r x r`
//! block with a single representative tuple. The representative for one
//! channel is the Daroczy-style D-mean: the value `y` balancing
//! `sum_i w_i * D(x_i, y) = 0` for a moderate deviation function `D`.
//!
//! Two evaluation routes are provided and cross-checked against each other:
//!
//! * [`deviation::d_mean_bisect`] solves the balance equation for any
//!   moderate deviation function via the sup/inf-midpoint construction;
//! * [`deviation::d_mean_epsilon_closed`] evaluates the closed form that
//!   exists for the family `D_eps(x, y) = (x + eps)(y - x)`.
//!
//! On top of the scalar means sit block decomposition and fusion
//! ([`matrix`], [`fusion`]), the comparison reducers and the penalty-based
//! selector ([`baselines`]), SSIM/MSE quality metrics ([`metrics`]), an
//! MD/LMD pooling operator with analytic gradients ([`pooling`]), and
//! multi-expert preference fusion ([`decision`]).
//!
//! The crate is `no_std`-compatible (requires `alloc`); enable the `libm`
//! feature instead of the default `std` feature for `no_std` builds.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("devfuse-core needs either the `std` or the `libm` feature");

extern crate alloc;

pub mod baselines;
pub mod decision;
pub mod deviation;
pub mod error;
pub mod fusion;
mod math;
pub mod matrix;
pub mod metrics;
pub mod pooling;

pub use crate::deviation::{
    d_mean_bisect, d_mean_epsilon_closed, two_point_epsilon, DeviationSpec, Interval, MonotoneMap,
    SolverConfig,
};
pub use crate::error::{Error, Result};
pub use crate::fusion::{fuse, reduce_blocks, FusedMatrix, WeightMode, WeightPayload, WeightSpec};
pub use crate::matrix::{Block, MultiMatrix, PadMode};
