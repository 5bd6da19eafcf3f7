//! Finite-difference verification of the pooling gradients.
//!
//! Each trial draws a random window, epsilon, and channel weight, runs the
//! analytic backward pass, and compares it against central finite
//! differences of the forward pass. Errors are measured as the relative
//! L2 distance over the joint (input gradients, weight gradient) vector;
//! individual components can pass arbitrarily close to zero, where a
//! per-component relative error would be ill-conditioned.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use devfuse_core::pooling::{md_pool_backward, md_pool_forward, PoolParams};
use devfuse_core::MultiMatrix;

use crate::error::{Error, Result};

/// Maximum joint relative error accepted from the analytic gradients.
pub const GRAD_TOLERANCE: f64 = 1e-6;
/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub trials: usize,
    pub max_rel_err: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < GRAD_TOLERANCE
    }
}

/// Runs `trials` randomized gradient checks over the given window sizes and
/// epsilons, with weights drawn from `[0.5, 2]` and activations from
/// `[0, 1]`.
pub fn pool_grad_check(
    trials: usize,
    r_list: &[usize],
    eps_list: &[f64],
    seed: u64,
) -> Result<GradCheckReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    if r_list.is_empty() || eps_list.is_empty() {
        return Err(Error::invalid("need at least one r and one eps"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel_err = 0.0f64;
    for _ in 0..trials {
        let r = r_list[rng.random_range(0..r_list.len())];
        let eps = eps_list[rng.random_range(0..eps_list.len())];
        let w = rng.random_range(0.5..=2.0);
        let data: Vec<f64> = (0..r * r).map(|_| rng.random_range(0.0..=1.0)).collect();
        let rel = single_window_rel_err(r, eps, w, data)?;
        max_rel_err = max_rel_err.max(rel);
    }
    Ok(GradCheckReport {
        trials,
        max_rel_err,
    })
}

fn single_window_rel_err(r: usize, eps: f64, w: f64, data: Vec<f64>) -> Result<f64> {
    let t = MultiMatrix::new(r, r, 1, data)?;
    let params = PoolParams::lmd(r, eps, vec![w])?;
    let grad_out = MultiMatrix::filled(1, 1, 1, 1.0)?;
    let (grad_in, grad_w) = md_pool_backward(&t, &params, &grad_out)?;

    let forward = |t: &MultiMatrix, p: &PoolParams| -> Result<f64> {
        Ok(md_pool_forward(t, p)?.get(0, 0, 0))
    };

    let mut diff_sq = 0.0;
    let mut norm_sq = 0.0;
    for idx in 0..t.data().len() {
        let mut plus = t.data().to_vec();
        let mut minus = t.data().to_vec();
        plus[idx] += FD_STEP;
        minus[idx] -= FD_STEP;
        let fd = (forward(&MultiMatrix::new(r, r, 1, plus)?, &params)?
            - forward(&MultiMatrix::new(r, r, 1, minus)?, &params)?)
            / (2.0 * FD_STEP);
        let a = grad_in.data()[idx];
        diff_sq += (a - fd) * (a - fd);
        norm_sq += fd * fd;
    }
    let fd_w = (forward(&t, &PoolParams::lmd(r, eps, vec![w + FD_STEP])?)?
        - forward(&t, &PoolParams::lmd(r, eps, vec![w - FD_STEP])?)?)
        / (2.0 * FD_STEP);
    diff_sq += (grad_w[0] - fd_w) * (grad_w[0] - fd_w);
    norm_sq += fd_w * fd_w;

    Ok(diff_sq.sqrt() / norm_sq.sqrt().max(1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn randomized_check_passes() {
        let report = pool_grad_check(50, &[2, 3], &[1.0, 2.0, 32.0], 1234).unwrap();
        assert_eq!(report.trials, 50);
        assert!(report.passed(), "max rel err {}", report.max_rel_err);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = pool_grad_check(10, &[2], &[1.0], 9).unwrap();
        let b = pool_grad_check(10, &[2], &[1.0], 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn argument_validation() {
        assert!(pool_grad_check(0, &[2], &[1.0], 1).is_err());
        assert!(pool_grad_check(1, &[], &[1.0], 1).is_err());
        assert!(pool_grad_check(1, &[2], &[], 1).is_err());
    }
}
