//! Comparison reducers: mean, median, gaussian, geometric mean, K-alpha,
//! centered OWA, min/max, and the penalty-based selector.
//!
//! All reducers are internal: the output lies within `[min, max]` of the
//! inputs (the geometric mean additionally requires non-negative inputs).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Block;

/// Identifier of one plain reducer, or of a penalty selection over a
/// candidate set.
#[derive(Debug, Clone, PartialEq)]
pub enum AggregatorId {
    Mean,
    /// Lower median: for an even count the smaller of the two middle values.
    Median,
    /// Gaussian-weighted mean over the block grid, sigma = r/2, kernel
    /// centered on the block and renormalized over it. The input length
    /// must be a perfect square.
    Gaussian,
    GeometricMean,
    /// `(1 - alpha) * min + alpha * max` for `alpha` in [0, 1].
    KAlpha(f64),
    /// Ordered weighted average with a symmetric triangular weight profile
    /// over the sorted inputs, e.g. (1, 2, 2, 1)/6 for four inputs.
    CenteredOwa,
    Min,
    Max,
    /// Per channel, pick the candidate whose joint output minimizes the
    /// summed Euclidean distance to the block pixels.
    Penalty(Vec<AggregatorId>),
}

impl AggregatorId {
    /// The candidate set used by the penalty reducer when none is given:
    /// geometric mean, minimum, maximum, average, median.
    pub fn default_penalty_candidates() -> Vec<AggregatorId> {
        vec![
            AggregatorId::GeometricMean,
            AggregatorId::Min,
            AggregatorId::Max,
            AggregatorId::Mean,
            AggregatorId::Median,
        ]
    }
}

impl fmt::Display for AggregatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregatorId::Mean => write!(f, "mean"),
            AggregatorId::Median => write!(f, "median"),
            AggregatorId::Gaussian => write!(f, "gaussian"),
            AggregatorId::GeometricMean => write!(f, "geomean"),
            AggregatorId::KAlpha(a) => write!(f, "k{a}"),
            AggregatorId::CenteredOwa => write!(f, "cowa"),
            AggregatorId::Min => write!(f, "min"),
            AggregatorId::Max => write!(f, "max"),
            AggregatorId::Penalty(_) => write!(f, "penalty"),
        }
    }
}

/// Reduces a flat list of values with the named aggregator.
pub fn reduce_plain(values: &[f64], id: &AggregatorId) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty { what: "values" });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "values" });
    }
    match id {
        AggregatorId::Mean => Ok(values.iter().sum::<f64>() / values.len() as f64),
        AggregatorId::Median => {
            let mut sorted = values.to_vec();
            sorted.sort_unstable_by(f64::total_cmp);
            Ok(sorted[(sorted.len() - 1) / 2])
        }
        AggregatorId::Gaussian => gaussian_mean(values),
        AggregatorId::GeometricMean => {
            if values.iter().any(|v| *v < 0.0) {
                return Err(Error::OutOfDomain {
                    what: "geometric mean of negative values",
                });
            }
            let product: f64 = values.iter().product();
            Ok(math::powf(product, 1.0 / values.len() as f64))
        }
        AggregatorId::KAlpha(alpha) => {
            if !alpha.is_finite() || !(0.0..=1.0).contains(alpha) {
                return Err(Error::InvalidParameter {
                    what: "K-alpha parameter (must be in [0, 1])",
                    value: *alpha,
                });
            }
            let (min, max) = min_max(values);
            Ok((1.0 - alpha) * min + alpha * max)
        }
        AggregatorId::CenteredOwa => {
            let mut sorted = values.to_vec();
            sorted.sort_unstable_by(f64::total_cmp);
            let m = sorted.len();
            let mut total = 0.0;
            let mut acc = 0.0;
            for (i, &v) in sorted.iter().enumerate() {
                let w = (i + 1).min(m - i) as f64;
                total += w;
                acc += w * v;
            }
            Ok(acc / total)
        }
        AggregatorId::Min => Ok(min_max(values).0),
        AggregatorId::Max => Ok(min_max(values).1),
        AggregatorId::Penalty(candidates) => {
            let reduction = penalty_select(&[values], candidates)?;
            Ok(reduction.tuple[0])
        }
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let mut min = values[0];
    let mut max = values[0];
    for &v in &values[1..] {
        if v < min {
            min = v;
        }
        if v > max {
            max = v;
        }
    }
    (min, max)
}

fn gaussian_mean(values: &[f64]) -> Result<f64> {
    let m = values.len();
    let r = integer_sqrt(m).ok_or(Error::OutOfDomain {
        what: "gaussian reducer needs a square grid",
    })?;
    let sigma = r as f64 / 2.0;
    let center = (r as f64 - 1.0) / 2.0;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut total = 0.0;
    let mut acc = 0.0;
    for i in 0..r {
        for j in 0..r {
            let di = i as f64 - center;
            let dj = j as f64 - center;
            let w = math::exp(-(di * di + dj * dj) * inv);
            total += w;
            acc += w * values[i * r + j];
        }
    }
    Ok(acc / total)
}

fn integer_sqrt(m: usize) -> Option<usize> {
    let mut r = 0usize;
    while r * r < m {
        r += 1;
    }
    (r * r == m).then_some(r)
}

/// Outcome of a penalty reduction: the winning tuple, its penalty, how many
/// candidate assignments were evaluated, and which `(channel, candidate)`
/// pairs were skipped because the candidate errored on that channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyReduction {
    pub tuple: Vec<f64>,
    pub penalty: f64,
    pub assignments: usize,
    pub skipped: Vec<(usize, usize)>,
}

impl PenaltyReduction {
    pub fn warnings(&self) -> Vec<String> {
        self.skipped
            .iter()
            .map(|(ch, cand)| format!("candidate {cand} skipped for channel {ch}"))
            .collect()
    }
}

/// Penalty-based selection over a block of n-tuples.
///
/// Every assignment of one candidate per channel (the Cartesian power, so
/// `|candidates|^n` tuples when nothing errors) is scored by the summed
/// Euclidean distance `sum_pixels ||b - y||_2` and the minimizer is
/// returned. Ties go to the first minimum in lexicographic candidate-index
/// order. A candidate that errors on some channel is skipped there and
/// recorded; a channel with no surviving candidate fails the reduction.
pub fn penalty_reduce(block: &Block, candidates: &[AggregatorId]) -> Result<PenaltyReduction> {
    let channels: Vec<&[f64]> = (0..block.channels())
        .map(|k| block.channel_values(k))
        .collect();
    penalty_select(&channels, candidates)
}

#[allow(clippy::needless_range_loop)] // pixel index spans several channel slices
fn penalty_select(channels: &[&[f64]], candidates: &[AggregatorId]) -> Result<PenaltyReduction> {
    if candidates.is_empty() {
        return Err(Error::Empty { what: "candidates" });
    }
    let n = channels.len();
    let pixels = channels[0].len();

    // Candidate outputs per channel; erroring candidates are dropped.
    let mut outputs: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut skipped = Vec::new();
    for (k, values) in channels.iter().enumerate() {
        let mut per_channel = Vec::with_capacity(candidates.len());
        for (c, cand) in candidates.iter().enumerate() {
            match reduce_plain(values, cand) {
                Ok(y) => per_channel.push((c, y)),
                Err(_) => skipped.push((k, c)),
            }
        }
        if per_channel.is_empty() {
            return Err(Error::AllCandidatesFailed { channel: k });
        }
        outputs.push(per_channel);
    }

    // Odometer over the surviving candidates, lexicographic in the original
    // candidate indices since each per-channel list preserves their order.
    let mut choice = vec![0usize; n];
    let mut best_tuple = vec![0.0; n];
    let mut best_penalty = f64::INFINITY;
    let mut assignments = 0usize;
    let mut tuple = vec![0.0; n];
    loop {
        for k in 0..n {
            tuple[k] = outputs[k][choice[k]].1;
        }
        let mut penalty = 0.0;
        for p in 0..pixels {
            let mut sq = 0.0;
            for k in 0..n {
                let d = channels[k][p] - tuple[k];
                sq += d * d;
            }
            penalty += math::sqrt(sq);
        }
        assignments += 1;
        if penalty < best_penalty {
            best_penalty = penalty;
            best_tuple.copy_from_slice(&tuple);
        }

        // advance the odometer
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(PenaltyReduction {
                    tuple: best_tuple,
                    penalty: best_penalty,
                    assignments,
                    skipped,
                });
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < outputs[k].len() {
                break;
            }
            choice[k] = 0;
        }
    }
}
