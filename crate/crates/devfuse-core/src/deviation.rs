//! Moderate deviation functions and the deviation-based means built on them.
//!
//! A moderate deviation function `D(x, y)` is non-decreasing in `y`,
//! non-increasing in `x`, and zero exactly on the diagonal. The associated
//! mean of inputs `x_1..x_m` with non-negative weights `w_1..w_m` is
//!
//! ```text
//! M_D(x) = 1/2 * ( sup{ y in I | F(y) < 0 } + inf{ y in I | F(y) > 0 } )
//! F(y)   = sum_i w_i * D(x_i, y),      I = [min x, max x]
//! ```
//!
//! which [`d_mean_bisect`] locates by bisecting the two set boundaries.
//! For the epsilon family `D_eps(x, y) = (x + eps)(y - x)` the balance
//! equation is linear in `y` and [`d_mean_epsilon_closed`] evaluates its
//! exact root.
//!
//! `D_eps` is a moderate deviation function on intervals where `x + eps > 0`
//! stays positive; the guarantees documented here (internality, monotonicity)
//! are stated for that regime. With data in `[0, 1]` any `eps >= 1` works.

use crate::error::{Error, Result};
use crate::math;

/// Closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFinite {
                what: "interval endpoint",
            });
        }
        if lo > hi {
            return Err(Error::InvalidParameter {
                what: "interval (lo > hi)",
                value: lo,
            });
        }
        Ok(Self { lo, hi })
    }

    /// Envelope `[min, max]` of a non-empty slice of finite values.
    pub(crate) fn of_values(values: &[f64]) -> Self {
        let mut lo = values[0];
        let mut hi = values[0];
        for &v in &values[1..] {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        Self { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Real-to-real map from the built-in catalog, used to assemble basic
/// deviation functions `D_{f,s}(x, y) = f(s(y) - s(x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonotoneMap {
    /// `t -> t`
    Identity,
    /// `t -> a * t` (monotone for `a > 0`)
    Scaled(f64),
    /// `t -> t^e` (monotone for odd `e`)
    OddPower(u32),
    /// `t -> sign(t) * |t|^p` (monotone for `p > 0`)
    SignedPower(f64),
}

impl MonotoneMap {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            MonotoneMap::Identity => t,
            MonotoneMap::Scaled(a) => a * t,
            MonotoneMap::OddPower(e) => {
                let mut acc = 1.0;
                for _ in 0..e {
                    acc *= t;
                }
                acc
            }
            MonotoneMap::SignedPower(p) => {
                if p == 1.0 {
                    t
                } else if t == 0.0 {
                    0.0
                } else {
                    t.signum() * math::powf(t.abs(), p)
                }
            }
        }
    }
}

/// Number of probe samples used to validate monotonicity of user-supplied
/// maps, evenly spaced over [-10, 10].
const PROBE_SAMPLES: usize = 1001;
const PROBE_LO: f64 = -10.0;
const PROBE_HI: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Epsilon(f64),
    Linear,
    Basic { f: MonotoneMap, s: MonotoneMap },
}

/// A moderate deviation function, evaluable at `(x, y)`.
///
/// Constructors validate their invariants: the epsilon family requires
/// `eps >= 1`, and [`DeviationSpec::basic`] probe-checks that `f` is
/// non-decreasing with `f(t) = 0` only at `t = 0` and that `s` is strictly
/// increasing. Probing samples [`PROBE_SAMPLES`] evenly spaced points, so a
/// map that misbehaves only between samples can slip through; the catalog
/// entries are known-monotone for the parameter ranges documented on
/// [`MonotoneMap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationSpec(Kind);

impl DeviationSpec {
    /// The family `D_eps(x, y) = (x + eps)(y - x)`, `eps >= 1`.
    pub fn epsilon(epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 1.0 {
            return Err(Error::InvalidParameter {
                what: "epsilon (must be finite and >= 1)",
                value: epsilon,
            });
        }
        Ok(Self(Kind::Epsilon(epsilon)))
    }

    /// The prototype `D(x, y) = y - x`, whose mean is the arithmetic mean.
    pub fn linear() -> Self {
        Self(Kind::Linear)
    }

    /// A basic deviation function `D_{f,s}(x, y) = f(s(y) - s(x))`.
    pub fn basic(f: MonotoneMap, s: MonotoneMap) -> Result<Self> {
        probe_non_decreasing_zero_at_zero(&f)?;
        probe_strictly_increasing(&s)?;
        Ok(Self(Kind::Basic { f, s }))
    }

    /// The `eps` of an epsilon-family spec, `None` otherwise. Callers use
    /// this to route aggregation through the closed form.
    pub fn epsilon_value(&self) -> Option<f64> {
        match self.0 {
            Kind::Epsilon(e) => Some(e),
            _ => None,
        }
    }

    /// Evaluates `D(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite {
                what: "deviation argument",
            });
        }
        Ok(self.eval_raw(x, y))
    }

    /// Evaluation without the finiteness check; inputs are validated once
    /// by the solvers before their inner loops.
    #[inline]
    pub(crate) fn eval_raw(&self, x: f64, y: f64) -> f64 {
        match self.0 {
            Kind::Epsilon(eps) => (x + eps) * (y - x),
            Kind::Linear => y - x,
            Kind::Basic { f, s } => f.eval(s.eval(y) - s.eval(x)),
        }
    }
}

fn probe_points() -> impl Iterator<Item = f64> {
    let step = (PROBE_HI - PROBE_LO) / (PROBE_SAMPLES - 1) as f64;
    (0..PROBE_SAMPLES).map(move |i| PROBE_LO + i as f64 * step)
}

fn probe_non_decreasing_zero_at_zero(f: &MonotoneMap) -> Result<()> {
    if f.eval(0.0) != 0.0 {
        return Err(Error::NotMonotone {
            what: "f (f(0) != 0)",
        });
    }
    let mut prev = f64::NEG_INFINITY;
    for t in probe_points() {
        let v = f.eval(t);
        if !v.is_finite() {
            return Err(Error::NonFinite { what: "f probe" });
        }
        if v < prev {
            return Err(Error::NotMonotone {
                what: "f (not non-decreasing)",
            });
        }
        if t != 0.0 && v == 0.0 {
            return Err(Error::NotMonotone {
                what: "f (zero away from zero)",
            });
        }
        prev = v;
    }
    Ok(())
}

fn probe_strictly_increasing(s: &MonotoneMap) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for t in probe_points() {
        let v = s.eval(t);
        if !v.is_finite() {
            return Err(Error::NonFinite { what: "s probe" });
        }
        if v <= prev {
            return Err(Error::NotMonotone {
                what: "s (not strictly increasing)",
            });
        }
        prev = v;
    }
    Ok(())
}

/// Bisection settings: absolute tolerance on `y` and the per-boundary
/// iteration budget. The budget must cover `log2(width / tolerance)`
/// halvings for the widest interval the solver will see.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    tolerance: f64,
    max_iterations: u32,
}

impl SolverConfig {
    pub const DEFAULT_TOLERANCE: f64 = 1e-9;
    pub const DEFAULT_MAX_ITERATIONS: u32 = 200;

    pub fn new(tolerance: f64, max_iterations: u32) -> Result<Self> {
        if !tolerance.is_finite() || tolerance <= 0.0 {
            return Err(Error::InvalidParameter {
                what: "tolerance (must be > 0)",
                value: tolerance,
            });
        }
        if max_iterations == 0 {
            return Err(Error::InvalidParameter {
                what: "max_iterations (must be >= 1)",
                value: 0.0,
            });
        }
        Ok(Self {
            tolerance,
            max_iterations,
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn max_iterations(&self) -> u32 {
        self.max_iterations
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: Self::DEFAULT_TOLERANCE,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
        }
    }
}

fn validate_values_weights(values: &[f64], weights: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Empty { what: "values" });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "values" });
    }
    if weights.len() != values.len() {
        return Err(Error::LengthMismatch {
            what: "weights",
            expected: values.len(),
            got: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidWeights {
            reason: "weights must be finite and non-negative",
        });
    }
    if !weights.iter().any(|w| *w > 0.0) {
        return Err(Error::InvalidWeights {
            reason: "at least one weight must be positive",
        });
    }
    Ok(())
}

/// Weighted D-mean by the sup/inf-midpoint construction.
///
/// Solves over `I = [min values, max values]`, exploiting that
/// `F(y) = sum_i w_i D(x_i, y)` is non-decreasing in `y`. The boundary of
/// `{F < 0}` and of `{F > 0}` are each located by bisection down to a
/// bracket narrower than `cfg.tolerance`; the result is the midpoint of the
/// two boundary estimates and always lies in `I`. An empty `{F < 0}` reads
/// as the lower endpoint, an empty `{F > 0}` as the upper one, so constant
/// input returns the constant. When `F(y) = 0` holds on a plateau the two
/// bisections bracket its endpoints and the plateau midpoint is returned.
pub fn d_mean_bisect(
    spec: &DeviationSpec,
    values: &[f64],
    weights: &[f64],
    cfg: &SolverConfig,
) -> Result<f64> {
    validate_values_weights(values, weights)?;
    let iv = Interval::of_values(values);
    if iv.width() == 0.0 {
        return Ok(iv.lo());
    }

    let f = |y: f64| -> f64 {
        let mut acc = 0.0;
        for (&x, &w) in values.iter().zip(weights) {
            acc += w * spec.eval_raw(x, y);
        }
        acc
    };

    let sup_negative = boundary_of_negative_set(&f, iv, cfg)?;
    let inf_positive = boundary_of_positive_set(&f, iv, cfg)?;
    Ok(0.5 * (sup_negative + inf_positive))
}

/// Estimates `sup { y in [lo, hi] | f(y) < 0 }` for non-decreasing `f`;
/// an empty set reads as `lo`.
fn boundary_of_negative_set<F: Fn(f64) -> f64>(
    f: &F,
    iv: Interval,
    cfg: &SolverConfig,
) -> Result<f64> {
    let (mut lo, mut hi) = (iv.lo(), iv.hi());
    if f(lo) >= 0.0 {
        // nothing below the root: the set is empty
        return Ok(lo);
    }
    if f(hi) < 0.0 {
        return Ok(hi);
    }
    // invariant: f(lo) < 0 <= f(hi)
    for _ in 0..cfg.max_iterations() {
        if hi - lo < cfg.tolerance() {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo < cfg.tolerance() {
        return Ok(0.5 * (lo + hi));
    }
    Err(Error::Convergence { lo, hi })
}

/// Estimates `inf { y in [lo, hi] | f(y) > 0 }` for non-decreasing `f`;
/// an empty set reads as `hi`.
fn boundary_of_positive_set<F: Fn(f64) -> f64>(
    f: &F,
    iv: Interval,
    cfg: &SolverConfig,
) -> Result<f64> {
    let (mut lo, mut hi) = (iv.lo(), iv.hi());
    if f(hi) <= 0.0 {
        // nothing above the root: the set is empty
        return Ok(hi);
    }
    if f(lo) > 0.0 {
        return Ok(lo);
    }
    // invariant: f(lo) <= 0 < f(hi)
    for _ in 0..cfg.max_iterations() {
        if hi - lo < cfg.tolerance() {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi - lo < cfg.tolerance() {
        return Ok(0.5 * (lo + hi));
    }
    Err(Error::Convergence { lo, hi })
}

/// Weighted D-mean of the epsilon family, in closed form.
///
/// Returns the exact root of `sum_i w_i (x_i + eps)(y - x_i) = 0`, namely
///
/// ```text
/// y = sum_i w_i x_i (x_i + eps) / sum_i w_i (x_i + eps)
/// ```
///
/// Constant input short-circuits to the constant, so idempotency is exact.
/// When every `x_i + eps` is non-negative the root is a weighted mean of
/// the inputs and the result is clamped into `[min, max]` to keep
/// internality exact under rounding; outside that regime the raw root is
/// returned as-is.
pub fn d_mean_epsilon_closed(values: &[f64], weights: &[f64], epsilon: f64) -> Result<f64> {
    if !epsilon.is_finite() || epsilon < 1.0 {
        return Err(Error::InvalidParameter {
            what: "epsilon (must be finite and >= 1)",
            value: epsilon,
        });
    }
    validate_values_weights(values, weights)?;

    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &w) in values.iter().zip(weights) {
        let shifted = x + epsilon;
        num += w * x * shifted;
        den += w * shifted;
    }
    if den == 0.0 {
        return Err(Error::DegenerateInput { denominator: den });
    }

    let iv = Interval::of_values(values);
    if iv.width() == 0.0 {
        return Ok(iv.lo());
    }
    let y = num / den;
    if !y.is_finite() {
        return Err(Error::DegenerateInput { denominator: den });
    }
    if iv.lo() + epsilon >= 0.0 {
        Ok(y.clamp(iv.lo(), iv.hi()))
    } else {
        Ok(y)
    }
}

/// Two-input epsilon-family aggregation `(u(u+eps) + v(v+eps)) / (u+v+2eps)`.
///
/// Agrees with [`d_mean_epsilon_closed`] on two equal-weight inputs.
pub fn two_point_epsilon(u: f64, v: f64, epsilon: f64) -> Result<f64> {
    if !u.is_finite() || !v.is_finite() || !epsilon.is_finite() {
        return Err(Error::NonFinite {
            what: "two_point_epsilon argument",
        });
    }
    let den = u + v + 2.0 * epsilon;
    if den == 0.0 {
        return Err(Error::DegenerateInput { denominator: den });
    }
    if u == v {
        return Ok(u);
    }
    Ok((u * (u + epsilon) + v * (v + epsilon)) / den)
}
