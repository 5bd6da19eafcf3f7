//! Image-quality metrics (windowed SSIM, MSE) and nearest-neighbour
//! magnification for the reduce -> magnify -> compare loop.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{MultiMatrix, PadMode};

/// SSIM window size and stability constants.
///
/// Defaults: `N = 8`, `C1 = (0.01 L)^2`, `C2 = (0.03 L)^2` with `L = 1`
/// for data normalized to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConfig {
    window: usize,
    c1: f64,
    c2: f64,
}

impl SsimConfig {
    pub fn new(window: usize, c1: f64, c2: f64) -> Result<Self> {
        if window < 2 {
            return Err(Error::InvalidParameter {
                what: "ssim window (must be >= 2)",
                value: window as f64,
            });
        }
        if !c1.is_finite() || c1 <= 0.0 {
            return Err(Error::InvalidParameter {
                what: "C1 (must be > 0)",
                value: c1,
            });
        }
        if !c2.is_finite() || c2 <= 0.0 {
            return Err(Error::InvalidParameter {
                what: "C2 (must be > 0)",
                value: c2,
            });
        }
        Ok(Self { window, c1, c2 })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 8,
            c1: 0.01 * 0.01,
            c2: 0.03 * 0.03,
        }
    }
}

/// SSIM of two flattened `N x N` windows.
///
/// ```text
/// SSIM = (2 mu_x mu_y + C1)(2 sigma_xy + C2)
///      / ((mu_x^2 + mu_y^2 + C1)(sigma_x^2 + sigma_y^2 + C2))
/// ```
///
/// The window is treated as `N^2` flattened samples: variances and the
/// covariance use the unbiased `N^2 - 1` divisor. The result lies in
/// `(-1, 1]` and equals 1 exactly when the windows are identical.
pub fn ssim_window(x: &[f64], y: &[f64], cfg: &SsimConfig) -> Result<f64> {
    let m = cfg.window() * cfg.window();
    if x.len() != m {
        return Err(Error::LengthMismatch {
            what: "ssim window x",
            expected: m,
            got: x.len(),
        });
    }
    if y.len() != m {
        return Err(Error::LengthMismatch {
            what: "ssim window y",
            expected: m,
            got: y.len(),
        });
    }
    let count = m as f64;
    let mu_x = x.iter().sum::<f64>() / count;
    let mu_y = y.iter().sum::<f64>() / count;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mu_x;
        let dy = b - mu_y;
        var_x += dx * dx;
        var_y += dy * dy;
        cov += dx * dy;
    }
    let div = count - 1.0;
    var_x /= div;
    var_y /= div;
    cov /= div;

    let num = (2.0 * mu_x * mu_y + cfg.c1()) * (2.0 * cov + cfg.c2());
    let den = (mu_x * mu_x + mu_y * mu_y + cfg.c1()) * (var_x + var_y + cfg.c2());
    Ok(num / den)
}

/// Mean SSIM over all disjoint `N x N` windows and all channels.
///
/// Both images must have identical dimensions; if the window size does not
/// divide them, both are edge-replication padded first so every pixel is
/// covered. Windows are visited channel-major, row-major, which fixes the
/// averaging order.
pub fn ssim_image(a: &MultiMatrix, b: &MultiMatrix, cfg: &SsimConfig) -> Result<f64> {
    check_same_shape(a, b)?;
    let n = cfg.window();
    let padded;
    let (a, b) = if a.rows().is_multiple_of(n) && a.cols().is_multiple_of(n) {
        (a, b)
    } else {
        padded = (a.pad(n, PadMode::Replicate)?, b.pad(n, PadMode::Replicate)?);
        (&padded.0, &padded.1)
    };
    let wr = a.rows() / n;
    let wc = a.cols() / n;
    let mut xs = Vec::with_capacity(n * n);
    let mut ys = Vec::with_capacity(n * n);
    let mut acc = 0.0;
    let mut count = 0usize;
    for k in 0..a.channels() {
        for wi in 0..wr {
            for wj in 0..wc {
                xs.clear();
                ys.clear();
                for i in 0..n {
                    for j in 0..n {
                        xs.push(a.get(wi * n + i, wj * n + j, k));
                        ys.push(b.get(wi * n + i, wj * n + j, k));
                    }
                }
                acc += ssim_window(&xs, &ys, cfg)?;
                count += 1;
            }
        }
    }
    Ok(acc / count as f64)
}

/// Mean squared difference over all `rows * cols * channels` cells.
pub fn mse(a: &MultiMatrix, b: &MultiMatrix) -> Result<f64> {
    check_same_shape(a, b)?;
    let acc: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(acc / a.data().len() as f64)
}

/// Replicates every entry over an `r x r` window, the nearest-neighbour
/// inverse of block reduction.
pub fn nn_magnify(c: &MultiMatrix, r: usize) -> Result<MultiMatrix> {
    if r < 2 {
        return Err(Error::InvalidParameter {
            what: "r (must be >= 2)",
            value: r as f64,
        });
    }
    let rows = c.rows() * r;
    let cols = c.cols() * r;
    let mut data = Vec::with_capacity(rows * cols * c.channels());
    for k in 0..c.channels() {
        for i in 0..rows {
            for j in 0..cols {
                data.push(c.get(i / r, j / r, k));
            }
        }
    }
    MultiMatrix::new(rows, cols, c.channels(), data)
}

fn check_same_shape(a: &MultiMatrix, b: &MultiMatrix) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() || a.channels() != b.channels() {
        return Err(Error::LengthMismatch {
            what: "image shapes",
            expected: a.data().len(),
            got: b.data().len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cfg2() -> SsimConfig {
        SsimConfig::new(2, 1e-4, 9e-4).unwrap()
    }

    #[test]
    fn identical_windows_score_one_exactly() {
        let x = [0.1, 0.7, 0.4, 0.9];
        assert_eq!(ssim_window(&x, &x, &cfg2()).unwrap(), 1.0);
    }

    #[test]
    fn ssim_window_is_symmetric() {
        let x = [0.1, 0.7, 0.4, 0.9];
        let y = [0.3, 0.2, 0.8, 0.5];
        let a = ssim_window(&x, &y, &cfg2()).unwrap();
        let b = ssim_window(&y, &x, &cfg2()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_windows_hand_value() {
        // mu_x = 0, mu_y = 1, zero variances: C1 (0 + C2) ... = C1 / (1 + C1)
        let cfg = cfg2();
        let x = [0.0; 4];
        let y = [1.0; 4];
        let got = ssim_window(&x, &y, &cfg).unwrap();
        let expected = cfg.c1() / (1.0 + cfg.c1());
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn window_shape_enforced() {
        assert!(matches!(
            ssim_window(&[0.0; 4], &[0.0; 5], &cfg2()),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            ssim_window(&[0.0; 3], &[0.0; 3], &cfg2()),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn image_ssim_of_itself_is_one() {
        let data: Vec<f64> = (0..16 * 16 * 3).map(|i| (i % 7) as f64 / 7.0).collect();
        let a = MultiMatrix::new(16, 16, 3, data).unwrap();
        let cfg = SsimConfig::default();
        assert_eq!(ssim_image(&a, &a, &cfg).unwrap(), 1.0);
    }

    #[test]
    fn single_window_image_equals_window_ssim() {
        let x = vec![0.1, 0.7, 0.4, 0.9];
        let y = vec![0.3, 0.2, 0.8, 0.5];
        let a = MultiMatrix::new(2, 2, 1, x.clone()).unwrap();
        let b = MultiMatrix::new(2, 2, 1, y.clone()).unwrap();
        let cfg = cfg2();
        assert_eq!(
            ssim_image(&a, &b, &cfg).unwrap(),
            ssim_window(&x, &y, &cfg).unwrap()
        );
    }

    #[test]
    fn image_ssim_averages_all_window_channel_terms() {
        let data_a: Vec<f64> = (0..16 * 16 * 3).map(|i| (i % 11) as f64 / 11.0).collect();
        let data_b: Vec<f64> = (0..16 * 16 * 3).map(|i| (i % 5) as f64 / 5.0).collect();
        let a = MultiMatrix::new(16, 16, 3, data_a).unwrap();
        let b = MultiMatrix::new(16, 16, 3, data_b).unwrap();
        let cfg = SsimConfig::default();
        let got = ssim_image(&a, &b, &cfg).unwrap();

        // manual average over the 4 windows x 3 channels = 12 terms
        let n = cfg.window();
        let mut acc = 0.0;
        let mut terms = 0;
        for k in 0..3 {
            for wi in 0..2 {
                for wj in 0..2 {
                    let mut xs = Vec::new();
                    let mut ys = Vec::new();
                    for i in 0..n {
                        for j in 0..n {
                            xs.push(a.get(wi * n + i, wj * n + j, k));
                            ys.push(b.get(wi * n + i, wj * n + j, k));
                        }
                    }
                    acc += ssim_window(&xs, &ys, &cfg).unwrap();
                    terms += 1;
                }
            }
        }
        assert_eq!(terms, 12);
        assert!((got - acc / 12.0).abs() < 1e-15);
    }

    #[test]
    fn image_ssim_pads_non_divisible_shapes() {
        let a = MultiMatrix::filled(5, 7, 1, 0.25).unwrap();
        let b = MultiMatrix::filled(5, 7, 1, 0.25).unwrap();
        assert_eq!(ssim_image(&a, &b, &SsimConfig::default()).unwrap(), 1.0);
    }

    #[test]
    fn mse_hand_values() {
        let a = MultiMatrix::filled(2, 2, 1, 0.0).unwrap();
        let b = MultiMatrix::filled(2, 2, 1, 1.0).unwrap();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &b).unwrap(), 1.0);
        let c = MultiMatrix::new(1, 2, 1, vec![0.0, 0.5]).unwrap();
        let d = MultiMatrix::new(1, 2, 1, vec![0.5, 0.5]).unwrap();
        assert_eq!(mse(&c, &d).unwrap(), 0.125);
        assert_eq!(mse(&c, &d).unwrap(), mse(&d, &c).unwrap());
        let e = MultiMatrix::filled(2, 3, 1, 0.0).unwrap();
        assert!(mse(&a, &e).is_err());
    }

    #[test]
    fn magnify_replicates_quadrants() {
        let c = MultiMatrix::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = nn_magnify(&c, 2).unwrap();
        assert_eq!((m.rows(), m.cols()), (4, 4));
        for (i, j, v) in [(0, 1, 1.0), (1, 2, 2.0), (3, 0, 3.0), (2, 3, 4.0)] {
            assert_eq!(m.get(i, j, 0), v);
        }
        let single = MultiMatrix::filled(1, 1, 2, 0.6).unwrap();
        let big = nn_magnify(&single, 3).unwrap();
        assert_eq!((big.rows(), big.cols()), (3, 3));
        assert!(big.data().iter().all(|&v| v == 0.6));
    }
}
