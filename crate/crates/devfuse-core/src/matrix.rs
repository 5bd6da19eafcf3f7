//! Matrices of real n-tuples and their decomposition into disjoint blocks.
//!
//! A [`MultiMatrix`] stores a `rows x cols` grid of `channels`-tuples as
//! planar channel data: channel `k` is a contiguous row-major plane. Block
//! indices in this API are 0-based; a [`Block`] additionally records its
//! 1-based `(alpha, beta)` origin, the convention used in diagnostics.

use alloc::vec;
use alloc::vec::Vec;

use crate::deviation::Interval;
use crate::error::{Error, Result};

/// A `rows x cols` matrix of real `channels`-tuples.
///
/// Layout: `data[k * rows * cols + i * cols + j]` holds channel `k` of the
/// entry at row `i`, column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiMatrix {
    rows: usize,
    cols: usize,
    channels: usize,
    data: Vec<f64>,
}

impl MultiMatrix {
    pub fn new(rows: usize, cols: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || channels == 0 {
            return Err(Error::InvalidParameter {
                what: "matrix dimensions (must be >= 1)",
                value: 0.0,
            });
        }
        let expected = rows * cols * channels;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                what: "matrix data",
                expected,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "matrix entries",
            });
        }
        Ok(Self {
            rows,
            cols,
            channels,
            data,
        })
    }

    /// Matrix with every entry set to `value`.
    pub fn filled(rows: usize, cols: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, channels, vec![value; rows * cols * channels])
    }

    /// Inverse of [`MultiMatrix::split_channels`].
    pub fn stack_channels(rows: usize, cols: usize, planes: Vec<Vec<f64>>) -> Result<Self> {
        if planes.is_empty() {
            return Err(Error::Empty { what: "planes" });
        }
        let plane_len = rows * cols;
        let mut data = Vec::with_capacity(plane_len * planes.len());
        let channels = planes.len();
        for plane in &planes {
            if plane.len() != plane_len {
                return Err(Error::LengthMismatch {
                    what: "channel plane",
                    expected: plane_len,
                    got: plane.len(),
                });
            }
            data.extend_from_slice(plane);
        }
        Self::new(rows, cols, channels, data)
    }

    /// One owned row-major plane per channel.
    pub fn split_channels(&self) -> Vec<Vec<f64>> {
        (0..self.channels)
            .map(|k| self.channel_plane(k).to_vec())
            .collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Row-major view of channel `k`.
    pub fn channel_plane(&self, k: usize) -> &[f64] {
        assert!(k < self.channels, "channel out of range");
        let plane = self.rows * self.cols;
        &self.data[k * plane..(k + 1) * plane]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        assert!(
            i < self.rows && j < self.cols && k < self.channels,
            "index out of range"
        );
        self.data[k * self.rows * self.cols + i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        assert!(
            i < self.rows && j < self.cols && k < self.channels,
            "index out of range"
        );
        self.data[k * self.rows * self.cols + i * self.cols + j] = value;
    }

    /// Pads to the least dimensions that are multiples of `r`, keeping the
    /// original content at the origin.
    pub fn pad(&self, r: usize, mode: PadMode) -> Result<MultiMatrix> {
        if r < 2 {
            return Err(Error::InvalidParameter {
                what: "r (must be >= 2)",
                value: r as f64,
            });
        }
        let new_rows = self.rows.div_ceil(r) * r;
        let new_cols = self.cols.div_ceil(r) * r;
        if new_rows == self.rows && new_cols == self.cols {
            return Ok(self.clone());
        }
        let mut out = vec![0.0; new_rows * new_cols * self.channels];
        for k in 0..self.channels {
            let base = k * new_rows * new_cols;
            for i in 0..new_rows {
                for j in 0..new_cols {
                    let v = match mode {
                        PadMode::Replicate => {
                            self.get(i.min(self.rows - 1), j.min(self.cols - 1), k)
                        }
                        PadMode::Zero => {
                            if i < self.rows && j < self.cols {
                                self.get(i, j, k)
                            } else {
                                0.0
                            }
                        }
                    };
                    out[base + i * new_cols + j] = v;
                }
            }
        }
        MultiMatrix::new(new_rows, new_cols, self.channels, out)
    }

    /// Top-left crop to `rows x cols`.
    pub fn crop(&self, rows: usize, cols: usize) -> Result<MultiMatrix> {
        if rows == 0 || rows > self.rows {
            return Err(Error::IndexOutOfRange {
                what: "crop rows",
                index: rows,
                limit: self.rows,
            });
        }
        if cols == 0 || cols > self.cols {
            return Err(Error::IndexOutOfRange {
                what: "crop cols",
                index: cols,
                limit: self.cols,
            });
        }
        let mut data = Vec::with_capacity(rows * cols * self.channels);
        for k in 0..self.channels {
            for i in 0..rows {
                for j in 0..cols {
                    data.push(self.get(i, j, k));
                }
            }
        }
        MultiMatrix::new(rows, cols, self.channels, data)
    }

    /// Copies out the `r x r` block with 0-based block coordinates
    /// `(block_row, block_col)`; block `(a, b)` covers rows
    /// `a*r .. (a+1)*r` and columns `b*r .. (b+1)*r`.
    pub fn extract_block(&self, block_row: usize, block_col: usize, r: usize) -> Result<Block> {
        if r < 2 {
            return Err(Error::InvalidParameter {
                what: "r (must be >= 2)",
                value: r as f64,
            });
        }
        if !self.rows.is_multiple_of(r) {
            return Err(Error::NotDivisible {
                what: "rows",
                dim: self.rows,
                r,
            });
        }
        if !self.cols.is_multiple_of(r) {
            return Err(Error::NotDivisible {
                what: "cols",
                dim: self.cols,
                r,
            });
        }
        let block_rows = self.rows / r;
        let block_cols = self.cols / r;
        if block_row >= block_rows {
            return Err(Error::IndexOutOfRange {
                what: "block row",
                index: block_row,
                limit: block_rows,
            });
        }
        if block_col >= block_cols {
            return Err(Error::IndexOutOfRange {
                what: "block col",
                index: block_col,
                limit: block_cols,
            });
        }
        let mut data = Vec::with_capacity(r * r * self.channels);
        for k in 0..self.channels {
            for i in 0..r {
                for j in 0..r {
                    data.push(self.get(block_row * r + i, block_col * r + j, k));
                }
            }
        }
        Ok(Block {
            size: r,
            channels: self.channels,
            alpha: block_row + 1,
            beta: block_col + 1,
            data,
        })
    }
}

/// Fill rule for cells introduced by [`MultiMatrix::pad`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PadMode {
    /// Replicate the nearest edge value. Zero padding would bias block
    /// aggregates toward dark borders, so this is the default.
    #[default]
    Replicate,
    Zero,
}

/// One `r x r` window of `channels`-tuples copied out of a parent matrix.
///
/// `origin()` reports the parent block coordinates in the 1-based
/// `(alpha, beta)` convention. Channel data is stored row-major per channel,
/// which fixes the summation order used by every per-block aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    size: usize,
    channels: usize,
    alpha: usize,
    beta: usize,
    data: Vec<f64>,
}

impl Block {
    /// Window side length `r`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// 1-based `(alpha, beta)` position of this block in its parent.
    pub fn origin(&self) -> (usize, usize) {
        (self.alpha, self.beta)
    }

    /// Row-major values of channel `k` (0-based).
    pub fn channel_values(&self, k: usize) -> &[f64] {
        assert!(k < self.channels, "channel out of range");
        let plane = self.size * self.size;
        &self.data[k * plane..(k + 1) * plane]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        assert!(
            i < self.size && j < self.size && k < self.channels,
            "index out of range"
        );
        self.data[k * self.size * self.size + i * self.size + j]
    }

    /// Envelope `[min, max]` of channel `k` over the window.
    pub fn channel_interval(&self, k: usize) -> Interval {
        Interval::of_values(self.channel_values(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sequential(rows: usize, cols: usize, channels: usize) -> MultiMatrix {
        let data = (0..rows * cols * channels).map(|v| v as f64).collect();
        MultiMatrix::new(rows, cols, channels, data).unwrap()
    }

    #[test]
    fn split_stack_round_trip() {
        let m = sequential(2, 3, 3);
        let planes = m.split_channels();
        assert_eq!(planes.len(), 3);
        assert_eq!(planes[0].len(), 6);
        let back = MultiMatrix::stack_channels(2, 3, planes).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn single_channel_split_is_the_data() {
        let m = sequential(2, 2, 1);
        let planes = m.split_channels();
        assert_eq!(planes.len(), 1);
        assert_eq!(planes[0], m.data());
    }

    #[test]
    fn extract_top_left_and_bottom_right() {
        let m = sequential(4, 4, 1);
        let b = m.extract_block(0, 0, 2).unwrap();
        assert_eq!(b.origin(), (1, 1));
        assert_eq!(b.channel_values(0), &[0.0, 1.0, 4.0, 5.0]);
        let b = m.extract_block(1, 1, 2).unwrap();
        assert_eq!(b.origin(), (2, 2));
        assert_eq!(b.channel_values(0), &[10.0, 11.0, 14.0, 15.0]);
    }

    #[test]
    fn blocks_tile_the_matrix_disjointly() {
        let m = sequential(4, 6, 2);
        let mut seen = [0u32; 4 * 6];
        for a in 0..2 {
            for b in 0..3 {
                let blk = m.extract_block(a, b, 2).unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        assert_eq!(blk.get(i, j, 1), m.get(a * 2 + i, b * 2 + j, 1));
                        seen[(a * 2 + i) * 6 + (b * 2 + j)] += 1;
                    }
                }
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn extract_rejects_bad_indices() {
        let m = sequential(4, 4, 1);
        assert!(matches!(
            m.extract_block(2, 0, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            m.extract_block(0, 0, 3),
            Err(Error::NotDivisible { .. })
        ));
    }

    #[test]
    fn channel_interval_bounds() {
        let m = MultiMatrix::new(2, 2, 1, vec![0.1, 0.9, 0.4, 0.5]).unwrap();
        let b = m.extract_block(0, 0, 2).unwrap();
        let iv = b.channel_interval(0);
        assert_eq!((iv.lo(), iv.hi()), (0.1, 0.9));
        for &v in b.channel_values(0) {
            assert!(iv.contains(v));
        }
        let c = MultiMatrix::filled(2, 2, 1, 0.7).unwrap();
        let iv = c.extract_block(0, 0, 2).unwrap().channel_interval(0);
        assert_eq!((iv.lo(), iv.hi()), (0.7, 0.7));
    }

    #[test]
    fn pad_replicates_last_row_and_col() {
        let m = sequential(5, 5, 1);
        let p = m.pad(2, PadMode::Replicate).unwrap();
        assert_eq!((p.rows(), p.cols()), (6, 6));
        // interior preserved
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(p.get(i, j, 0), m.get(i, j, 0));
            }
        }
        // replicated edges
        assert_eq!(p.get(5, 3, 0), m.get(4, 3, 0));
        assert_eq!(p.get(2, 5, 0), m.get(2, 4, 0));
        assert_eq!(p.get(5, 5, 0), m.get(4, 4, 0));
    }

    #[test]
    fn pad_noop_when_divisible() {
        let m = sequential(4, 4, 2);
        let p = m.pad(2, PadMode::Replicate).unwrap();
        assert_eq!(p, m);
    }

    #[test]
    fn pad_ceils_to_multiples() {
        let m = sequential(5, 7, 3);
        let p = m.pad(3, PadMode::default()).unwrap();
        assert_eq!((p.rows(), p.cols(), p.channels()), (6, 9, 3));
        let z = m.pad(3, PadMode::Zero).unwrap();
        assert_eq!(z.get(5, 8, 2), 0.0);
        assert_eq!(z.get(4, 6, 2), m.get(4, 6, 2));
    }

    #[test]
    fn crop_undoes_pad() {
        let m = sequential(5, 7, 2);
        let p = m.pad(4, PadMode::Replicate).unwrap();
        assert_eq!(p.crop(5, 7).unwrap(), m);
    }

    #[test]
    fn new_validates() {
        assert!(MultiMatrix::new(0, 2, 1, vec![]).is_err());
        assert!(MultiMatrix::new(1, 2, 1, vec![0.0]).is_err());
        assert!(MultiMatrix::new(1, 2, 1, vec![0.0, f64::NAN]).is_err());
    }
}
