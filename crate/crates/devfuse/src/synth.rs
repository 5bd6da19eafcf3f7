//! Seeded synthetic test images: smooth sinusoidal fields with mild noise,
//! normalized to `[0, 1]`. Identical seeds produce identical images.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use devfuse_core::MultiMatrix;

pub fn synthetic_image(rows: usize, cols: usize, channels: usize, seed: u64) -> MultiMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(rows * cols * channels);
    for _ in 0..channels {
        let waves: Vec<(f64, f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.random_range(0.05..0.18),
                    rng.random_range(0.5..3.0),
                    rng.random_range(0.5..3.0),
                    rng.random_range(0.0..TAU),
                )
            })
            .collect();
        for i in 0..rows {
            for j in 0..cols {
                let mut v = 0.5;
                for &(amp, fi, fj, phase) in &waves {
                    v += amp
                        * (TAU * (fi * i as f64 / rows as f64 + fj * j as f64 / cols as f64)
                            + phase)
                            .sin();
                }
                v += rng.random_range(-0.02..0.02);
                data.push(v.clamp(0.0, 1.0));
            }
        }
    }
    MultiMatrix::new(rows, cols, channels, data).expect("synthetic data is finite and sized")
}
