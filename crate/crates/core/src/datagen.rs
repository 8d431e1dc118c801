//! Synthetic regression data.
//!
//! Points are uniform in `[−1, 1]^d`. Each label component is a sum of three
//! Gaussian bumps (width [`BUMP_WIDTH`], centers uniform in `[−1, 1]^d`,
//! amplitudes uniform in `[−1, 1]`) plus independent `N(0, noise_sd²)` noise.
//! Bumps and points come from substream 0 of the seed, noise from
//! substream 1, so the noise level does not move the points.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kernel::squared_distance;
use crate::objective::Dataset;
use crate::rng::trial_rng;

pub const BUMPS: usize = 3;
pub const BUMP_WIDTH: f64 = 0.5;

/// The desk-scale instance used for rate checks: `n = 20`, `d = 2`,
/// `m = 1`, noise 0.1, seed 1.
pub fn reference_dataset() -> Dataset {
    generate(20, 2, 1, 0.1, 1).expect("fixed arguments are valid")
}

pub fn generate(n: usize, d: usize, m: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 || m == 0 {
        return Err(Error::InvalidInput("n, d and m must all be at least 1".into()));
    }
    let bad_noise = || Error::InvalidInput(format!("noise_sd must be finite and ≥ 0, got {noise_sd}"));
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(bad_noise());
    }
    let noise = Normal::new(0.0, noise_sd).map_err(|_| bad_noise())?;
    let mut rng = trial_rng(seed, 0);
    let mut uniform = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect() };
    let bumps: Vec<(Vec<f64>, Vec<f64>)> = (0..BUMPS).map(|_| (uniform(d), uniform(m))).collect();
    let points: Vec<Vec<f64>> = (0..n).map(|_| uniform(d)).collect();

    let mut noise_rng = trial_rng(seed, 1);
    let labels = points
        .iter()
        .map(|x| {
            (0..m)
                .map(|j| {
                    let clean: f64 = bumps
                        .iter()
                        .map(|(c, a)| {
                            a[j] * (-squared_distance(x, c) / (2.0 * BUMP_WIDTH * BUMP_WIDTH)).exp()
                        })
                        .sum();
                    clean + noise.sample(&mut noise_rng)
                })
                .collect()
        })
        .collect();
    Dataset::new(points, labels)
}
