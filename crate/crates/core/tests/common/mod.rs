#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rkhs_sgd::{Dataset, KernelExpansion, KernelFamily, KernelSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-1.5..1.5)).collect()
}

pub fn vector(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(-2.0..2.0)).collect()
}

pub fn random_spec(rng: &mut ChaCha8Rng) -> KernelSpec {
    let family = KernelFamily::ALL[rng.random_range(0..3)];
    let bw = rng.random_range(0.2..2.0);
    let d = rng.random_range(1..=4);
    KernelSpec::new(family, bw, d).unwrap()
}

/// Expansion with `p` random centers.
pub fn expansion(rng: &mut ChaCha8Rng, spec: KernelSpec, m: usize, p: usize) -> KernelExpansion {
    let centers = (0..p).map(|_| point(rng, spec.dim())).collect();
    let coeffs = (0..p).map(|_| vector(rng, m)).collect();
    KernelExpansion::from_parts(spec, m, centers, coeffs).unwrap()
}

/// Expansion mixing dataset points and fresh centers.
pub fn expansion_near(rng: &mut ChaCha8Rng, spec: KernelSpec, data: &Dataset, p: usize) -> KernelExpansion {
    let m = data.output_dim();
    let mut centers = Vec::new();
    for _ in 0..p {
        if rng.random_bool(0.5) {
            centers.push(data.point(rng.random_range(0..data.len())).to_vec());
        } else {
            centers.push(point(rng, spec.dim()));
        }
    }
    let coeffs = (0..p).map(|_| vector(rng, m)).collect();
    KernelExpansion::from_parts(spec, m, centers, coeffs).unwrap()
}

pub fn dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, m: usize) -> Dataset {
    let points = (0..n).map(|_| point(rng, d)).collect();
    let labels = (0..n).map(|_| vector(rng, m)).collect();
    Dataset::new(points, labels).unwrap()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
