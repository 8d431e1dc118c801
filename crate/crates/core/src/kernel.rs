//! Positive-definite kernels on `ℝ^d`.
//!
//! All families are radial and normalized so that `k(x, x) = 1`. The
//! sup-norm embedding constant `M = sup_x √k(x,x)` is therefore exactly 1.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// `exp(−‖x−x'‖² / (2σ²))`
    Gaussian,
    /// `exp(−‖x−x'‖ / σ)`
    Laplacian,
    /// `(1+a)·exp(−a)`, `a = √3‖x−x'‖/σ`
    Matern32,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [
        KernelFamily::Gaussian,
        KernelFamily::Laplacian,
        KernelFamily::Matern32,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplacian => "laplacian",
            KernelFamily::Matern32 => "matern32",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "laplacian" => Ok(KernelFamily::Laplacian),
            "matern32" => Ok(KernelFamily::Matern32),
            other => Err(Error::InvalidInput(format!(
                "unknown kernel family `{other}` (expected gaussian, laplacian or matern32)"
            ))),
        }
    }
}

/// A kernel family with its length scale and input dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
    dim: usize,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64, dim: usize) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidInput(format!(
                "kernel bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("input dimension must be at least 1".into()));
        }
        Ok(KernelSpec {
            family,
            bandwidth,
            dim,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `k(x, x2)`, checking both dimensions.
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        check_dim("kernel argument", self.dim, x.len())?;
        check_dim("kernel argument", self.dim, x2.len())?;
        Ok(self.eval_unchecked(x, x2))
    }

    /// `k(x, x2)` without dimension checks. Callers must have validated the
    /// points against `self.dim`.
    pub(crate) fn eval_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        let sq = squared_distance(x, x2);
        match self.family {
            KernelFamily::Gaussian => (-sq / (2.0 * self.bandwidth * self.bandwidth)).exp(),
            KernelFamily::Laplacian => (-sq.sqrt() / self.bandwidth).exp(),
            KernelFamily::Matern32 => {
                let a = 3f64.sqrt() * sq.sqrt() / self.bandwidth;
                (1.0 + a) * (-a).exp()
            }
        }
    }

    /// Embedding constant `M` with `sup_x ‖f(x)‖ ≤ M ‖f‖_H`.
    pub fn sup_bound(&self) -> f64 {
        // every family has k(x,x) = 1
        1.0
    }

    /// Gram matrix `K_ij = k(p_i, p_j)`.
    pub fn gram(&self, points: &[Vec<f64>]) -> Result<GramMatrix> {
        if points.is_empty() {
            return Err(Error::InvalidInput("Gram matrix needs at least one point".into()));
        }
        for p in points {
            check_dim("Gram point", self.dim, p.len())?;
        }
        let n = points.len();
        let mut entries = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            entries[(i, i)] = self.eval_unchecked(&points[i], &points[i]);
            for j in 0..i {
                let v = self.eval_unchecked(&points[i], &points[j]);
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        Ok(GramMatrix {
            entries,
            points: points.to_vec(),
        })
    }
}

/// Squared Euclidean distance, summed pairwise so the result does not depend
/// on the length of a running accumulator.
pub(crate) fn squared_distance(x: &[f64], x2: &[f64]) -> f64 {
    fn pairwise(x: &[f64], x2: &[f64]) -> f64 {
        match x.len() {
            0 => 0.0,
            1 => {
                let d = x[0] - x2[0];
                d * d
            }
            len => {
                let mid = len / 2;
                pairwise(&x[..mid], &x2[..mid]) + pairwise(&x[mid..], &x2[mid..])
            }
        }
    }
    pairwise(x, x2)
}

/// Kernel matrix over a finite point set.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    points: Vec<Vec<f64>>,
}

impl GramMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(family: KernelFamily, bw: f64, dim: usize) -> KernelSpec {
        KernelSpec::new(family, bw, dim).unwrap()
    }

    #[test]
    fn closed_forms() {
        let g = spec(KernelFamily::Gaussian, 1.0, 2);
        assert_eq!(g.eval(&[0.3, -0.2], &[0.3, -0.2]).unwrap(), 1.0);
        assert_relative_eq!(g.eval(&[0.0, 0.0], &[2.0, 0.0]).unwrap(), 0.1353352832366127, epsilon = 1e-15);

        let l = spec(KernelFamily::Laplacian, 2.0, 1);
        assert_relative_eq!(l.eval(&[1.0], &[-1.0]).unwrap(), 0.36787944117144233, epsilon = 1e-15);

        let m = spec(KernelFamily::Matern32, 1.0, 1);
        let a = 3f64.sqrt();
        assert_relative_eq!(m.eval(&[0.0], &[1.0]).unwrap(), (1.0 + a) * (-a).exp(), epsilon = 1e-15);
        assert_eq!(m.eval(&[4.0], &[4.0]).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_specs_and_points() {
        assert!(KernelSpec::new(KernelFamily::Gaussian, 0.0, 1).is_err());
        assert!(KernelSpec::new(KernelFamily::Gaussian, -1.0, 1).is_err());
        assert!(KernelSpec::new(KernelFamily::Gaussian, f64::NAN, 1).is_err());
        assert!(KernelSpec::new(KernelFamily::Gaussian, 1.0, 0).is_err());
        let g = spec(KernelFamily::Gaussian, 1.0, 2);
        assert!(matches!(
            g.eval(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(g.gram(&[]).is_err());
        assert!(g.gram(&[vec![0.0, 0.0], vec![1.0]]).is_err());
    }

    #[test]
    fn small_grams() {
        let g = spec(KernelFamily::Laplacian, 0.7, 3);
        let one = g.gram(&[vec![0.1, 0.2, 0.3]]).unwrap();
        assert_eq!(one.entries().as_slice(), &[1.0]);
        let dup = g.gram(&[vec![0.5; 3], vec![0.5; 3]]).unwrap();
        assert_eq!(dup.entries().as_slice(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn family_strings_round_trip() {
        for f in KernelFamily::ALL {
            assert_eq!(f.as_str().parse::<KernelFamily>().unwrap(), f);
        }
        assert!("rbf".parse::<KernelFamily>().is_err());
    }

    #[test]
    fn sup_bound_is_one() {
        for f in KernelFamily::ALL {
            assert_eq!(spec(f, 0.3, 4).sup_bound(), 1.0);
        }
    }
}
