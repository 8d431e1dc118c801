//! Exact minimizer of `u` over all of `H`.
//!
//! Setting `R_H Du(f) = q f + ((1−q)/n) Σ_i Φ(x_i, f(x_i) − y_i)` to zero for
//! `f = Σ_j k(x_j, ·) a_j` gives, coefficient by coefficient,
//!
//! ```text
//! (K + q n/(1−q) · Id) A = Y
//! ```
//!
//! with `K` the Gram matrix of the data points and `Y` the `n × m` label
//! matrix. The ridge shift is positive, so the system is symmetric positive
//! definite and one Cholesky factorization serves every output component.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::function_space::{KernelExpansion, Radius};
use crate::kernel::KernelSpec;
use crate::objective::{riesz_grad_full, Dataset, MixtureWeights};

/// Residual tolerance relative to `1 + max_i ‖y_i‖`.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub fstar: KernelExpansion,
    /// `‖R_H Du(f*)‖_H`.
    pub residual_norm: f64,
    pub norm: f64,
    /// `q n / (1−q)`.
    pub ridge_shift: f64,
}

impl OracleSolution {
    /// True when `‖f*‖_H ≤ r`, so the unconstrained minimizer also minimizes
    /// over the ball.
    pub fn constrained_ok(&self, r: Radius) -> bool {
        r.contains_norm(self.norm)
    }

    pub fn residual_ok(&self, data: &Dataset) -> bool {
        self.residual_norm <= RESIDUAL_TOL * (1.0 + data.max_label_norm())
    }
}

pub fn solve(spec: &KernelSpec, data: &Dataset, w: &MixtureWeights) -> Result<OracleSolution> {
    if w.n() != data.len() {
        return Err(Error::InvalidInput(format!(
            "mixture weights are for n = {}, dataset has {} points",
            w.n(),
            data.len()
        )));
    }
    let n = data.len();
    let m = data.output_dim();
    let shift = w.q() * n as f64 / (1.0 - w.q());
    let mut system = spec.gram(data.points())?.into_matrix();
    for i in 0..n {
        system[(i, i)] += shift;
    }
    let labels = DMatrix::from_fn(n, m, |i, j| data.label(i)[j]);
    let chol = system.clone().cholesky().ok_or_else(|| {
        let diag_min = (0..n).map(|i| system[(i, i)]).fold(f64::INFINITY, f64::min);
        Error::Numerical(format!(
            "Cholesky factorization of the {n}×{n} ridge-shifted Gram matrix failed \
             (shift {shift:e}, smallest diagonal {diag_min:e})"
        ))
    })?;
    let coeffs = chol.solve(&labels);
    let fstar = KernelExpansion::from_parts(
        *spec,
        m,
        data.points().to_vec(),
        (0..n).map(|i| coeffs.row(i).iter().copied().collect()).collect(),
    )?;
    let residual_norm = riesz_grad_full(&fstar, data, w)?.norm()?;
    let norm = fstar.norm()?;
    Ok(OracleSolution {
        fstar,
        residual_norm,
        norm,
        ridge_shift: shift,
    })
}

/// `‖f − g‖²_H`.
pub fn distance_sq(f: &KernelExpansion, g: &KernelExpansion) -> Result<f64> {
    KernelExpansion::combine(1.0, f, -1.0, g)?.norm_sq()
}
