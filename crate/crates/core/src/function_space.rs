//! Elements of `H` as finite kernel expansions.
//!
//! An expansion `f = Σ_j k(c_j, ·) a_j` stores centers `c_j ∈ ℝ^d` and
//! vector coefficients `a_j ∈ ℝ^m`. The kernel acts componentwise on the
//! output space, so the representer of the functional `φ ↦ (y, φ(x))` is the
//! one-center expansion `Φ(x, y) = k(x, ·) y`.
//!
//! Centers are coalesced by exact coordinate equality: adding a multiple of
//! `k(x, ·)` to an expansion that already has `x` as a center only updates
//! that center's coefficient.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::kernel::KernelSpec;

/// Relative threshold below which a negative quadratic form is treated as
/// rounding noise and clamped to zero.
const NORM_CLAMP_TOL: f64 = 1e-10;

/// Ball radius in `(0, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radius(f64);

impl Radius {
    pub const INFINITE: Radius = Radius(f64::INFINITY);

    pub fn new(r: f64) -> Result<Self> {
        if r > 0.0 {
            Ok(Radius(r))
        } else {
            Err(Error::InvalidInput(format!(
                "ball radius must be positive or infinite, got {r}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    pub fn contains_norm(self, norm: f64) -> bool {
        norm <= self.0
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Radius {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" => Ok(Radius::INFINITE),
            other => {
                let r: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("cannot parse radius `{other}`")))?;
                if r.is_infinite() {
                    return Err(Error::InvalidInput(
                        "write an unbounded radius as the literal `inf`".into(),
                    ));
                }
                Radius::new(r)
            }
        }
    }
}

impl Serialize for Radius {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Radius {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let r = match Raw::deserialize(deserializer)? {
            Raw::Num(v) if v.is_infinite() => Err(Error::InvalidInput(
                "write an unbounded radius as the literal \"inf\"".into(),
            )),
            Raw::Num(v) => Radius::new(v),
            Raw::Text(s) if s == "inf" => Ok(Radius::INFINITE),
            Raw::Text(s) => Err(Error::InvalidInput(format!(
                "radius must be a positive number or \"inf\", got \"{s}\""
            ))),
        };
        r.map_err(serde::de::Error::custom)
    }
}

/// A finite kernel expansion, i.e. an element of `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelExpansion {
    spec: KernelSpec,
    out_dim: usize,
    centers: Vec<Vec<f64>>,
    coeffs: Vec<Vec<f64>>,
}

/// Bit pattern of a center, with `-0.0` folded into `0.0` so that keys agree
/// exactly when coordinates compare equal.
fn center_key(x: &[f64]) -> Vec<u64> {
    x.iter()
        .map(|&v| if v == 0.0 { 0u64 } else { v.to_bits() })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl KernelExpansion {
    /// The zero function (no centers).
    pub fn zero(spec: KernelSpec, out_dim: usize) -> Result<Self> {
        if out_dim == 0 {
            return Err(Error::InvalidInput("output dimension must be at least 1".into()));
        }
        Ok(KernelExpansion {
            spec,
            out_dim,
            centers: Vec::new(),
            coeffs: Vec::new(),
        })
    }

    /// Builds an expansion from parallel center/coefficient lists, summing
    /// coefficients of repeated centers.
    pub fn from_parts(
        spec: KernelSpec,
        out_dim: usize,
        centers: Vec<Vec<f64>>,
        coeffs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if centers.len() != coeffs.len() {
            return Err(Error::InvalidInput(format!(
                "{} centers but {} coefficient vectors",
                centers.len(),
                coeffs.len()
            )));
        }
        let mut out = KernelExpansion::zero(spec, out_dim)?;
        for c in &centers {
            check_dim("expansion center", spec.dim(), c.len())?;
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("expansion centers must be finite".into()));
            }
        }
        for a in &coeffs {
            check_dim("expansion coefficient", out_dim, a.len())?;
        }
        let mut index = HashMap::new();
        for (c, a) in centers.into_iter().zip(coeffs) {
            out.accumulate(&mut index, c, &a, 1.0);
        }
        Ok(out)
    }

    /// `Φ(x, y) = k(x, ·) y`, the Riesz representer of `φ ↦ (y, φ(x))`.
    pub fn representer(spec: KernelSpec, x: &[f64], y: &[f64]) -> Result<Self> {
        KernelExpansion::from_parts(spec, y.len(), vec![x.to_vec()], vec![y.to_vec()])
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    /// Number of (distinct) centers.
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    fn accumulate(&mut self, index: &mut HashMap<Vec<u64>, usize>, c: Vec<f64>, a: &[f64], scale: f64) {
        let key = center_key(&c);
        match index.get(&key) {
            Some(&j) => {
                for (dst, src) in self.coeffs[j].iter_mut().zip(a) {
                    *dst += scale * src;
                }
            }
            None => {
                index.insert(key, self.centers.len());
                self.centers.push(c);
                self.coeffs.push(a.iter().map(|v| scale * v).collect());
            }
        }
    }

    fn check_compatible(&self, other: &KernelExpansion) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Incompatible(format!(
                "kernel {:?} vs {:?}",
                self.spec, other.spec
            )));
        }
        if self.out_dim != other.out_dim {
            return Err(Error::Incompatible(format!(
                "output dimension {} vs {}",
                self.out_dim, other.out_dim
            )));
        }
        Ok(())
    }

    /// `f(x) = Σ_j a_j k(c_j, x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("evaluation point", self.spec.dim(), x.len())?;
        let mut out = vec![0.0; self.out_dim];
        self.evaluate_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn evaluate_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (c, a) in self.centers.iter().zip(&self.coeffs) {
            let k = self.spec.eval_unchecked(c, x);
            for (o, ai) in out.iter_mut().zip(a) {
                *o += ai * k;
            }
        }
    }

    /// `(f, g)_H = Σ_{i,j} (a_i · b_j) k(c_i, d_j)`.
    pub fn inner(&self, other: &KernelExpansion) -> Result<f64> {
        self.check_compatible(other)?;
        let mut total = 0.0;
        for (ci, ai) in self.centers.iter().zip(&self.coeffs) {
            for (dj, bj) in other.centers.iter().zip(&other.coeffs) {
                total += dot(ai, bj) * self.spec.eval_unchecked(ci, dj);
            }
        }
        Ok(total)
    }

    /// `‖f‖²_H`, clamped at zero. A value below `−1e−10·(Σ‖a_j‖)²` means the
    /// kernel matrix is not positive semidefinite and is reported as an error.
    pub fn norm_sq(&self) -> Result<f64> {
        let value = self.inner(self)?;
        if value >= 0.0 {
            return Ok(value);
        }
        let scale: f64 = self.coeffs.iter().map(|a| dot(a, a).sqrt()).sum::<f64>().powi(2);
        if value < -NORM_CLAMP_TOL * scale {
            return Err(Error::Numerical(format!(
                "negative squared norm {value:e} (scale {scale:e}): kernel matrix is not positive semidefinite"
            )));
        }
        Ok(0.0)
    }

    pub fn norm(&self) -> Result<f64> {
        self.norm_sq().map(f64::sqrt)
    }

    /// `a·self`.
    pub fn scaled(&self, a: f64) -> KernelExpansion {
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .flat_map(|c| c.iter_mut())
            .for_each(|v| *v *= a);
        out
    }

    /// `a·f + b·g` with coalesced centers. Centers of `f` keep their order;
    /// new centers of `g` are appended.
    pub fn combine(a: f64, f: &KernelExpansion, b: f64, g: &KernelExpansion) -> Result<Self> {
        f.check_compatible(g)?;
        let mut out = KernelExpansion::zero(f.spec, f.out_dim)?;
        let mut index = HashMap::with_capacity(f.len() + g.len());
        for (c, x) in f.centers.iter().zip(&f.coeffs) {
            out.accumulate(&mut index, c.clone(), x, a);
        }
        for (c, x) in g.centers.iter().zip(&g.coeffs) {
            out.accumulate(&mut index, c.clone(), x, b);
        }
        Ok(out)
    }

    /// Metric projection onto the closed ball `{‖f‖_H ≤ r}`: `f` itself when
    /// inside, otherwise `(r/‖f‖_H)·f`.
    pub fn project_ball(&self, r: Radius) -> Result<KernelExpansion> {
        if r.is_infinite() {
            return Ok(self.clone());
        }
        let norm = self.norm()?;
        Ok(self.scaled(1.0 / ball_scaling(norm, r)))
    }
}

/// `S = max(1, ‖f‖/r)`, the divisor that maps `f` into the ball.
pub(crate) fn ball_scaling(norm: f64, r: Radius) -> f64 {
    if r.contains_norm(norm) {
        1.0
    } else {
        norm / r.value()
    }
}
