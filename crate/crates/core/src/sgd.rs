//! Projected stochastic gradient descent in `H`.
//!
//! Starting from `F_1 = 0`, each step draws a component index `I_k` and a
//! random scalar `c_k` with `E[c_k] = 1`, then sets
//!
//! ```text
//! F_{k+1} = Proj_r(F_k − η_k c_k R_H Du_{I_k}(F_k)),   η_k = (s/λ)/(b+k)
//! ```
//!
//! With `c_k ≡ 1` this is the familiar two-case update: `(1−η_k)F_k` when
//! `I_k = 0`, and `F̃_k / max(1, ‖F̃_k‖/r)` with
//! `F̃_k = F_k + η_k Φ(x_i, y_i − F_k(x_i))` when `I_k = i`.
//!
//! [`step`] performs one update on a general [`KernelExpansion`]. [`run`]
//! and [`PreparedProblem`] keep the iterate as a coefficient table over the
//! dataset's distinct points with a cached Gram matrix; the arithmetic is
//! ordered so that both paths produce bit-identical iterates.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::function_space::{ball_scaling, KernelExpansion, Radius};
use crate::kernel::KernelSpec;
use crate::objective::{constants, riesz_grad_component, Dataset, MixtureWeights, ProblemConstants};
use crate::rng::trial_rng;

/// Harmonic step sizes `η_k = (s/λ)/(b+k)` with `b = 2ρ(Λ/λ)²s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    s: f64,
    lambda: f64,
    lambda_sq_lipschitz: f64,
    rho: f64,
    b: f64,
}

impl StepSchedule {
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_sq_lipschitz(&self) -> f64 {
        self.lambda_sq_lipschitz
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Step size for iteration `k ≥ 1`.
    pub fn eta(&self, k: u64) -> f64 {
        (self.s / self.lambda) / (self.b + k as f64)
    }

    /// Largest step size for which the one-step contraction holds,
    /// `λ / (2Λ²ρ)`.
    pub fn eta_cap(&self) -> f64 {
        self.lambda / (2.0 * self.lambda_sq_lipschitz * self.rho)
    }

    /// Both sides of `1 − 2λη + 2Λ²ρη² ≤ 1 − λη` at iteration `k`.
    pub fn contraction_sides(&self, k: u64) -> (f64, f64) {
        let eta = self.eta(k);
        let lhs = 1.0 - 2.0 * self.lambda * eta + 2.0 * self.lambda_sq_lipschitz * self.rho * eta * eta;
        let rhs = 1.0 - self.lambda * eta;
        (lhs, rhs)
    }
}

pub fn make_schedule(consts: &ProblemConstants, rho: f64, s: f64) -> Result<StepSchedule> {
    if !(s > 1.0 && s.is_finite()) {
        return Err(Error::InvalidInput(format!("schedule parameter s must exceed 1, got {s}")));
    }
    if !(rho >= 1.0 && rho.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "operator second moment rho must be at least 1, got {rho}"
        )));
    }
    let ProblemConstants {
        lambda,
        lambda_sq_lipschitz,
        ..
    } = *consts;
    if !(lambda > 0.0 && lambda * lambda <= lambda_sq_lipschitz * (1.0 + 1e-12)) {
        return Err(Error::InvalidInput(format!(
            "need 0 < λ ≤ Λ, got λ = {lambda}, Λ² = {lambda_sq_lipschitz}"
        )));
    }
    let b = 2.0 * rho * (lambda_sq_lipschitz / (lambda * lambda)) * s;
    Ok(StepSchedule {
        s,
        lambda,
        lambda_sq_lipschitz,
        rho,
        b,
    })
}

/// Law of the random scalar operator `L_k = c_k·I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorMode {
    Identity,
    /// `c = c_hi` with probability `p_hi`, else `c_lo`; `E[c] = 1`.
    TwoPointScalar { c_lo: f64, c_hi: f64, p_hi: f64 },
}

impl OperatorMode {
    pub fn two_point(c_lo: f64, c_hi: f64, p_hi: f64) -> Result<Self> {
        if !(c_lo > 0.0 && c_hi > 0.0 && c_lo.is_finite() && c_hi.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "operator scalars must be positive, got c_lo = {c_lo}, c_hi = {c_hi}"
            )));
        }
        if !(0.0..=1.0).contains(&p_hi) {
            return Err(Error::InvalidInput(format!("p_hi must lie in [0, 1], got {p_hi}")));
        }
        let mean = p_hi * c_hi + (1.0 - p_hi) * c_lo;
        if (mean - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "operator scalar must have mean 1, got {mean}"
            )));
        }
        Ok(OperatorMode::TwoPointScalar { c_lo, c_hi, p_hi })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            OperatorMode::Identity => 1.0,
            OperatorMode::TwoPointScalar { c_lo, c_hi, p_hi } => p_hi * c_hi + (1.0 - p_hi) * c_lo,
        }
    }

    /// Spectral radius of `E[L*L]`, i.e. `E[c²]`.
    pub fn rho(&self) -> f64 {
        match *self {
            OperatorMode::Identity => 1.0,
            OperatorMode::TwoPointScalar { c_lo, c_hi, p_hi } => {
                p_hi * c_hi * c_hi + (1.0 - p_hi) * c_lo * c_lo
            }
        }
    }
}

/// Draws `I` with `P(I=0) = q`, `P(I=i) = (1−q)/n`. Consumes one uniform.
pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, w: &MixtureWeights) -> usize {
    let u: f64 = rng.random();
    if u < w.q() {
        return 0;
    }
    let n = w.n();
    let i = ((u - w.q()) / (1.0 - w.q()) * n as f64) as usize;
    1 + i.min(n - 1)
}

/// Draws the operator scalar. Identity mode consumes no randomness.
pub fn sample_operator<R: Rng + ?Sized>(rng: &mut R, mode: &OperatorMode) -> f64 {
    match *mode {
        OperatorMode::Identity => 1.0,
        OperatorMode::TwoPointScalar { c_lo, c_hi, p_hi } => {
            let u: f64 = rng.random();
            if u < p_hi {
                c_hi
            } else {
                c_lo
            }
        }
    }
}

/// One projected update `Proj_r(F − η c R_H Du_i(F))`.
pub fn step(
    f: &KernelExpansion,
    index: usize,
    eta: f64,
    c: f64,
    data: &Dataset,
    r: Radius,
) -> Result<KernelExpansion> {
    if !(eta > 0.0 && c > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step needs positive η and c, got η = {eta}, c = {c}"
        )));
    }
    let grad = riesz_grad_component(index, f, data)?;
    let moved = KernelExpansion::combine(1.0, f, -eta * c, &grad)?;
    moved.project_ball(r)
}

/// Settings for one SGD run.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    pub weights: MixtureWeights,
    pub radius: Radius,
    pub s: f64,
    /// Number of iterates `K`; the run produces `F_1..F_K`.
    pub steps: usize,
    pub seed: u64,
    pub operator: OperatorMode,
    pub record_every: usize,
    /// Keep the sequence of drawn indices in the trajectory.
    pub log_draws: bool,
}

impl SgdConfig {
    pub fn new(weights: MixtureWeights, steps: usize, seed: u64) -> Self {
        SgdConfig {
            weights,
            radius: Radius::INFINITE,
            s: 2.0,
            steps,
            seed,
            operator: OperatorMode::Identity,
            record_every: (steps / 200).max(1),
            log_draws: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidInput("steps must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput("record_every must be at least 1".into()));
        }
        if !(self.s > 1.0) {
            return Err(Error::InvalidInput(format!("s must exceed 1, got {}", self.s)));
        }
        Ok(())
    }

    pub fn schedule(&self, spec: &KernelSpec) -> Result<StepSchedule> {
        make_schedule(&constants(&self.weights, spec), self.operator.rho(), self.s)
    }

    /// Recorded iteration indices: `k = 1` and every positive multiple of
    /// `record_every` up to `steps`.
    pub fn record_points(&self) -> Vec<usize> {
        let mut ks = vec![1];
        ks.extend(
            (1..=self.steps / self.record_every)
                .map(|j| j * self.record_every)
                .filter(|&k| k > 1),
        );
        ks
    }
}

/// What a trajectory's scalar column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordedQuantity {
    /// `‖F_k − f*‖²_H`
    ErrSq,
    /// `‖F_k‖²_H`
    NormSq,
}

impl RecordedQuantity {
    pub fn column(self) -> &'static str {
        match self {
            RecordedQuantity::ErrSq => "err_sq",
            RecordedQuantity::NormSq => "norm_sq",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub quantity: RecordedQuantity,
    pub ks: Vec<usize>,
    pub values: Vec<f64>,
    /// Iterate snapshots at `ks`; kept only when no oracle was supplied.
    pub snapshots: Vec<KernelExpansion>,
    pub index_draws: Option<Vec<usize>>,
    pub final_iterate: KernelExpansion,
    /// Largest `‖F_k‖_H` over all iterates; tracked only for a finite radius.
    pub max_iterate_norm: Option<f64>,
}

/// Dataset, kernel and optional oracle with everything one trial needs
/// precomputed: distinct centers, their Gram matrix and the oracle's
/// coefficients on the same index set. Shared read-only across trials.
#[derive(Debug, Clone)]
pub struct PreparedProblem {
    spec: KernelSpec,
    data: Dataset,
    out_dim: usize,
    /// Distinct dataset points first, then oracle centers that are not
    /// dataset points.
    centers: Vec<Vec<f64>>,
    /// Distinct-center index of each dataset point.
    center_of: Vec<usize>,
    /// Row-major Gram matrix over `centers`.
    gram: Vec<f64>,
    /// Oracle coefficients over `centers`, row-major `centers.len() × m`.
    oracle: Option<Vec<f64>>,
}

fn key(x: &[f64]) -> Vec<u64> {
    x.iter()
        .map(|&v| if v == 0.0 { 0u64 } else { v.to_bits() })
        .collect()
}

impl PreparedProblem {
    pub fn new(data: &Dataset, spec: &KernelSpec, oracle: Option<&KernelExpansion>) -> Result<Self> {
        let probe = KernelExpansion::zero(*spec, data.output_dim())?;
        data.check_expansion(&probe)?;
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut centers: Vec<Vec<f64>> = Vec::new();
        let mut center_of = Vec::with_capacity(data.len());
        for x in data.points() {
            let j = *index.entry(key(x)).or_insert_with(|| {
                centers.push(x.clone());
                centers.len() - 1
            });
            center_of.push(j);
        }
        let m = data.output_dim();
        let oracle_slots = match oracle {
            Some(f) => {
                if f.spec() != spec || f.out_dim() != m {
                    return Err(Error::Incompatible(
                        "oracle expansion does not match the kernel or output dimension".into(),
                    ));
                }
                let mut slots = Vec::with_capacity(f.len());
                for c in f.centers() {
                    let j = *index.entry(key(c)).or_insert_with(|| {
                        centers.push(c.clone());
                        centers.len() - 1
                    });
                    slots.push(j);
                }
                Some(slots)
            }
            None => None,
        };
        let u = centers.len();
        let mut gram = vec![0.0; u * u];
        for i in 0..u {
            for j in 0..u {
                gram[i * u + j] = spec.eval_unchecked(&centers[i], &centers[j]);
            }
        }
        let oracle = oracle.zip(oracle_slots).map(|(f, slots)| {
            let mut beta = vec![0.0; u * m];
            for (&j, a) in slots.iter().zip(f.coeffs()) {
                for (dst, src) in beta[j * m..(j + 1) * m].iter_mut().zip(a) {
                    *dst += src;
                }
            }
            beta
        });
        Ok(PreparedProblem {
            spec: *spec,
            data: data.clone(),
            out_dim: m,
            centers,
            center_of,
            gram,
            oracle,
        })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn has_oracle(&self) -> bool {
        self.oracle.is_some()
    }

    /// Runs trial `trial`, drawing from the substream `(cfg.seed, trial)`.
    pub fn run_trial(&self, cfg: &SgdConfig, trial: u64) -> Result<Trajectory> {
        cfg.validate()?;
        if cfg.weights.n() != self.data.len() {
            return Err(Error::InvalidInput(format!(
                "mixture weights are for n = {}, dataset has {} points",
                cfg.weights.n(),
                self.data.len()
            )));
        }
        let schedule = cfg.schedule(&self.spec)?;
        let mut rng = trial_rng(cfg.seed, trial);
        let mut iter = CoefficientIterate::new(self);
        let quantity = if self.oracle.is_some() {
            RecordedQuantity::ErrSq
        } else {
            RecordedQuantity::NormSq
        };
        let record_at = cfg.record_points();
        let mut next_record = 0;
        let mut ks = Vec::with_capacity(record_at.len());
        let mut values = Vec::with_capacity(record_at.len());
        let mut snapshots = Vec::new();
        let mut draws = cfg.log_draws.then(|| Vec::with_capacity(cfg.steps));
        let finite_radius = !cfg.radius.is_infinite();
        let mut max_norm = finite_radius.then_some(0.0f64);
        let mut resid = vec![0.0; self.out_dim];

        for k in 1..=cfg.steps {
            if next_record < record_at.len() && record_at[next_record] == k {
                next_record += 1;
                ks.push(k);
                match &self.oracle {
                    Some(beta) => values.push(iter.distance_sq(beta)),
                    None => {
                        values.push(iter.norm_sq()?);
                        snapshots.push(iter.to_expansion()?);
                    }
                }
            }
            if k == cfg.steps {
                break;
            }
            let i = sample_index(&mut rng, &cfg.weights);
            let c = sample_operator(&mut rng, &cfg.operator);
            if let Some(d) = draws.as_mut() {
                d.push(i);
            }
            let scale = -schedule.eta(k as u64) * c;
            if i == 0 {
                iter.add_scaled_self(scale);
            } else {
                let p = i - 1;
                iter.value_at(self.center_of[p], &mut resid);
                for (r, y) in resid.iter_mut().zip(self.data.label(p)) {
                    *r -= y;
                }
                iter.add_representer(self.center_of[p], scale, &resid);
            }
            if finite_radius {
                let norm = iter.norm_sq()?.sqrt();
                let s = ball_scaling(norm, cfg.radius);
                if s != 1.0 {
                    iter.scale(1.0 / s);
                }
                let after = iter.norm_sq()?.sqrt();
                max_norm = max_norm.map(|m| m.max(after));
            }
        }

        Ok(Trajectory {
            quantity,
            ks,
            values,
            snapshots,
            index_draws: draws,
            final_iterate: iter.to_expansion()?,
            max_iterate_norm: max_norm,
        })
    }
}

/// Runs a single trajectory (trial 0 of `cfg.seed`).
pub fn run(
    cfg: &SgdConfig,
    data: &Dataset,
    spec: &KernelSpec,
    oracle: Option<&KernelExpansion>,
) -> Result<Trajectory> {
    PreparedProblem::new(data, spec, oracle)?.run_trial(cfg, 0)
}

/// SGD iterate as coefficients over the prepared centers. `order` lists the
/// centers in the order they first received a coefficient, which is the
/// order a [`KernelExpansion`] built by repeated [`step`]s would hold them.
struct CoefficientIterate<'a> {
    problem: &'a PreparedProblem,
    alpha: Vec<f64>,
    active: Vec<bool>,
    order: Vec<usize>,
}

impl<'a> CoefficientIterate<'a> {
    fn new(problem: &'a PreparedProblem) -> Self {
        let u = problem.centers.len();
        CoefficientIterate {
            problem,
            alpha: vec![0.0; u * problem.out_dim],
            active: vec![false; u],
            order: Vec::new(),
        }
    }

    fn row(&self, j: usize) -> &[f64] {
        let m = self.problem.out_dim;
        &self.alpha[j * m..(j + 1) * m]
    }

    fn gram(&self, i: usize, j: usize) -> f64 {
        self.problem.gram[i * self.problem.centers.len() + j]
    }

    fn value_at(&self, center: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &j in &self.order {
            let k = self.gram(j, center);
            for (o, a) in out.iter_mut().zip(self.row(j)) {
                *o += a * k;
            }
        }
    }

    /// `α ← α + t·α`
    fn add_scaled_self(&mut self, t: f64) {
        for v in &mut self.alpha {
            *v += t * *v;
        }
    }

    /// `α_j ← α_j + t·r`
    fn add_representer(&mut self, j: usize, t: f64, r: &[f64]) {
        let m = self.problem.out_dim;
        if !self.active[j] {
            self.active[j] = true;
            self.order.push(j);
        }
        for (a, ri) in self.alpha[j * m..(j + 1) * m].iter_mut().zip(r) {
            *a += t * ri;
        }
    }

    fn scale(&mut self, t: f64) {
        for v in &mut self.alpha {
            *v *= t;
        }
    }

    fn norm_sq(&self) -> Result<f64> {
        let mut total = 0.0;
        for &i in &self.order {
            for &j in &self.order {
                let d: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                total += d * self.gram(i, j);
            }
        }
        if total >= 0.0 {
            return Ok(total);
        }
        let scale: f64 = self
            .order
            .iter()
            .map(|&i| self.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum::<f64>()
            .powi(2);
        if total < -1e-10 * scale {
            return Err(Error::Numerical(format!("negative squared norm {total:e} in SGD iterate")));
        }
        Ok(0.0)
    }

    /// `‖F − f*‖²_H` with `f*` given by `beta` on the same centers.
    fn distance_sq(&self, beta: &[f64]) -> f64 {
        let u = self.problem.centers.len();
        let m = self.problem.out_dim;
        let diff: Vec<f64> = self.alpha.iter().zip(beta).map(|(a, b)| a - b).collect();
        let mut total = 0.0;
        for i in 0..u {
            let di = &diff[i * m..(i + 1) * m];
            if di.iter().all(|&v| v == 0.0) {
                continue;
            }
            for j in 0..u {
                let dj = &diff[j * m..(j + 1) * m];
                let d: f64 = di.iter().zip(dj).map(|(a, b)| a * b).sum();
                total += d * self.gram(i, j);
            }
        }
        total.max(0.0)
    }

    fn to_expansion(&self) -> Result<KernelExpansion> {
        let centers = self.order.iter().map(|&j| self.problem.centers[j].clone()).collect();
        let coeffs = self.order.iter().map(|&j| self.row(j).to_vec()).collect();
        KernelExpansion::from_parts(self.problem.spec, self.problem.out_dim, centers, coeffs)
    }
}
