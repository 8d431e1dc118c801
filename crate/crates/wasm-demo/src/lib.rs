//! Browser demo: fit a 1-D regression curve with kernel SGD, watch the mean
//! squared error decay, and explore the step-size schedule.
//!
//! Each exported function takes plain numbers and returns a JSON string that
//! `www/index.html` draws on a canvas.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rkhs_sgd::datagen;
use rkhs_sgd::exact::solve;
use rkhs_sgd::experiment::run_study;
use rkhs_sgd::objective::constants;
use rkhs_sgd::sgd::{make_schedule, run};
use rkhs_sgd::{KernelFamily, KernelSpec, MixtureWeights, OperatorMode, SgdConfig, StudyConfig};

const GRID: usize = 241;

#[derive(Debug, Serialize)]
pub struct CurveFit {
    pub data_x: Vec<f64>,
    pub data_y: Vec<f64>,
    pub grid: Vec<f64>,
    pub fstar: Vec<f64>,
    pub sgd: Vec<f64>,
    pub ks: Vec<usize>,
    pub err_sq: Vec<f64>,
    pub fstar_norm: f64,
}

#[derive(Debug, Serialize)]
pub struct Convergence {
    pub ks: Vec<usize>,
    pub mean_err_sq: Vec<f64>,
    pub stderr: Vec<f64>,
    pub slope: Option<f64>,
    pub slope_ci: Option<f64>,
    pub b: f64,
    pub rho: f64,
}

#[derive(Debug, Serialize)]
pub struct Schedule {
    pub ks: Vec<u64>,
    pub eta: Vec<f64>,
    pub b: f64,
    pub eta_cap: f64,
    pub contraction_lhs: Vec<f64>,
    pub contraction_rhs: Vec<f64>,
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// One SGD run on a 1-D synthetic dataset next to the exact minimizer.
#[allow(clippy::too_many_arguments)]
pub fn curve_fit(
    family: &str,
    bandwidth: f64,
    q: f64,
    steps: usize,
    seed: u64,
    n: usize,
    noise_sd: f64,
) -> Result<CurveFit, String> {
    let family: KernelFamily = family.parse().map_err(err)?;
    let data = datagen::generate(n, 1, 1, noise_sd, seed).map_err(err)?;
    let spec = KernelSpec::new(family, bandwidth, 1).map_err(err)?;
    let w = MixtureWeights::for_dataset(q, &data).map_err(err)?;
    let sol = solve(&spec, &data, &w).map_err(err)?;
    let mut cfg = SgdConfig::new(w, steps, seed);
    cfg.record_every = (steps / 100).max(1);
    let traj = run(&cfg, &data, &spec, Some(&sol.fstar)).map_err(err)?;

    let grid: Vec<f64> = (0..GRID).map(|i| -1.2 + 2.4 * i as f64 / (GRID - 1) as f64).collect();
    let eval = |f: &rkhs_sgd::KernelExpansion| -> Result<Vec<f64>, String> {
        grid.iter().map(|&x| f.evaluate(&[x]).map(|v| v[0]).map_err(err)).collect()
    };
    Ok(CurveFit {
        data_x: data.points().iter().map(|p| p[0]).collect(),
        data_y: data.labels().iter().map(|y| y[0]).collect(),
        fstar: eval(&sol.fstar)?,
        sgd: eval(&traj.final_iterate)?,
        grid,
        ks: traj.ks,
        err_sq: traj.values,
        fstar_norm: sol.norm,
    })
}

/// Mean squared distance to the minimizer over `trials` runs on the
/// reference instance, with the tail slope.
pub fn convergence(q: f64, s: f64, steps: usize, trials: usize, seed: u64, two_point: bool) -> Result<Convergence, String> {
    let data = datagen::reference_dataset();
    let spec = KernelSpec::new(KernelFamily::Gaussian, 1.0, data.input_dim()).map_err(err)?;
    let w = MixtureWeights::for_dataset(q, &data).map_err(err)?;
    let mut cfg = SgdConfig::new(w, steps, seed);
    cfg.s = s;
    cfg.record_every = (steps / 100).max(1);
    if two_point {
        cfg.operator = OperatorMode::two_point(0.5, 1.5, 0.5).map_err(err)?;
    }
    let schedule = cfg.schedule(&spec).map_err(err)?;
    let study = StudyConfig::new(cfg, trials);
    let rec = run_study(&study, &data, &spec).map_err(err)?;
    Ok(Convergence {
        ks: rec.ks,
        mean_err_sq: rec.mean_err_sq,
        stderr: rec.stderr,
        slope: rec.fit.map(|f| f.slope),
        slope_ci: rec.fit.map(|f| f.ci_half_width),
        b: schedule.b(),
        rho: schedule.rho(),
    })
}

/// Step sizes `η_k` and both sides of the one-step contraction for
/// log-spaced `k ≤ kmax`.
pub fn schedule(q: f64, rho: f64, s: f64, kmax: u64) -> Result<Schedule, String> {
    let spec = KernelSpec::new(KernelFamily::Gaussian, 1.0, 1).map_err(err)?;
    let c = constants(&MixtureWeights::new(q, 1).map_err(err)?, &spec);
    let sched = make_schedule(&c, rho, s).map_err(err)?;
    let mut ks: Vec<u64> = (0..=120)
        .map(|i| (kmax.max(1) as f64).powf(i as f64 / 120.0).round() as u64)
        .collect();
    ks.dedup();
    let (lhs, rhs) = ks.iter().map(|&k| sched.contraction_sides(k)).unzip();
    Ok(Schedule {
        eta: ks.iter().map(|&k| sched.eta(k)).collect(),
        ks,
        b: sched.b(),
        eta_cap: sched.eta_cap(),
        contraction_lhs: lhs,
        contraction_rhs: rhs,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(err))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = curveFit)]
pub fn curve_fit_js(
    family: &str,
    bandwidth: f64,
    q: f64,
    steps: usize,
    seed: u32,
    n: usize,
    noise_sd: f64,
) -> Result<String, JsValue> {
    to_js(curve_fit(family, bandwidth, q, steps, seed as u64, n, noise_sd))
}

#[wasm_bindgen(js_name = convergence)]
pub fn convergence_js(q: f64, s: f64, steps: usize, trials: usize, seed: u32, two_point: bool) -> Result<String, JsValue> {
    to_js(convergence(q, s, steps, trials, seed as u64, two_point))
}

#[wasm_bindgen(js_name = schedule)]
pub fn schedule_js(q: f64, rho: f64, s: f64, kmax: u32) -> Result<String, JsValue> {
    to_js(schedule(q, rho, s, kmax as u64))
}
