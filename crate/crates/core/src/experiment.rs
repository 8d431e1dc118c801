//! Monte-Carlo estimation of `E[‖F_k − f*‖²_H]` and its decay rate.
//!
//! Trials run independently on substreams `(seed, t)` and may execute in any
//! order or on any number of threads; curves are reduced in trial-index
//! order, so results are bit-identical across thread counts.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::exact::{solve, OracleSolution};
use crate::function_space::KernelExpansion;
use crate::kernel::KernelSpec;
use crate::objective::{bound_term, Dataset, MixtureWeights, ProblemConstants};
use crate::sgd::{PreparedProblem, SgdConfig, Trajectory};

/// Minimum number of tail points for a slope fit.
pub const MIN_TAIL_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub sgd: SgdConfig,
    pub trials: usize,
    /// Fraction of recorded points, taken from the end, used by the fit.
    pub tail_fraction: f64,
    /// Worker threads; `None` uses the machine's parallelism.
    pub threads: Option<usize>,
}

impl StudyConfig {
    pub fn new(sgd: SgdConfig, trials: usize) -> Self {
        StudyConfig {
            sgd,
            trials,
            tail_fraction: 0.5,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sgd.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidInput("a study needs at least one trial".into()));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "tail_fraction must lie in (0, 1), got {}",
                self.tail_fraction
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidInput("thread count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Ordinary least squares of `ln(err)` on `ln(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% confidence interval for the slope.
    pub ci_half_width: f64,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub ks: Vec<usize>,
    pub mean_err_sq: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `None` when the tail is too short or contains a nonpositive mean.
    pub fit: Option<RateFit>,
    pub fit_error: Option<String>,
    /// `E[‖Du_I(f*)‖²] / λ²`, the k-free factor of the rate bound without
    /// its universal constant.
    pub bound_scale: f64,
    pub oracle: OracleSolution,
    pub trials: usize,
    /// Largest iterate norm over all trials, when the radius is finite.
    pub max_iterate_norm: Option<f64>,
}

/// Tail OLS fit of `ln(mean)` against `ln(k)`.
pub fn fit_rate(ks: &[usize], means: &[f64], tail_fraction: f64) -> Result<RateFit> {
    if ks.len() != means.len() {
        return Err(Error::InvalidInput(format!(
            "{} iteration indices but {} means",
            ks.len(),
            means.len()
        )));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "tail_fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let count = ((ks.len() as f64) * tail_fraction).ceil() as usize;
    if count < MIN_TAIL_POINTS {
        return Err(Error::InvalidInput(format!(
            "slope fit needs at least {MIN_TAIL_POINTS} tail points, have {count}"
        )));
    }
    let start = ks.len() - count;
    let (ks, means) = (&ks[start..], &means[start..]);
    if let Some((k, v)) = ks.iter().zip(means).find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Numerical(format!(
            "mean error {v} at k = {k} is not positive; the iteration may have diverged"
        )));
    }
    let xs: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|v| v.ln()).collect();
    let n = count as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidInput("tail iteration indices are not distinct".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let df = n - 2.0;
    let se = (rss / df / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Numerical(format!("t distribution: {e}")))?
        .inverse_cdf(0.975);
    Ok(RateFit {
        slope,
        intercept,
        ci_half_width: t * se,
        points: count,
    })
}

/// `E[‖Du_I(f*)‖²] / λ²`.
pub fn bound_report(
    fstar: &KernelExpansion,
    data: &Dataset,
    w: &MixtureWeights,
    consts: &ProblemConstants,
) -> Result<f64> {
    Ok(bound_term(fstar, data, w)? / (consts.lambda * consts.lambda))
}

/// Per-k mean and standard error over trial curves, summed in trial order.
/// A single trial has standard error 0.
pub fn summarize(curves: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let Some(first) = curves.first() else {
        return (Vec::new(), Vec::new());
    };
    let t = curves.len() as f64;
    let mut mean = vec![0.0; first.len()];
    for c in curves {
        for (m, v) in mean.iter_mut().zip(c) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t);
    let stderr = if curves.len() < 2 {
        vec![0.0; first.len()]
    } else {
        let mut var = vec![0.0; first.len()];
        for c in curves {
            for ((s, v), m) in var.iter_mut().zip(c).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter().map(|s| (s / (t - 1.0) / t).sqrt()).collect()
    };
    (mean, stderr)
}

/// Means of the curve over dyadic blocks `[K/2^{j+1}, K/2^j)` of recorded
/// iteration indices, ordered by increasing `k`. The first recorded point
/// (`k = 1`) is left out. Empty blocks are skipped.
pub fn dyadic_block_means(ks: &[usize], values: &[f64]) -> Vec<f64> {
    let Some(&kmax) = ks.last() else {
        return Vec::new();
    };
    let mut blocks = Vec::new();
    let mut hi = kmax + 1;
    while hi > 2 {
        let lo = (hi / 2).max(2);
        let vals: Vec<f64> = ks
            .iter()
            .zip(values)
            .filter(|(&k, _)| k >= lo && k < hi)
            .map(|(_, &v)| v)
            .collect();
        if !vals.is_empty() {
            blocks.push(vals.iter().sum::<f64>() / vals.len() as f64);
        }
        hi = lo;
    }
    blocks.reverse();
    blocks
}

/// Runs every trial and returns the recorded trajectories in trial order.
pub fn run_trials(cfg: &StudyConfig, problem: &PreparedProblem) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    let run = |t: usize| problem.run_trial(&cfg.sgd, t as u64);
    let results: Vec<Result<Trajectory>> = run_indexed(cfg.trials, cfg.threads, run)?;
    results.into_iter().collect()
}

#[cfg(feature = "parallel")]
fn run_indexed<T, F>(count: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(&f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_indexed<T, F>(count: usize, _threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> T,
{
    Ok((0..count).map(f).collect())
}

/// Solves for `f*`, runs the trials and fits the tail rate.
pub fn run_study(cfg: &StudyConfig, data: &Dataset, spec: &KernelSpec) -> Result<ConvergenceRecord> {
    cfg.validate()?;
    let w = cfg.sgd.weights;
    let oracle = solve(spec, data, &w)?;
    if !oracle.residual_ok(data) {
        return Err(Error::Numerical(format!(
            "oracle residual {:e} exceeds tolerance",
            oracle.residual_norm
        )));
    }
    if !oracle.constrained_ok(cfg.sgd.radius) {
        return Err(Error::Config(format!(
            "radius {} is smaller than the unconstrained minimizer's norm {}; \
             use a radius of at least that norm or \"inf\"",
            cfg.sgd.radius, oracle.norm
        )));
    }
    let problem = PreparedProblem::new(data, spec, Some(&oracle.fstar))?;
    let trajectories = run_trials(cfg, &problem)?;
    let ks = trajectories[0].ks.clone();
    let curves: Vec<Vec<f64>> = trajectories.iter().map(|t| t.values.clone()).collect();
    let max_iterate_norm = trajectories
        .iter()
        .filter_map(|t| t.max_iterate_norm)
        .reduce(f64::max);
    let (mean_err_sq, stderr) = summarize(&curves);
    let (fit, fit_error) = match fit_rate(&ks, &mean_err_sq, cfg.tail_fraction) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let consts = crate::objective::constants(&w, spec);
    let bound_scale = bound_report(&oracle.fstar, data, &w, &consts)?;
    Ok(ConvergenceRecord {
        ks,
        mean_err_sq,
        stderr,
        fit,
        fit_error,
        bound_scale,
        oracle,
        trials: cfg.trials,
        max_iterate_norm,
    })
}
