use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rkhs_sgd::config::RunConfig;
use rkhs_sgd::exact::{solve, RESIDUAL_TOL};
use rkhs_sgd::experiment::run_study;
use rkhs_sgd::io::{self, fmt_f64};
use rkhs_sgd::objective::{bound_term, constants, loss_total, Dataset, MixtureWeights};
use rkhs_sgd::sgd::run as run_sgd;
use rkhs_sgd::{datagen, Error};

use crate::RunArgs;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_IO: u8 = 3;

pub const THREADS_ENV: &str = "RKHS_SGD_THREADS";

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } => EXIT_IO,
            Error::Numerical(_) => EXIT_NUMERICAL,
            Error::DimensionMismatch { .. }
            | Error::InvalidInput(_)
            | Error::Incompatible(_)
            | Error::Config(_)
            | Error::Parse { .. } => EXIT_VALIDATION,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

pub fn gen_data(n: usize, d: usize, m: usize, noise_sd: f64, seed: u64, out: &Path) -> CliResult {
    let data = datagen::generate(n, d, m, noise_sd, seed)?;
    io::write_dataset(out, &data)?;
    say!("wrote {n} rows to {}", out.display());
    Ok(())
}

struct Loaded {
    cfg: RunConfig,
    data: Dataset,
    out_dir: PathBuf,
}

fn load(args: &RunArgs) -> Result<Loaded, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.sgd.seed = seed;
    }
    if let Some(steps) = args.steps {
        cfg.sgd.steps = steps;
    }
    if let Some(out) = &args.out {
        cfg.io.out_dir = out.clone();
    }
    cfg.validate()?;
    let data_path = cfg
        .io
        .data_path
        .clone()
        .ok_or_else(|| CliError::validation("config has no io.data_path"))?;
    let data = io::read_dataset(&data_path)?;
    let out_dir = cfg.io.out_dir.clone();
    Ok(Loaded { cfg, data, out_dir })
}

pub fn exact(args: &RunArgs) -> CliResult {
    let Loaded { cfg, data, out_dir } = load(args)?;
    let spec = cfg.kernel_spec(data.input_dim())?;
    let w = MixtureWeights::for_dataset(cfg.problem.q, &data)?;
    let sol = solve(&spec, &data, &w)?;
    let loss = loss_total(&sol.fstar, &data, &w)?;
    let bound = bound_term(&sol.fstar, &data, &w)?;
    let at_first = sol.fstar.evaluate(data.point(0))?;
    let constrained_ok = sol.constrained_ok(cfg.problem.radius);

    let extra = [
        ("q", fmt_f64(cfg.problem.q)),
        ("radius", cfg.problem.radius.to_string()),
        ("residual_norm", fmt_f64(sol.residual_norm)),
        ("norm", fmt_f64(sol.norm)),
        ("loss_total", fmt_f64(loss)),
        ("bound_term", fmt_f64(bound)),
        ("constrained_ok", constrained_ok.to_string()),
    ];
    let csv = out_dir.join("fstar.csv");
    io::write_expansion(&csv, &io::metadata_path(&csv), &sol.fstar, &extra)?;

    say!("residual_norm = {}", fmt_f64(sol.residual_norm));
    say!("norm = {}", fmt_f64(sol.norm));
    say!("loss_total = {}", fmt_f64(loss));
    say!("bound_term = {}", fmt_f64(bound));
    say!("constrained_ok = {constrained_ok}");
    let vals: Vec<String> = at_first.iter().map(|&v| fmt_f64(v)).collect();
    say!("fstar(x_1) = {}", vals.join(","));
    say!("wrote {}", csv.display());

    if !sol.residual_ok(&data) {
        return Err(CliError::numerical(format!(
            "optimality residual {} exceeds {RESIDUAL_TOL:e}·(1 + max‖y‖)",
            fmt_f64(sol.residual_norm)
        )));
    }
    Ok(())
}

pub fn sgd(args: &RunArgs, oracle: Option<&Path>) -> CliResult {
    let Loaded { cfg, data, out_dir } = load(args)?;
    let spec = cfg.kernel_spec(data.input_dim())?;
    let sgd_cfg = cfg.sgd_config(data.len())?;
    let schedule = sgd_cfg.schedule(&spec)?;
    let fstar = oracle
        .map(|p| io::read_expansion(p, &io::metadata_path(p)))
        .transpose()?;
    say!("b = {}", fmt_f64(schedule.b()));
    say!("eta_1 = {}", fmt_f64(schedule.eta(1)));

    let traj = run_sgd(&sgd_cfg, &data, &spec, fstar.as_ref())?;
    let csv = out_dir.join("trajectory.csv");
    io::write_text(&csv, &io::trajectory_csv(&traj))?;
    let iterate = out_dir.join("iterate.csv");
    io::write_expansion(&iterate, &io::metadata_path(&iterate), &traj.final_iterate, &[])?;
    say!("wrote {}", csv.display());

    if let Some(max) = traj.max_iterate_norm {
        let r = cfg.problem.radius.value();
        if max > r * (1.0 + 1e-12) {
            return Err(CliError::numerical(format!(
                "iterate norm {} left the ball of radius {r}",
                fmt_f64(max)
            )));
        }
    }
    Ok(())
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::validation(format!("{THREADS_ENV}=`{v}` is not a thread count"))),
        Err(_) => Ok(None),
    }
}

pub fn study(args: &RunArgs, trials: Option<usize>, threads: Option<usize>) -> CliResult {
    let Loaded { mut cfg, data, out_dir } = load(args)?;
    if let Some(t) = trials {
        cfg.study.trials = t;
    }
    cfg.validate()?;
    let threads = resolve_threads(threads)?;
    let spec = cfg.kernel_spec(data.input_dim())?;
    let study_cfg = cfg.study_config(data.len(), threads)?;
    let schedule = study_cfg.sgd.schedule(&spec)?;

    let record = run_study(&study_cfg, &data, &spec)?;
    let csv = out_dir.join("convergence.csv");
    io::write_text(&csv, &io::study_csv(&record))?;

    let consts = constants(&study_cfg.sgd.weights, &spec);
    let mut summary = String::new();
    let _ = writeln!(summary, "# convergence study");
    match &record.fit {
        Some(fit) => {
            let _ = writeln!(summary, "slope = {}", fmt_f64(fit.slope));
            let _ = writeln!(summary, "slope_ci95 = {}", fmt_f64(fit.ci_half_width));
            let _ = writeln!(summary, "intercept = {}", fmt_f64(fit.intercept));
            let _ = writeln!(summary, "fit_points = {}", fit.points);
        }
        None => {
            let _ = writeln!(summary, "slope = none");
            let _ = writeln!(summary, "fit_error = {}", record.fit_error.as_deref().unwrap_or(""));
        }
    }
    let _ = writeln!(summary, "slope_window = [{}, {}]", fmt_f64(cfg.study.slope_min), fmt_f64(cfg.study.slope_max));
    let _ = writeln!(summary, "bound_scale = {}", fmt_f64(record.bound_scale));
    let _ = writeln!(summary, "fstar_norm = {}", fmt_f64(record.oracle.norm));
    let _ = writeln!(summary, "oracle_residual = {}", fmt_f64(record.oracle.residual_norm));
    let _ = writeln!(summary, "lambda = {}", fmt_f64(consts.lambda));
    let _ = writeln!(summary, "lambda_sq_lipschitz = {}", fmt_f64(consts.lambda_sq_lipschitz));
    let _ = writeln!(summary, "rho = {}", fmt_f64(schedule.rho()));
    let _ = writeln!(summary, "b = {}", fmt_f64(schedule.b()));
    let _ = writeln!(summary, "eta_1 = {}", fmt_f64(schedule.eta(1)));
    if let Some(max) = record.max_iterate_norm {
        let _ = writeln!(summary, "max_iterate_norm = {}", fmt_f64(max));
    }
    let _ = writeln!(summary, "seed = {}", cfg.sgd.seed);
    let _ = writeln!(summary, "trials = {}", cfg.study.trials);
    let _ = writeln!(summary, "steps = {}", cfg.sgd.steps);
    let _ = writeln!(summary, "n = {}", data.len());
    let _ = writeln!(summary, "\n# config\n{}", cfg.to_toml_string()?);
    let summary_path = out_dir.join("summary.txt");
    io::write_text(&summary_path, &summary)?;

    say!("{}", summary.trim_end());
    say!("wrote {} and {}", csv.display(), summary_path.display());

    match record.fit {
        Some(fit) if fit.slope >= cfg.study.slope_min && fit.slope <= cfg.study.slope_max => Ok(()),
        Some(fit) => Err(CliError::numerical(format!(
            "fitted slope {} outside [{}, {}]",
            fmt_f64(fit.slope),
            fmt_f64(cfg.study.slope_min),
            fmt_f64(cfg.study.slope_max)
        ))),
        None => Err(CliError::numerical(format!(
            "no slope fit: {}",
            record.fit_error.unwrap_or_default()
        ))),
    }
}
