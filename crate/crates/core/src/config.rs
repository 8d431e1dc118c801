//! TOML run configuration.
//!
//! ```toml
//! [kernel]
//! family = "gaussian"
//! bandwidth = 1.0
//!
//! [problem]
//! q = 0.3
//! radius = "inf"      # or a positive number
//! s = 2.0
//!
//! [sgd]
//! steps = 20000
//! seed = 1
//! record_every = 100
//!
//! [sgd.operator]
//! kind = "identity"   # or "two_point_scalar" with c_lo, c_hi, p_hi
//!
//! [study]
//! trials = 200
//! tail_fraction = 0.5
//!
//! [io]
//! data_path = "data.csv"
//! out_dir = "out"
//! ```
//!
//! Unknown keys are rejected. Relative paths are taken relative to the
//! working directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::StudyConfig;
use crate::function_space::Radius;
use crate::kernel::{KernelFamily, KernelSpec};
use crate::objective::MixtureWeights;
use crate::sgd::{OperatorMode, SgdConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelSection,
    pub problem: ProblemSection,
    #[serde(default)]
    pub sgd: SgdSection,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub io: IoSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub family: KernelFamily,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub q: f64,
    #[serde(default = "default_radius")]
    pub radius: Radius,
    #[serde(default = "default_s")]
    pub s: f64,
}

fn default_radius() -> Radius {
    Radius::INFINITE
}

fn default_s() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdSection {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to `max(1, steps / 200)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub operator: OperatorSection,
}

fn default_steps() -> usize {
    20_000
}

impl Default for SgdSection {
    fn default() -> Self {
        SgdSection {
            steps: default_steps(),
            seed: 0,
            record_every: None,
            operator: OperatorSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    #[default]
    Identity,
    TwoPointScalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    #[serde(default)]
    pub kind: OperatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_hi: Option<f64>,
}

impl Default for OperatorSection {
    fn default() -> Self {
        OperatorSection {
            kind: OperatorKind::Identity,
            c_lo: None,
            c_hi: None,
            p_hi: None,
        }
    }
}

impl OperatorSection {
    pub fn mode(&self) -> Result<OperatorMode> {
        match self.kind {
            OperatorKind::Identity => Ok(OperatorMode::Identity),
            OperatorKind::TwoPointScalar => {
                let need = |v: Option<f64>, k: &str| {
                    v.ok_or_else(|| Error::Config(format!("two_point_scalar operator needs `{k}`")))
                };
                OperatorMode::two_point(need(self.c_lo, "c_lo")?, need(self.c_hi, "c_hi")?, need(self.p_hi, "p_hi")?)
                    .map_err(|e| Error::Config(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    /// Acceptance window for the fitted slope.
    #[serde(default = "default_slope_min")]
    pub slope_min: f64,
    #[serde(default = "default_slope_max")]
    pub slope_max: f64,
}

fn default_trials() -> usize {
    200
}

fn default_tail() -> f64 {
    0.5
}

fn default_slope_min() -> f64 {
    -1.25
}

fn default_slope_max() -> f64 {
    -0.75
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            trials: default_trials(),
            tail_fraction: default_tail(),
            slope_min: default_slope_min(),
            slope_max: default_slope_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_path: Option<PathBuf>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for IoSection {
    fn default() -> Self {
        IoSection {
            data_path: None,
            out_dir: default_out_dir(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        KernelSpec::new(self.kernel.family, self.kernel.bandwidth, 1).map_err(cfg_err)?;
        MixtureWeights::new(self.problem.q, 1).map_err(cfg_err)?;
        if !(self.problem.s > 1.0 && self.problem.s.is_finite()) {
            return Err(Error::Config(format!("problem.s must exceed 1, got {}", self.problem.s)));
        }
        if self.sgd.steps == 0 {
            return Err(Error::Config("sgd.steps must be at least 1".into()));
        }
        if self.sgd.record_every == Some(0) {
            return Err(Error::Config("sgd.record_every must be at least 1".into()));
        }
        self.sgd.operator.mode()?;
        if self.study.trials == 0 {
            return Err(Error::Config("study.trials must be at least 1".into()));
        }
        if !(self.study.tail_fraction > 0.0 && self.study.tail_fraction < 1.0) {
            return Err(Error::Config(format!(
                "study.tail_fraction must lie in (0, 1), got {}",
                self.study.tail_fraction
            )));
        }
        if !(self.study.slope_min <= self.study.slope_max) {
            return Err(Error::Config("study.slope_min must not exceed study.slope_max".into()));
        }
        Ok(())
    }

    pub fn kernel_spec(&self, dim: usize) -> Result<KernelSpec> {
        KernelSpec::new(self.kernel.family, self.kernel.bandwidth, dim)
    }

    pub fn record_every(&self) -> usize {
        self.sgd.record_every.unwrap_or((self.sgd.steps / 200).max(1))
    }

    pub fn sgd_config(&self, n: usize) -> Result<SgdConfig> {
        Ok(SgdConfig {
            weights: MixtureWeights::new(self.problem.q, n)?,
            radius: self.problem.radius,
            s: self.problem.s,
            steps: self.sgd.steps,
            seed: self.sgd.seed,
            operator: self.sgd.operator.mode()?,
            record_every: self.record_every(),
            log_draws: false,
        })
    }

    pub fn study_config(&self, n: usize, threads: Option<usize>) -> Result<StudyConfig> {
        Ok(StudyConfig {
            sgd: self.sgd_config(n)?,
            trials: self.study.trials,
            tail_fraction: self.study.tail_fraction,
            threads,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
[kernel]
family = "gaussian"
bandwidth = 1.0

[problem]
q = 0.3
radius = "inf"
s = 2.0

[sgd]
steps = 20000
seed = 7
record_every = 100

[sgd.operator]
kind = "two_point_scalar"
c_lo = 0.5
c_hi = 1.5
p_hi = 0.5

[study]
trials = 200
tail_fraction = 0.5

[io]
data_path = "data.csv"
out_dir = "out"
"#;

    #[test]
    fn parses_full_config() {
        let cfg = RunConfig::from_toml_str(FULL).unwrap();
        assert_eq!(cfg.kernel.family, KernelFamily::Gaussian);
        assert_eq!(cfg.problem.radius, Radius::INFINITE);
        assert_eq!(cfg.sgd.operator.mode().unwrap().rho(), 1.25);
        let sgd = cfg.sgd_config(20).unwrap();
        assert_eq!((sgd.steps, sgd.record_every, sgd.seed), (20000, 100, 7));
    }

    #[test]
    fn round_trips() {
        let cfg = RunConfig::from_toml_str(FULL).unwrap();
        let again = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, again);

        let mut finite = cfg.clone();
        finite.problem.radius = Radius::new(2.5).unwrap();
        finite.io.data_path = None;
        let again = RunConfig::from_toml_str(&finite.to_toml_string().unwrap()).unwrap();
        assert_eq!(finite, again);
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::from_toml_str("[kernel]\nfamily = \"laplacian\"\nbandwidth = 0.5\n[problem]\nq = 0.5\n").unwrap();
        assert_eq!(cfg.problem.s, 2.0);
        assert_eq!(cfg.record_every(), 100);
        assert_eq!(cfg.study.trials, 200);
        assert_eq!(cfg.sgd.operator.mode().unwrap(), OperatorMode::Identity);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = "[kernel]\nfamily = \"gaussian\"\nbandwidth = 1.0\n[problem]\nq = 0.5\n";
        for extra in [
            "bogus = 1\n",
            "[sgd]\nsteps = 10\nwhatever = 2\n",
            "[sgd.operator]\nkind = \"two_point_scalar\"\nc_lo = 0.5\n",
            "[sgd.operator]\nkind = \"two_point_scalar\"\nc_lo = 0.5\nc_hi = 2.0\np_hi = 0.5\n",
            "[study]\ntail_fraction = 1.0\n",
        ] {
            let text = if extra.starts_with('[') {
                format!("{base}{extra}")
            } else {
                format!("{extra}{base}")
            };
            assert!(matches!(RunConfig::from_toml_str(&text), Err(Error::Config(_))), "{extra}");
        }
        for problem in ["q = 1.0", "q = 0.5\nradius = 0.0", "q = 0.5\nradius = \"infinite\"", "q = 0.5\ns = 1.0"] {
            let text = format!("[kernel]\nfamily = \"gaussian\"\nbandwidth = 1.0\n[problem]\n{problem}\n");
            assert!(RunConfig::from_toml_str(&text).is_err(), "{problem}");
        }
        assert!(RunConfig::from_toml_str("[kernel]\nfamily = \"rbf\"\nbandwidth = 1.0\n[problem]\nq = 0.5\n").is_err());
    }
}
