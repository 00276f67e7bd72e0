use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::fvar::{ModelKind, ModelSpec};
use crate::loewner::{SleConfig, StopRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    FvarStudy,
    MidpointCompare,
}

/// SLE settings of an ensemble; `kappa` comes from the model and the seed
/// from the per-sample seed derivation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SleSettings {
    pub dx: f64,
    pub stop: StopRule,
    #[serde(default = "yes")]
    pub use_laurent: bool,
    #[serde(default = "order")]
    pub laurent_order: usize,
    #[serde(default = "block")]
    pub laurent_block: usize,
    #[serde(default = "depth")]
    pub max_depth: u32,
}

fn yes() -> bool {
    true
}
fn order() -> usize {
    20
}
fn block() -> usize {
    8
}
fn depth() -> u32 {
    200
}

impl SleSettings {
    pub fn to_config(&self, kappa: f64, seed: u64) -> SleConfig {
        let mut cfg = match self.stop {
            StopRule::Semicircle { radius } => SleConfig::semicircle(kappa, self.dx, radius),
            StopRule::StripTip { dist } => SleConfig::strip(kappa, self.dx, dist),
        };
        cfg.seed = seed;
        cfg.use_laurent = self.use_laurent;
        cfg.laurent_order = self.laurent_order;
        cfg.laurent_block = self.laurent_block;
        cfg.max_depth = self.max_depth;
        cfg
    }
}

/// Markov-chain settings for the SAW and Ising ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcSettings {
    /// Independent chains; samples are split evenly between them.
    #[serde(default = "one")]
    pub chains: usize,
    /// Iterations between recorded samples.
    #[serde(default = "one_u64")]
    pub thin: u64,
    /// Burn-in: accepted pivots (SAW) or cluster updates (Ising). Defaults
    /// to `10 n_steps` for the SAW and `1000` for the Ising model.
    #[serde(default)]
    pub burn_in: Option<u64>,
}

fn one() -> usize {
    1
}
fn one_u64() -> u64 {
    1
}

impl Default for McmcSettings {
    fn default() -> Self {
        McmcSettings {
            chains: 1,
            thin: 1,
            burn_in: None,
        }
    }
}

/// Ising rectangle: `width` in lattice units (rounded to an even column count)
/// and `height` rows between the frozen boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingSettings {
    pub width: f64,
    pub height: usize,
}

/// One ensemble of curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub model: ModelSpec,
    pub n_samples: usize,
    /// Lattice steps `N` (LERW, SAW, percolation); for the Ising model the
    /// natural-time scale, defaulting to `height^d_h`.
    #[serde(default)]
    pub n_steps: Option<u64>,
    /// Stopping semicircle radius `rho N^(1/d_h)` for lattice midpoints.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub sle: Option<SleSettings>,
    /// Fractal-variation `dt` for SLE midpoints; defaults to `(4 dx)^d_h`.
    #[serde(default)]
    pub fvar_dt: Option<f64>,
    #[serde(default)]
    pub mcmc: Option<McmcSettings>,
    #[serde(default)]
    pub ising: Option<IsingSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Multiplies every `n_samples`.
    #[serde(default = "unit")]
    pub scale: f64,
    #[serde(flatten)]
    pub ensemble: EnsembleConfig,
    /// Second ensemble for midpoint comparisons.
    #[serde(default)]
    pub reference: Option<EnsembleConfig>,
    #[serde(default)]
    pub dt_list: Vec<f64>,
    #[serde(default)]
    pub t_cap: Option<f64>,
    /// `dt` range `[lo, hi]` used for the variance-slope fit; all `dt` by default.
    #[serde(default)]
    pub fit_range: Option<[f64; 2]>,
}

fn unit() -> f64 {
    1.0
}

fn invalid(field: &str, msg: impl Into<String>) -> HarnessError {
    HarnessError::Validation {
        field: field.to_string(),
        msg: msg.into(),
    }
}

impl EnsembleConfig {
    pub fn d_h(&self) -> f64 {
        self.model.d_h()
    }

    pub fn kappa(&self) -> f64 {
        self.model.kappa.unwrap_or(0.0)
    }

    pub fn mcmc(&self) -> McmcSettings {
        self.mcmc.clone().unwrap_or_default()
    }

    pub fn scaled_samples(&self, scale: f64) -> usize {
        ((self.n_samples as f64 * scale).round() as usize).max(1)
    }

    /// SLE midpoint `dt`.
    pub fn sle_fvar_dt(&self) -> f64 {
        let dx = self.sle.as_ref().map(|s| s.dx).unwrap_or(0.01);
        self.fvar_dt.unwrap_or_else(|| (4.0 * dx).powf(self.d_h()))
    }

    /// Natural-time scale of lattice curves.
    pub fn scale_n(&self) -> u64 {
        match (self.model.name, self.n_steps, &self.ising) {
            (_, Some(n), _) => n,
            (ModelKind::Ising, None, Some(is)) => {
                (is.height as f64).powf(self.d_h()).round() as u64
            }
            _ => 1,
        }
    }

    pub fn validate(&self, prefix: &str, experiment: Experiment) -> Result<(), HarnessError> {
        let f = |name: &str| format!("{prefix}{name}");
        self.model
            .validate()
            .map_err(|e| invalid(&f("model"), e.to_string()))?;
        if self.n_samples == 0 {
            return Err(invalid(&f("n_samples"), "must be >= 1"));
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(invalid(&f("rho"), format!("must lie in (0, 1], got {rho}")));
            }
        }
        if let Some(dt) = self.fvar_dt {
            if !(dt > 0.0) {
                return Err(invalid(&f("fvar_dt"), format!("must be > 0, got {dt}")));
            }
        }
        let needs_steps = matches!(
            self.model.name,
            ModelKind::Lerw | ModelKind::Saw | ModelKind::Perc
        );
        match self.model.name {
            ModelKind::Sle => {
                let sle = self
                    .sle
                    .as_ref()
                    .ok_or_else(|| invalid(&f("sle"), "sle ensembles need an [sle] table"))?;
                sle.to_config(self.kappa(), 0)
                    .validate()
                    .map_err(|e| invalid(&f("sle"), e.to_string()))?;
            }
            ModelKind::Ising => {
                let is = self
                    .ising
                    .as_ref()
                    .ok_or_else(|| invalid(&f("ising"), "ising ensembles need an [ising] table"))?;
                if !(is.width > 0.0) || is.height < 2 {
                    return Err(invalid(&f("ising"), "width must be > 0 and height >= 2"));
                }
            }
            _ => {}
        }
        if needs_steps && self.n_steps.unwrap_or(0) < 2 {
            return Err(invalid(
                &f("n_steps"),
                "lattice ensembles need n_steps >= 2",
            ));
        }
        if self.model.name == ModelKind::Saw
            && self.n_steps.is_some_and(|n| n > i32::MAX as u64 / 2)
        {
            return Err(invalid(&f("n_steps"), "too large"));
        }
        if let Some(m) = &self.mcmc {
            if m.chains == 0 || m.thin == 0 {
                return Err(invalid(&f("mcmc"), "chains and thin must be >= 1"));
            }
        }
        if experiment == Experiment::MidpointCompare
            && matches!(
                self.model.name,
                ModelKind::Lerw | ModelKind::Saw | ModelKind::Perc
            )
            && self.rho.is_none()
        {
            return Err(invalid(&f("rho"), "lattice midpoints need rho"));
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        toml::from_str(s).map_err(|e| invalid("config", e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(s).map_err(|e| invalid("config", e.to_string()))
    }

    /// Reads a TOML or JSON config, or the config echoed in a run manifest.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::File {
            path: path.to_path_buf(),
            msg: format!("cannot read config: {e}"),
        })?;
        let is_json =
            path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        if !is_json {
            return ExperimentConfig::from_toml_str(&text);
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| invalid("config", e.to_string()))?;
        let cfg = match value.get("config") {
            Some(inner) => inner.clone(),
            None => value,
        };
        serde_json::from_value(cfg).map_err(|e| invalid("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.workers == 0 {
            return Err(invalid("workers", "must be >= 1"));
        }
        if !(self.scale > 0.0) {
            return Err(invalid("scale", format!("must be > 0, got {}", self.scale)));
        }
        self.ensemble.validate("", self.experiment)?;
        match self.experiment {
            Experiment::FvarStudy => {
                if self.dt_list.is_empty() {
                    return Err(invalid("dt_list", "fvar studies need at least one dt"));
                }
                if let Some(d) = self.dt_list.iter().find(|d| !(**d > 0.0)) {
                    return Err(invalid("dt_list", format!("dt must be > 0, got {d}")));
                }
                let t_cap = self
                    .t_cap
                    .ok_or_else(|| invalid("t_cap", "fvar studies need t_cap"))?;
                if !(t_cap > 0.0) {
                    return Err(invalid("t_cap", format!("must be > 0, got {t_cap}")));
                }
                if let Some([lo, hi]) = self.fit_range {
                    if !(lo <= hi) {
                        return Err(invalid("fit_range", "lo must not exceed hi"));
                    }
                }
            }
            Experiment::MidpointCompare => {
                if let Some(r) = &self.reference {
                    r.validate("reference.", self.experiment)?;
                }
            }
        }
        Ok(())
    }
}
