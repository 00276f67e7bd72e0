//! Experiment orchestration: seeding, parallel ensembles, output files.
//!
//! Every independent sample `i` of an ensemble draws from its own ChaCha8
//! stream seeded with `sample_seed(master_seed, role, i)`; Markov chains are
//! seeded per chain the same way. Work is spread over a rayon pool of
//! `workers` threads and merged by index, so data files do not depend on the
//! worker count.

mod config;

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    EnsembleConfig, Experiment, ExperimentConfig, IsingSettings, McmcSettings, SleSettings,
};

use crate::fvar::{collect_study, study_one, variance_slope, FvarStudy, ModelKind};
use crate::geometry::Curve;
use crate::lattice::{
    ising_interface, lerw_sample, natural_curve, perc_interface, IsingLattice, PivotChain,
};
use crate::loewner::{sample_sle, StopRule};
use crate::stats::{
    self, compare_samples, midpoint_lattice, midpoint_lattice_full, midpoint_sle,
    midpoint_sle_full, read_samples, write_samples, Comparison, EmpiricalCdf, MidpointSample,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config field `{field}`: {msg}")]
    Validation { field: String, msg: String },
    #[error("{path}: {msg}")]
    File { path: PathBuf, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Run(String),
}

pub const MIDPOINTS_FILE: &str = "midpoints.csv";
pub const REFERENCE_MIDPOINTS_FILE: &str = "midpoints_reference.csv";
pub const COMPARISON_FILE: &str = "comparison.json";
pub const STUDY_FILE: &str = "fvar_study.csv";
pub const SUMMARY_FILE: &str = "fvar_summary.json";
pub const SLOPE_FILE: &str = "fvar_slope.json";
pub const MANIFEST_FILE: &str = "manifest.json";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Seed of stream `index` within the stream family `role`.
pub fn sample_seed(master_seed: u64, role: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed ^ fnv1a(role)) ^ index)
}

/// Record of one run, sufficient to regenerate its data files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub software: String,
    pub rng: String,
    pub seed_derivation: String,
    pub config: ExperimentConfig,
    pub ensembles: Vec<EnsembleRecord>,
    pub files: Vec<String>,
    #[serde(default)]
    pub slope: Option<SlopeFit>,
    pub workers: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub role: String,
    pub model: String,
    pub requested: usize,
    pub used: usize,
    pub rejected: Vec<Rejection>,
    /// Curves too short for `t_cap` in fvar studies.
    pub skipped: Vec<usize>,
    /// Per-sample seeds, or per-chain seeds for Markov-chain ensembles.
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc: Option<McmcRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fvar_dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McmcRecord {
    pub chains: usize,
    pub thin: u64,
    pub burn_in: u64,
    pub samples_per_chain: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub sample_id: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub dt_used: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtSummary {
    pub dt: f64,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

/// How the curves of one ensemble are generated.
struct Source<'a> {
    ens: &'a EnsembleConfig,
    role: &'a str,
    master_seed: u64,
    n: usize,
}

/// A sampled curve, in the model's own coordinates, or the reason it failed.
type Sampled = Result<Curve, String>;

impl Source<'_> {
    fn is_chain(&self) -> bool {
        matches!(self.ens.model.name, ModelKind::Saw | ModelKind::Ising)
    }

    fn chain_layout(&self) -> Vec<usize> {
        let chains = self.ens.mcmc().chains.min(self.n).max(1);
        (0..chains)
            .map(|c| self.n / chains + usize::from(c < self.n % chains))
            .collect()
    }

    fn burn_in(&self) -> u64 {
        let m = self.ens.mcmc();
        match self.ens.model.name {
            ModelKind::Saw => m.burn_in.unwrap_or(10 * self.ens.n_steps.unwrap_or(0)),
            _ => m.burn_in.unwrap_or(1000),
        }
    }

    fn seeds(&self) -> Vec<u64> {
        let count = if self.is_chain() {
            self.chain_layout().len()
        } else {
            self.n
        };
        let role = if self.is_chain() {
            format!("{}/chain", self.role)
        } else {
            self.role.to_string()
        };
        (0..count as u64)
            .map(|i| sample_seed(self.master_seed, &role, i))
            .collect()
    }

    fn mcmc_record(&self) -> Option<McmcRecord> {
        self.is_chain().then(|| McmcRecord {
            chains: self.chain_layout().len(),
            thin: self.ens.mcmc().thin,
            burn_in: self.burn_in(),
            samples_per_chain: self.chain_layout(),
        })
    }

    /// Applies `f` to every curve of the ensemble, in sample order.
    fn map<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Sampled) -> T + Sync,
    {
        let seeds = self.seeds();
        if !self.is_chain() {
            return seeds.par_iter().map(|&s| f(self.independent(s))).collect();
        }
        let layout = self.chain_layout();
        let per_chain: Vec<Vec<T>> = seeds
            .par_iter()
            .zip(layout.par_iter())
            .map(|(&s, &count)| self.chain(s, count, &f))
            .collect();
        per_chain.into_iter().flatten().collect()
    }

    fn independent(&self, seed: u64) -> Sampled {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.ens.n_steps.unwrap_or(0) as usize;
        match self.ens.model.name {
            ModelKind::Sle => {
                let cfg = self
                    .ens
                    .sle
                    .as_ref()
                    .expect("validated")
                    .to_config(self.ens.kappa(), seed);
                sample_sle(&cfg, &mut rng)
                    .map(|t| t.curve)
                    .map_err(|e| e.to_string())
            }
            ModelKind::Lerw => {
                let w = lerw_sample(n, &mut rng).map_err(|e| e.to_string())?;
                Curve::from_points(w.points()).map_err(|e| e.to_string())
            }
            ModelKind::Perc => {
                let it = perc_interface(n, &mut rng);
                Curve::from_points(it.vertices).map_err(|e| e.to_string())
            }
            ModelKind::Saw | ModelKind::Ising => unreachable!("chain models"),
        }
    }

    fn chain<T, F: Fn(Sampled) -> T>(&self, seed: u64, count: usize, f: &F) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let thin = self.ens.mcmc().thin;
        let mut out = Vec::with_capacity(count);
        match self.ens.model.name {
            ModelKind::Saw => {
                let n = self.ens.n_steps.unwrap_or(0) as usize;
                let mut chain = match PivotChain::straight(n) {
                    Ok(c) => c,
                    Err(e) => return (0..count).map(|_| f(Err(e.to_string()))).collect(),
                };
                let mut acc = 0;
                while acc < self.burn_in() {
                    acc += u64::from(chain.step(&mut rng));
                }
                for _ in 0..count {
                    for _ in 0..thin {
                        chain.step(&mut rng);
                    }
                    out.push(f(
                        Curve::from_points(chain.walk().points()).map_err(|e| e.to_string())
                    ));
                }
            }
            ModelKind::Ising => {
                let is = self.ens.ising.as_ref().expect("validated");
                let mut lat = match IsingLattice::strip_with_width(is.width, is.height) {
                    Ok(l) => l,
                    Err(e) => return (0..count).map(|_| f(Err(e.to_string()))).collect(),
                };
                for _ in 0..self.burn_in() {
                    lat.wolff_step(&mut rng);
                }
                for _ in 0..count {
                    for _ in 0..thin {
                        lat.wolff_step(&mut rng);
                    }
                    out.push(f(ising_interface(&lat)
                        .map_err(|e| e.to_string())
                        .and_then(|c| anchor_at_origin(&c))));
                }
            }
            _ => unreachable!("independent models"),
        }
        out
    }
}

/// Translates a curve so that it starts at the origin.
fn anchor_at_origin(c: &Curve) -> Sampled {
    let s = c.start();
    let pts = c.points().iter().map(|&p| p - s).collect();
    Curve::new(pts, c.params().to_vec()).map_err(|e| e.to_string())
}

/// Stopping radius of lattice midpoints, `rho N^(1/d_h)`.
fn lattice_radius(ens: &EnsembleConfig) -> f64 {
    ens.rho.unwrap_or(1.0) * (ens.n_steps.unwrap_or(1) as f64).powf(1.0 / ens.d_h())
}

fn midpoint_of(ens: &EnsembleConfig, curve: &Curve) -> Result<MidpointSample, stats::StatsError> {
    match ens.model.name {
        ModelKind::Sle => {
            let sle = ens.sle.as_ref().expect("validated");
            let dt = ens.sle_fvar_dt();
            match sle.stop {
                StopRule::Semicircle { radius } => midpoint_sle(curve, dt, ens.d_h(), radius),
                StopRule::StripTip { .. } => midpoint_sle_full(curve, dt, ens.d_h(), 1.0),
            }
        }
        ModelKind::Ising => {
            let h = ens.ising.as_ref().expect("validated").height as f64;
            midpoint_lattice_full(curve, h)
        }
        _ => midpoint_lattice(curve, lattice_radius(ens)),
    }
}

struct MidpointRun {
    rows: Vec<(usize, MidpointSample)>,
    record: EnsembleRecord,
}

fn run_midpoints(ens: &EnsembleConfig, role: &str, cfg: &ExperimentConfig) -> MidpointRun {
    let src = Source {
        ens,
        role,
        master_seed: cfg.master_seed,
        n: ens.scaled_samples(cfg.scale),
    };
    let results = src.map(|c| c.and_then(|c| midpoint_of(ens, &c).map_err(|e| e.to_string())));
    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for (id, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => rows.push((id, s)),
            Err(reason) => rejected.push(Rejection {
                sample_id: id,
                reason,
            }),
        }
    }
    let record = EnsembleRecord {
        role: role.to_string(),
        model: ens.model.name.as_str().to_string(),
        requested: src.n,
        used: rows.len(),
        rejected,
        skipped: Vec::new(),
        seeds: src.seeds(),
        mcmc: src.mcmc_record(),
        fvar_dt: (ens.model.name == ModelKind::Sle).then(|| ens.sle_fvar_dt()),
        radius: matches!(
            ens.model.name,
            ModelKind::Lerw | ModelKind::Saw | ModelKind::Perc
        )
        .then(|| lattice_radius(ens)),
    };
    MidpointRun { rows, record }
}

fn run_study(cfg: &ExperimentConfig) -> (FvarStudy, EnsembleRecord) {
    let ens = &cfg.ensemble;
    let t_cap = cfg.t_cap.expect("validated");
    let src = Source {
        ens,
        role: "primary",
        master_seed: cfg.master_seed,
        n: ens.scaled_samples(cfg.scale),
    };
    let d_h = ens.d_h();
    let results = src.map(|c| {
        let c = c?;
        let curve = if ens.model.name == ModelKind::Sle {
            c
        } else {
            natural_curve(c.points(), d_h, ens.scale_n()).map_err(|e| e.to_string())?
        };
        study_one(&curve, &cfg.dt_list, d_h, t_cap).map_err(|e| e.to_string())
    });
    let mut rejected = Vec::new();
    let rows = results
        .into_iter()
        .enumerate()
        .map(|(id, r)| {
            r.unwrap_or_else(|reason| {
                rejected.push(Rejection {
                    sample_id: id,
                    reason,
                });
                None
            })
        })
        .collect();
    let mut study = collect_study(rows, &cfg.dt_list, d_h, t_cap);
    let rejected_ids: Vec<usize> = rejected.iter().map(|r| r.sample_id).collect();
    study.skipped.retain(|id| !rejected_ids.contains(id));
    let record = EnsembleRecord {
        role: "primary".into(),
        model: ens.model.name.as_str().to_string(),
        requested: src.n,
        used: study.sample_ids.len(),
        rejected,
        skipped: study.skipped.clone(),
        seeds: src.seeds(),
        mcmc: src.mcmc_record(),
        fvar_dt: None,
        radius: None,
    };
    (study, record)
}

/// Per-`dt` mean, variance and quartiles.
pub fn summarize(study: &FvarStudy) -> Vec<DtSummary> {
    (0..study.dt_list.len())
        .filter(|&i| !study.counts[i].is_empty())
        .map(|i| {
            let v = study.values(i);
            let c = EmpiricalCdf::new(v.clone()).expect("non-empty");
            DtSummary {
                dt: study.dt_list[i],
                n: v.len(),
                mean: stats::mean(&v),
                variance: if v.len() > 1 {
                    stats::variance(&v)
                } else {
                    0.0
                },
                q25: c.quantile(0.25),
                median: c.quantile(0.5),
                q75: c.quantile(0.75),
            }
        })
        .collect()
}

/// Variance-slope fit over the `dt` values inside `fit_range`.
pub fn fit_slope(summary: &[DtSummary], fit_range: Option<[f64; 2]>) -> Option<SlopeFit> {
    let used: Vec<&DtSummary> = summary
        .iter()
        .filter(|s| fit_range.is_none_or(|[lo, hi]| s.dt >= lo && s.dt <= hi))
        .collect();
    let dts: Vec<f64> = used.iter().map(|s| s.dt).collect();
    let vars: Vec<f64> = used.iter().map(|s| s.variance).collect();
    let (slope, intercept) = variance_slope(&dts, &vars).ok()?;
    Some(SlopeFit {
        dt_used: dts,
        slope,
        intercept,
    })
}

fn create<P: AsRef<Path>>(path: P) -> Result<BufWriter<fs::File>, HarnessError> {
    let path = path.as_ref();
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::File {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| HarnessError::Run(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn prepare_out_dir(dir: &Path) -> Result<(), HarnessError> {
    let fail = |e: std::io::Error| HarnessError::File {
        path: dir.to_path_buf(),
        msg: format!("output directory is not writable: {e}"),
    };
    fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"").map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)?;
    Ok(())
}

/// Runs an experiment, writing its data files and manifest into the output directory.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest, HarnessError> {
    cfg.validate()?;
    let out = cfg
        .out_dir
        .clone()
        .ok_or_else(|| HarnessError::Validation {
            field: "out_dir".into(),
            msg: "no output directory given".into(),
        })?;
    prepare_out_dir(&out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Run(e.to_string()))?;
    let started = Instant::now();

    let mut files = Vec::new();
    let mut ensembles = Vec::new();
    let mut slope = None;
    match cfg.experiment {
        Experiment::MidpointCompare => {
            let primary = pool.install(|| run_midpoints(&cfg.ensemble, "primary", cfg));
            let mut w = create(out.join(MIDPOINTS_FILE))?;
            write_samples(&primary.rows, &mut w)?;
            w.flush()?;
            files.push(MIDPOINTS_FILE.to_string());
            if let Some(reference) = &cfg.reference {
                let other = pool.install(|| run_midpoints(reference, "reference", cfg));
                let mut w = create(out.join(REFERENCE_MIDPOINTS_FILE))?;
                write_samples(&other.rows, &mut w)?;
                w.flush()?;
                files.push(REFERENCE_MIDPOINTS_FILE.to_string());
                if !primary.rows.is_empty() && !other.rows.is_empty() {
                    let a: Vec<MidpointSample> = primary.rows.iter().map(|r| r.1).collect();
                    let b: Vec<MidpointSample> = other.rows.iter().map(|r| r.1).collect();
                    let cmp =
                        compare_samples(&a, &b).map_err(|e| HarnessError::Run(e.to_string()))?;
                    write_json(&out.join(COMPARISON_FILE), &cmp)?;
                    files.push(COMPARISON_FILE.to_string());
                }
                ensembles.push(primary.record);
                ensembles.push(other.record);
            } else {
                ensembles.push(primary.record);
            }
        }
        Experiment::FvarStudy => {
            let (study, record) = pool.install(|| run_study(cfg));
            let mut w = create(out.join(STUDY_FILE))?;
            writeln!(w, "dt,sample_id,n,value")?;
            for (i, &dt) in study.dt_list.iter().enumerate() {
                for (j, &id) in study.sample_ids.iter().enumerate() {
                    let n = study.counts[i][j];
                    writeln!(w, "{dt:.16e},{id},{n},{:.16e}", n as f64 * dt)?;
                }
            }
            w.flush()?;
            files.push(STUDY_FILE.to_string());
            let summary = summarize(&study);
            write_json(&out.join(SUMMARY_FILE), &summary)?;
            files.push(SUMMARY_FILE.to_string());
            slope = fit_slope(&summary, cfg.fit_range);
            if let Some(fit) = &slope {
                write_json(&out.join(SLOPE_FILE), fit)?;
                files.push(SLOPE_FILE.to_string());
            }
            ensembles.push(record);
        }
    }

    let manifest = RunManifest {
        software: format!("slefvar {}", env!("CARGO_PKG_VERSION")),
        rng: "ChaCha8Rng (rand_chacha) seeded with seed_from_u64".into(),
        seed_derivation:
            "seed = splitmix64(splitmix64(master_seed ^ fnv1a(role)) ^ index); role is \
                          `primary` or `reference`, suffixed `/chain` for Markov-chain ensembles"
                .into(),
        config: cfg.clone(),
        ensembles,
        files,
        slope,
        workers: cfg.workers,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Midpoint samples of a run directory (or a samples CSV file).
pub fn load_midpoints(path: &Path) -> Result<Vec<MidpointSample>, HarnessError> {
    let file = if path.is_dir() {
        path.join(MIDPOINTS_FILE)
    } else {
        path.to_path_buf()
    };
    let f = fs::File::open(&file).map_err(|e| HarnessError::File {
        path: file.clone(),
        msg: format!("cannot open midpoint samples: {e}"),
    })?;
    let rows = read_samples(BufReader::new(f)).map_err(|e| HarnessError::File {
        path: file.clone(),
        msg: e.to_string(),
    })?;
    if rows.is_empty() {
        return Err(HarnessError::File {
            path: file,
            msg: "no midpoint samples".into(),
        });
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}

/// Maximum CDF differences between the midpoint samples of two runs.
pub fn compare(run_a: &Path, run_b: &Path) -> Result<Comparison, HarnessError> {
    let a = load_midpoints(run_a)?;
    let b = load_midpoints(run_b)?;
    compare_samples(&a, &b).map_err(|e| HarnessError::Run(e.to_string()))
}
