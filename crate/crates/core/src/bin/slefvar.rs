use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slefvar::harness::{self, Experiment, ExperimentConfig, HarnessError};

/// Fractal-variation and midpoint studies of SLE and critical lattice curves.
#[derive(Parser)]
#[command(name = "slefvar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML/JSON config or a run manifest.
    Run(RunArgs),
    /// Run a config that must describe an fvar study.
    FvarStudy(RunArgs),
    /// Compare the midpoint samples of two runs.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        /// Write the comparison JSON here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the sample-count multiplier.
    #[arg(long)]
    scale: Option<f64>,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(o) = &args.out {
        cfg.out_dir = Some(o.clone());
    }
    if let Some(s) = args.scale {
        cfg.scale = s;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run(args) => {
            let m = harness::run(&load(&args)?)?;
            report(&m);
        }
        Command::FvarStudy(args) => {
            let cfg = load(&args)?;
            if cfg.experiment != Experiment::FvarStudy {
                return Err(HarnessError::Validation {
                    field: "experiment".into(),
                    msg: "fvar-study needs experiment = \"fvar_study\"".into(),
                });
            }
            let m = harness::run(&cfg)?;
            report(&m);
        }
        Command::Compare { run_a, run_b, out } => {
            let cmp = harness::compare(&run_a, &run_b)?;
            let text =
                serde_json::to_string_pretty(&cmp).map_err(|e| HarnessError::Run(e.to_string()))?;
            match out {
                Some(p) => std::fs::write(&p, text + "\n")?,
                None => println!("{text}"),
            }
        }
    }
    Ok(())
}

fn report(m: &harness::RunManifest) {
    for e in &m.ensembles {
        eprintln!(
            "{} ({}): {} of {} samples used, {} rejected, {} skipped",
            e.role,
            e.model,
            e.used,
            e.requested,
            e.rejected.len(),
            e.skipped.len()
        );
    }
    if let Some(fit) = &m.slope {
        eprintln!("variance slope {:.4}", fit.slope);
    }
    let dir = m
        .config
        .out_dir
        .as_deref()
        .unwrap_or(std::path::Path::new("."));
    eprintln!(
        "wrote {} files to {} in {:.1} s",
        m.files.len() + 1,
        dir.display(),
        m.wall_time_s
    );
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ HarnessError::Validation { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
