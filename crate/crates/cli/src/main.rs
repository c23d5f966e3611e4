mod config;
mod plot;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{Experiment, ExperimentConfig, Overrides, Source};
use run::Failure;

/// Phase-space dynamics and entropy production of collapse models.
#[derive(Parser)]
#[command(name = "collapse-thermo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Covariance dynamics of the frictionless model and relative entropy to thermal targets.
    Frictionless(Common),
    /// Covariance dynamics with linear friction and relaxation to equilibrium.
    Friction(Common),
    /// Early-time linearized Husimi dynamics swept over β and target temperatures.
    QLinear(Common),
    /// Grid solver against the linearized channel for the (D, f) presets.
    BenchLinearization(Common),
    /// Resolve a configuration and check it without running anything.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Experiment to validate when the file has no `experiment` key.
        #[arg(long, value_enum)]
        experiment: Option<Experiment>,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat TOML file with experiment settings.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also render SVG plots.
    #[arg(long)]
    plots: bool,
    /// Number of time steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Lattice points per axis.
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    /// Half-width of the square window.
    #[arg(long, value_name = "X")]
    window: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            plots: self.plots,
            steps: self.steps,
            dt: self.dt,
            grid: self.grid,
            window: self.window,
        }
    }

    fn source(&self) -> Result<Source, Failure> {
        match &self.config {
            Some(p) => Ok(Source::read(p)?),
            None => Ok(Source::default()),
        }
    }
}

fn resolve(experiment: Option<Experiment>, common: &Common) -> Result<(ExperimentConfig, Source), Failure> {
    let src = common.source()?;
    let cfg = ExperimentConfig::resolve(experiment, &src, &common.overrides())?;
    Ok((cfg, src))
}

fn validate(experiment: Option<Experiment>, common: &Common) -> Result<(), Failure> {
    let targets: Vec<Option<Experiment>> = if common.config.is_none() && experiment.is_none() {
        Experiment::ALL.iter().map(|e| Some(*e)).collect()
    } else {
        vec![experiment]
    };
    for e in targets {
        let (cfg, src) = resolve(e, common)?;
        let checks = run::check(&cfg, &src)?;
        for w in &checks.warnings {
            eprintln!("warning: {}: {w}", cfg.experiment.name());
        }
        let resolved = serde_json::to_string_pretty(&cfg).map_err(|e| Failure::Other(e.into()))?;
        println!("{resolved}");
        println!("ok: {} configuration is valid", cfg.experiment.name());
    }
    Ok(())
}

fn execute(experiment: Experiment, common: &Common) -> Result<(), Failure> {
    let (cfg, src) = resolve(Some(experiment), common)?;
    let checks = run::check(&cfg, &src)?;
    for w in &checks.warnings {
        eprintln!("warning: {w}");
    }
    let clock = Instant::now();
    let artifacts = run::execute(&cfg)?;
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment,
        "config": cfg,
        "warnings": checks.warnings,
        "wall_time_s": clock.elapsed().as_secs_f64(),
        "files": artifacts.files,
        "summary": artifacts.summary,
    });
    let path = cfg.out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Other(e.into()))?)?;
    println!(
        "{}: wrote {} files and {} in {:.2}s",
        cfg.experiment.name(),
        artifacts.files.len(),
        path.display(),
        clock.elapsed().as_secs_f64()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Frictionless(c) => execute(Experiment::Frictionless, c),
        Command::Friction(c) => execute(Experiment::Friction, c),
        Command::QLinear(c) => execute(Experiment::QLinear, c),
        Command::BenchLinearization(c) => execute(Experiment::BenchLinearization, c),
        Command::Validate { common, experiment } => validate(*experiment, common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
