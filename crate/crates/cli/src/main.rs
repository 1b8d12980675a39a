use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use sgrb::artifact::OfflineArtifact;
use sgrb::config::StudyConfig;
use sgrb::study::{cmd_convergence, cmd_evaluate, cmd_offline, cmd_validate, write_convergence_tables, ConvergenceMode};
use sgrb::Error;

#[derive(Parser)]
#[command(name = "sgrb", version, about = "Certified reduced basis estimates of output statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build both reduced models and write the artifact.
    Offline {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Artifact path (default: <out>/artifact.sgrb).
        #[arg(long)]
        artifact: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "seed-override")]
        seed_override: Option<u64>,
    },
    /// Corrected statistics and bounds of both models at one parameter.
    Evaluate {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true)]
        mu: Vec<f64>,
        #[arg(long = "R")]
        r: usize,
    },
    /// Error and bound tables over the configured reduced dimensions.
    Convergence {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long, value_enum, default_value = "l2")]
        mode: Mode,
        /// Test point for pointwise mode (default: first test point).
        #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true)]
        mu: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant and cross-model checks.
    Validate {
        /// Existing artifact; without it the models are built from the config.
        #[arg(long)]
        artifact: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "seed-override")]
        seed_override: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Pointwise,
    L2,
}

enum Failure {
    Validation,
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<StudyConfig, Error> {
    let mut c = match path {
        Some(p) => StudyConfig::load(p)?,
        None => StudyConfig::default(),
    };
    if let Some(s) = seed {
        c.override_seeds(s);
    }
    Ok(c)
}

fn mu_pair(v: &[f64]) -> [f64; 2] {
    [v[0], v[1]]
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Offline {
            config,
            artifact,
            out,
            seed_override,
        } => {
            let cfg = load_config(config.as_deref(), seed_override)?;
            let out = out.unwrap_or_else(|| PathBuf::from(&cfg.run.output_dir));
            let path = artifact.unwrap_or_else(|| out.join("artifact.sgrb"));
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(Error::from)?;
            }
            let art = cmd_offline(&cfg)?;
            art.save(&path)?;
            for r in &art.pod_reports {
                info!("{}: {} snapshots, R_max = {}", r.name, r.n_snapshots, r.r_max);
            }
            println!("{}", path.display());
        }
        Command::Evaluate { artifact, mu, r } => {
            let art = OfflineArtifact::load(&artifact)?;
            let record = cmd_evaluate(&art, mu_pair(&mu), r)?;
            println!("{}", serde_json::to_string_pretty(&record).map_err(Error::from)?);
        }
        Command::Convergence { artifact, mode, mu, out } => {
            let art = OfflineArtifact::load(&artifact)?;
            let mode = match mode {
                Mode::Pointwise => ConvergenceMode::Pointwise,
                Mode::L2 => ConvergenceMode::L2,
            };
            let points = match (&mu, mode) {
                (Some(m), ConvergenceMode::Pointwise) => vec![mu_pair(m)],
                _ => art.config.test_points()?,
            };
            let tables = cmd_convergence(&art, mode, &art.config.run.r_list, &points)?;
            let dir = out.unwrap_or_else(|| PathBuf::from(&art.config.run.output_dir));
            for p in write_convergence_tables(&dir, mode, &tables)? {
                println!("{}", p.display());
            }
        }
        Command::Validate {
            artifact,
            config,
            seed_override,
        } => {
            let art = match artifact {
                Some(p) => OfflineArtifact::load(&p)?,
                None => cmd_offline(&load_config(config.as_deref(), seed_override)?)?,
            };
            let report = cmd_validate(&art)?;
            for c in &report.checks {
                println!("{c}");
            }
            if !report.passed() {
                return Err(Failure::Validation);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => {
            eprintln!("validation failed");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
