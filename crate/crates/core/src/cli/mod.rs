//! Command-line front end.
//!
//! Every subcommand reads a [`config::RunConfig`] assembled from defaults, an
//! optional `--config` file and flag overrides (flags win), runs inside a
//! rayon pool sized by `--workers`, and writes its reports to the output
//! directory. Exit codes: 0 success, 2 configuration, 3 data, 4 model fit.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, ErrorKind, Result};
use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_FIT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "ordrisk",
    version,
    about = "Ordinal three-category risk prediction"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// LODO-CV point estimates for each learner.
    Validate(Overrides),
    /// Stratified bootstrap of LODO-CV with per-drug correct rates.
    Bootstrap(Overrides),
    /// Flag drugs with low correct rates under both bootstrapped models.
    Outliers(Overrides),
    /// Rerun LODO-CV without the flagged outliers.
    Sensitivity(Overrides),
    /// Metrics conditioned on a correctly predicted control drug.
    Control(Overrides),
    /// Normalized permutation predictor importance.
    Importance(Overrides),
    /// Fill missing cells with the bagged-tree imputer.
    Impute(Overrides),
    /// Write a synthetic dataset and a JSON sidecar.
    Synth(Overrides),
}

/// Settings shared by all subcommands; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<String>,
    /// stemcell7, wedge15 or custom.
    #[arg(long)]
    pub schema: Option<String>,
    /// Comma-separated learner names.
    #[arg(long)]
    pub learners: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Trees per forest (B).
    #[arg(long)]
    pub trees: Option<String>,
    /// Bootstrap replicates (R).
    #[arg(long)]
    pub replicates: Option<String>,
    /// Permutation repetitions (G).
    #[arg(long)]
    pub repetitions: Option<String>,
    #[arg(long)]
    pub threshold: Option<String>,
    #[arg(long)]
    pub control: Option<String>,
    /// per-fold or global-leaky.
    #[arg(long)]
    pub imputation: Option<String>,
    #[arg(long)]
    pub imputer_bags: Option<String>,
    #[arg(long)]
    pub importance_learner: Option<String>,
    /// Output directory (default from the ORDRISK_OUT environment variable).
    #[arg(long)]
    pub out: Option<String>,
    /// Output file for `impute` and `synth`.
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub per_category: Option<String>,
    #[arg(long)]
    pub obs_per_drug: Option<String>,
    #[arg(long)]
    pub noise_sd: Option<String>,
    #[arg(long)]
    pub nonlinear: bool,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("input", &self.input),
            ("schema", &self.schema),
            ("learners", &self.learners),
            ("seed", &self.seed),
            ("trees", &self.trees),
            ("replicates", &self.replicates),
            ("repetitions", &self.repetitions),
            ("threshold", &self.threshold),
            ("control", &self.control),
            ("imputation", &self.imputation),
            ("imputer_bags", &self.imputer_bags),
            ("importance_learner", &self.importance_learner),
            ("out", &self.out),
            ("output", &self.output),
            ("per_category", &self.per_category),
            ("obs_per_drug", &self.obs_per_drug),
            ("noise_sd", &self.noise_sd),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.nonlinear {
            cfg.nonlinear = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Config => EXIT_CONFIG,
        ErrorKind::Data => EXIT_DATA,
        ErrorKind::Fit => EXIT_FIT,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let pool = match cli.workers {
        Some(0) => return Err(Error::InvalidArgument("`workers` must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Validate(o) => commands::validate(&o.resolve()?),
        Command::Bootstrap(o) => commands::bootstrap(&o.resolve()?),
        Command::Outliers(o) => commands::outliers(&o.resolve()?),
        Command::Sensitivity(o) => commands::sensitivity(&o.resolve()?),
        Command::Control(o) => commands::control(&o.resolve()?),
        Command::Importance(o) => commands::importance(&o.resolve()?),
        Command::Impute(o) => commands::impute(&o.resolve()?),
        Command::Synth(o) => commands::synth(&o.resolve()?),
    })
}

/// Parse `std::env::args`, run, and return the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
