use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::{RunConfig, SignalChoice};
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Debug, Parser)]
#[command(
    name = "msdeconv",
    version,
    about = "Multiscale tests for monotonicity and modes of a deconvolved density"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Replications of the command's Monte Carlo loop: limit draws for
    /// test/modes/map, null datasets for calibrate, datasets for reproduce.
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory [default: `output_dir` from the config, then
    /// $MSDECONV_OUTPUT_DIR, then ./msdeconv-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Only report errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Observations, one row per point, comma separated.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Multiplier for all critical values.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the multiscale test and write one decision per triple.
    Test(DataArgs),
    /// Decide for each candidate point whether it is a mode.
    Modes(DataArgs),
    /// Draw the arrows of all rejected increase hypotheses.
    Map(DataArgs),
    /// Find the critical-value multiplier that attains the level under a flat null.
    Calibrate(DataArgs),
    /// Rerun one of the published simulation tables.
    Reproduce {
        #[arg(long)]
        table: u8,
    },
    /// Write a synthetic sample.
    Simulate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum)]
        signal: Option<SignalChoice>,
    },
}

const DEFAULT_TABLE_REPS: usize = 1000;

impl Cli {
    /// Config file plus flag overrides, validated.
    pub fn resolve_config(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Validation(format!("config: cannot read {}: {e}", path.display()))
                })?;
                let mut c = RunConfig::from_toml(&text)?;
                // Relative input paths are taken relative to the config file.
                if let (Some(input), Some(dir)) = (&c.input, path.parent()) {
                    if input.is_relative() {
                        c.input = Some(dir.join(input));
                    }
                }
                c
            }
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(a) = self.alpha {
            c.alpha = a;
        }
        if let Some(t) = self.threads {
            c.threads = Some(t);
        }
        match &self.command {
            Command::Test(d) | Command::Modes(d) | Command::Map(d) | Command::Calibrate(d) => {
                if let Some(i) = &d.input {
                    c.input = Some(i.clone());
                }
                if let Some(g) = d.gamma {
                    c.gamma = g;
                }
            }
            Command::Simulate { n, signal } => {
                if let Some(n) = n {
                    c.simulate.n = *n;
                }
                if let Some(s) = signal {
                    c.simulate.signal = *s;
                }
            }
            Command::Reproduce { .. } => {}
        }
        if let Some(r) = self.reps {
            match self.command {
                Command::Test(_) | Command::Modes(_) | Command::Map(_) => c.model.kappa_reps = r,
                Command::Calibrate(_) => c.calibration.reps = r,
                Command::Reproduce { .. } | Command::Simulate { .. } => {}
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn run(&self) -> Result<Vec<String>, CliError> {
        let config = self.resolve_config()?;
        if let Some(t) = config.threads {
            // Fails only if a pool already exists, in which case it is kept.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global();
        }
        let out = OutputDir::resolve(self.out.as_deref(), &config)?;
        match &self.command {
            Command::Test(_) => commands::cmd_test(&config, &out),
            Command::Modes(_) => commands::cmd_modes(&config, &out),
            Command::Map(_) => commands::cmd_map(&config, &out),
            Command::Calibrate(_) => commands::cmd_calibrate(&config, &out),
            Command::Reproduce { table } => {
                let reps = self.reps.unwrap_or(DEFAULT_TABLE_REPS);
                if reps < 2 {
                    return Err(CliError::Validation(
                        "reps: reproduce needs at least 2 replications".into(),
                    ));
                }
                commands::cmd_reproduce(&config, *table, reps, &out)
            }
            Command::Simulate { .. } => commands::cmd_simulate(&config, &out),
        }
    }
}
