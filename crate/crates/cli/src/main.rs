use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rabisim::predistort::FormKind;
use rabisim::tomo::MleOptions;
use rabisim_cli::tools::{self, PredistortOptions, ReconstructOptions};
use rabisim_cli::{CliError, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "rabisim", version, about = "Digital quantum Rabi simulation sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. physics.g=2.0 (repeatable)
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Seed for the sampling layers; replaces `seed` in the config
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its data files
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (default: output.dir or out/<experiment>)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads, 0 for all cores
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Check a config and print it with defaults filled in
    Validate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// List experiment names and what each one computes
    ListExperiments,
    /// Reconstruct a resonator density matrix from a Wigner dataset (re,im,value[,shots])
    Reconstruct {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Reconstruction truncation n_max
        #[arg(long, default_value_t = 8)]
        n_trunc: usize,
        /// Operator build truncation (default: 4·max|α|²)
        #[arg(long)]
        n_build: Option<usize>,
        #[arg(long, default_value_t = 5000)]
        max_iter: usize,
    },
    /// Compute a predistortion kernel from a step response (t_ns,value)
    Predistort {
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Kernel length in samples (default: trace length)
        #[arg(long)]
        n: Option<usize>,
        /// Fit a parametric form to the kernel
        #[arg(long, value_enum)]
        fit: Option<Form>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    LinearRamp,
    ExpApproach,
    Quadratic,
    SkinEffect,
    HighPass,
}

impl From<Form> for FormKind {
    fn from(f: Form) -> Self {
        match f {
            Form::LinearRamp => FormKind::LinearRamp,
            Form::ExpApproach => FormKind::ExpApproach,
            Form::Quadratic => FormKind::Quadratic,
            Form::SkinEffect => FormKind::SkinEffect,
            Form::HighPass => FormKind::HighPass,
        }
    }
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig, CliError> {
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    Ok(ExperimentConfig::load(&args.config, &overrides)?)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { cfg, out, workers } => {
            let cfg = load(&cfg)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir());
            let files = rabisim_cli::run(&cfg, &dir, workers)?;
            eprintln!("{}: wrote {} files to {} (config {})", cfg.experiment, files.len(), dir.display(), &cfg.hash()[..12]);
        }
        Command::Validate { cfg } => {
            let cfg = load(&cfg)?;
            println!("# config_hash = {}", cfg.hash());
            print!("{}", cfg.to_toml());
        }
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<18} {}", e.name(), e.describe());
            }
        }
        Command::Reconstruct {
            dataset,
            out,
            n_trunc,
            n_build,
            max_iter,
        } => {
            let opts = ReconstructOptions {
                n_trunc,
                n_build,
                mle: MleOptions {
                    max_iter,
                    ..MleOptions::default()
                },
            };
            tools::reconstruct(&dataset, &out, &opts)?;
        }
        Command::Predistort { trace, out, n, fit } => {
            let opts = PredistortOptions {
                n,
                fit: fit.map(Into::into),
            };
            tools::predistort(&trace, &out, &opts)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rabisim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
