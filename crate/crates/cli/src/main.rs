//! `choicekit` command-line pipeline: weight → estimate → simulate → impact → validate.
//!
//! Exit codes: 0 success, 1 non-convergence, 2 input error, 3 config error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use choicekit::Error;
use clap::{Parser, Subcommand, ValueEnum};

pub const EXIT_NONCONVERGED: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "choicekit", version, about = "Mode-choice estimation, raking, scenario simulation and emission accounting")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Mnl,
    Mixl,
    Hcm,
    Bikeability,
}

impl From<ModelArg> for choicekit::estimation::ModelKind {
    fn from(m: ModelArg) -> Self {
        use choicekit::estimation::ModelKind;
        match m {
            ModelArg::Mnl => ModelKind::Mnl,
            ModelArg::Mixl => ModelKind::Mixl,
            ModelArg::Hcm => ModelKind::Hcm,
            ModelArg::Bikeability => ModelKind::Binary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LatentArg {
    Integrate,
    PointEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoringArg {
    Argmax,
    Expected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Survey,
    Population,
    Sample,
    Bikeability,
}

#[derive(Debug, clap::Args)]
pub struct ScenarioArgs {
    /// Estimation result JSON written by `estimate`.
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub population: PathBuf,
    /// `individual_id,weight` file keyed by trip id; overrides the population weight column.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Grid TOML (`costs`, `waits`); defaults to the 5 × 6 design grid.
    #[arg(long, env = "CHOICEKIT_GRID")]
    pub grid: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "integrate")]
    pub latent: LatentArg,
    /// Remove AB and ABPT from every choice set.
    #[arg(long)]
    pub no_adoption: bool,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a model by maximum (simulated) likelihood.
    Estimate {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        data: PathBuf,
        /// Model-specification TOML.
        #[arg(long, env = "CHOICEKIT_SPEC")]
        spec: Option<PathBuf>,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mode shares and shift matrices over the cost × wait grid.
    Simulate(ScenarioArgs),
    /// Percent change in emissions over the grid.
    Impact {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Emission TOML; defaults to the built-in fleets with toolkit transit defaults.
        #[arg(long, env = "CHOICEKIT_EMISSIONS")]
        emissions: Option<PathBuf>,
    },
    /// Rake sample weights to one-way margins.
    Weight {
        #[arg(long)]
        sample: PathBuf,
        /// Margin TOML; defaults to the bikeable reference margins.
        #[arg(long, env = "CHOICEKIT_TARGETS")]
        targets: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        /// Cap weights at this quantile after fitting.
        #[arg(long)]
        trim: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// k-fold cross-validation and value-of-time ratios.
    Validate {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, env = "CHOICEKIT_SPEC")]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value = "argmax")]
        scoring: ScoringArg,
        /// Estimation result for value-of-time ratios.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify trips as bikeable.
    Bikeability {
        #[arg(long)]
        data: PathBuf,
        /// Estimation result; defaults to the published coefficients.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = choicekit::bikeability::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a seeded synthetic fixture.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Data-generating model for surveys.
        #[arg(long, value_enum, default_value = "mnl")]
        model: ModelArg,
        /// Parameter preset used as truth (default: published values of the model).
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Specification(_) => EXIT_CONFIG,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: format!("I/O error: {e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
