//! `cfrac`: contextual fraction toolkit on the command line.
//!
//! Data goes to stdout, logs and error reports to stderr. Exit code 1 means
//! the input was malformed or failed validation; 2 means the computation
//! itself could not finish (size guard, solver breakdown, infeasibility).

mod angles;
mod commands;
mod corpus;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use cfrac_core::fraction::BackendChoice;
use cfrac_core::{FractionOptions, SizeLimit};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::{CliError, Printer};

#[derive(Parser, Debug)]
#[command(
    name = "cfrac",
    version,
    about = "Contextual fraction of empirical models"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Arithmetic for the linear programs.
    #[arg(
        long,
        global = true,
        value_enum,
        env = "CFRAC_BACKEND",
        default_value = "auto"
    )]
    pub backend: Backend,
    /// Tolerance for validating float models.
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = positive)]
    pub eps: f64,
    /// Maximum number of global assignments before giving up.
    #[arg(long, global = true)]
    pub size_limit: Option<u128>,
    /// Print floats at full precision instead of six decimals.
    #[arg(long, global = true)]
    pub full_precision: bool,
    /// Worker threads for sweeps and corpora (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output path (a file prefix for `decompose`).
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Backend {
    Auto,
    Float,
    Rational,
}

impl GlobalArgs {
    pub fn fraction_options(&self) -> FractionOptions {
        FractionOptions {
            backend: match self.backend {
                Backend::Auto => BackendChoice::Auto,
                Backend::Float => BackendChoice::Float,
                Backend::Rational => BackendChoice::Rational,
            },
            limit: self.limit(),
            ..FractionOptions::default()
        }
    }

    pub fn limit(&self) -> SizeLimit {
        self.size_limit
            .map_or_else(SizeLimit::default, SizeLimit::with_max_assignments)
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err("must be positive".into()),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a model file: shapes, normalisation, no-signalling.
    Check {
        /// Model file or builtin id (pr-box, chsh, ghz3-mermin, uniform-n2).
        model: String,
    },
    /// Non-contextual and contextual fraction.
    Fraction { model: String },
    /// Witnessing Bell inequality, or the value of a given inequality.
    Bell {
        model: String,
        /// Evaluate this inequality (file or `chsh`) instead of deriving one.
        #[arg(long)]
        inequality: Option<String>,
    },
    /// Split into non-contextual and strongly contextual parts.
    Decompose { model: String },
    /// Combine two models.
    Compose {
        #[arg(value_enum)]
        op: ComposeOp,
        first: String,
        second: String,
        /// Weight of the first model for `mix`.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Models from equatorial measurements on Bell and GHZ states.
    Quantum {
        /// `bell` or `ghz<n>`.
        #[arg(long)]
        state: String,
        /// Two angles shared by every qubit, or two per qubit (`5pi/8` style allowed).
        #[arg(long, conflicts_with = "sweep", allow_hyphen_values = true)]
        angles: Option<String>,
        /// Contextual fraction over a grid of shared angle pairs, as CSV.
        #[arg(long, requires = "grid")]
        sweep: bool,
        /// Grid resolution G; angles run over i*pi/G.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Failure bound for an l2-MBQC computing a Boolean function.
    Mbqc {
        /// MBQC description file; its resource is a path relative to it or a builtin id.
        file: PathBuf,
        /// Truth table in hex, one value per input, ceil(l/4) digits each.
        #[arg(long)]
        function: String,
        /// Compare against linear maps only (no constant term).
        #[arg(long)]
        homogeneous: bool,
    },
    /// Failure bound for a strategy in a constraint-system game.
    Game {
        game: PathBuf,
        /// Model on the game's induced scenario (file or builtin id).
        strategy: String,
    },
    /// Seeded random checks of the core properties.
    Corpus {
        #[arg(long, value_enum)]
        kind: corpus::Kind,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ComposeOp {
    Mix,
    Choice,
    Product,
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let g = &cli.global;
    if let Some(jobs) = g.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let out = Printer::new(g.full_precision);
    match cli.command {
        Command::Check { model } => commands::cmd_check(g, &out, &model),
        Command::Fraction { model } => commands::cmd_fraction(g, &out, &model),
        Command::Bell { model, inequality } => {
            commands::cmd_bell(g, &out, &model, inequality.as_deref())
        }
        Command::Decompose { model } => commands::cmd_decompose(g, &out, &model),
        Command::Compose {
            op,
            first,
            second,
            lambda,
        } => commands::cmd_compose(g, op, &first, &second, lambda),
        Command::Quantum {
            state,
            angles,
            sweep,
            grid,
        } => match (angles, sweep, grid) {
            (Some(a), false, None) => commands::cmd_quantum_model(g, &state, &a),
            (None, true, Some(grid)) => commands::cmd_quantum_sweep(g, &out, &state, grid),
            _ => Err(CliError::Usage(
                "give either --angles or --sweep --grid G".into(),
            )),
        },
        Command::Mbqc {
            file,
            function,
            homogeneous,
        } => commands::cmd_mbqc(g, &out, &file, &function, homogeneous),
        Command::Game { game, strategy } => commands::cmd_game(g, &out, &game, &strategy),
        Command::Corpus { kind, cases, seed } => corpus::cmd_corpus(g, &out, kind, cases, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return CliError::Usage(e.render().to_string()).report(),
    };
    run(cli).unwrap_or_else(|e| e.report())
}
