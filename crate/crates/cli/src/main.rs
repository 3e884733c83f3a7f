use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;

use report::{CliError, Report};

/// Linear-Gaussian mixed graph models: treks, d-connection and strict causality.
#[derive(Parser, Debug)]
#[command(name = "chaincausal", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Graph file, text or JSON.
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Write the report (or, for `decide`, the witness/certificate) here.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a graph file for structural defects.
    Validate,
    /// Summarize the structure of a graph.
    Analyze,
    /// Decide whether a chain graph is strictly Gaussian causal.
    Decide,
    /// List the treks between two vertices.
    Treks {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Expand a minor of the covariance matrix over trek systems.
    Det {
        #[arg(long, value_delimiter = ',', required = true)]
        rows: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        cols: Vec<String>,
    },
    /// d-connection, witness walk and top nodes for a query.
    Separate {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
    },
    /// Test a covariance matrix against the independences of a chain graph.
    Membership {
        /// Covariance matrix CSV with a header row of labels.
        #[arg(long)]
        cov: PathBuf,
        /// Largest conditioning set to examine.
        #[arg(long)]
        max_cond: Option<usize>,
    },
    /// Compare the model of a mixed graph with a hidden-variable digraph.
    VerifyEquality {
        /// Digraph file; defaults to the clique digraph of --graph.
        #[arg(long)]
        digraph: Option<PathBuf>,
    },
    /// Sign-flip counterexample and determinant identities on a p-cycle.
    NegateDemo {
        #[arg(long, default_value_t = 4)]
        p: usize,
    },
    /// Bound the causality index by exhaustive search.
    Index {
        #[arg(long, default_value_t = 2)]
        h_max: usize,
        #[arg(long, default_value_t = 2_000_000)]
        budget: u64,
        /// Keep hidden vertices with fewer than two children.
        #[arg(long)]
        no_prune: bool,
    },
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let c = &cli.common;
    match &cli.command {
        Command::Validate => commands::validate(c),
        Command::Analyze => commands::analyze(c),
        Command::Decide => commands::decide(c),
        Command::Treks { from, to } => commands::treks(c, from, to),
        Command::Det { rows, cols } => commands::det(c, rows, cols),
        Command::Separate { from, to, given } => commands::separate(c, from, to, given),
        Command::Membership { cov, max_cond } => commands::membership(c, cov, *max_cond),
        Command::VerifyEquality { digraph } => commands::verify_equality(c, digraph.as_deref()),
        Command::NegateDemo { p } => commands::negate_demo(c, *p),
        Command::Index { h_max, budget, no_prune } => commands::index(c, *h_max, *budget, !no_prune),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli).and_then(|r| r.emit(&cli.common)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
