mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Rado numbers, degrees of regularity and parametric bounds via SAT.
#[derive(Debug, Parser)]
#[command(name = "rado", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    /// `internal`, `external:PATH`, or `external` to use $RADO_SAT_SOLVER.
    #[arg(long, default_value = "internal")]
    pub backend: String,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Seed for the internal solver.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute R_k(E).
    Compute {
        #[arg(long)]
        equation: String,
        #[arg(long)]
        colors: u32,
        /// First probe of the bracketing phase.
        #[arg(long)]
        lower: Option<u64>,
        /// First upper probe.
        #[arg(long)]
        upper: Option<u64>,
        /// Give up beyond this n.
        #[arg(long)]
        max_n: Option<u64>,
        /// Force symmetry clauses on or off (default: on for k >= 3).
        #[arg(long)]
        symmetry: Option<bool>,
        /// Also write the unsatisfiable formula as DIMACS.
        #[arg(long)]
        emit_cnf: bool,
        /// Expected value: an integer or `inf`.
        #[arg(long)]
        expect: Option<String>,
        #[arg(long, default_value = "result.json")]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Compute the degree of regularity.
    Dor {
        #[arg(long)]
        equation: String,
        /// Largest k considered.
        #[arg(long, default_value_t = 12)]
        k_cap: u32,
        /// Expected value: an integer or `inf`.
        #[arg(long)]
        expect: Option<String>,
        #[arg(long, default_value = "dor.json")]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Write F_n^k(E) in DIMACS format.
    GenCnf {
        #[arg(long)]
        equation: String,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        colors: u32,
        #[arg(long)]
        no_optional: bool,
        #[arg(long)]
        symmetry: bool,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide a DIMACS file.
    Solve {
        #[arg(long)]
        cnf: PathBuf,
        /// `sat` or `unsat`.
        #[arg(long)]
        expect: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Check a coloring file for monochromatic solutions.
    Verify {
        #[arg(long)]
        equation: String,
        #[arg(long)]
        coloring: PathBuf,
        /// `valid` (default) or `invalid`.
        #[arg(long, default_value = "valid")]
        expect: String,
    },
    /// Build and solve a parametric formula for a family.
    Family {
        /// Name of a shipped family.
        #[arg(long, conflicts_with = "spec")]
        name: Option<String>,
        /// Family spec JSON file.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        colors: u32,
        /// Override the spec's iteration count.
        #[arg(long)]
        max_iterations: Option<usize>,
        /// Parameter assignments to instantiate, e.g. `10` or `17,5`; repeatable.
        #[arg(long = "values")]
        values: Vec<String>,
        /// Also write the ground formula as DIMACS.
        #[arg(long)]
        emit_cnf: bool,
        #[arg(long, default_value = "family.json")]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Recompute shipped table cells and report pass/fail.
    Tables {
        /// Restrict to these table ids; repeatable. `--list` shows them.
        #[arg(long = "table")]
        tables: Vec<String>,
        #[arg(long)]
        list: bool,
        /// Skip cells whose expected value exceeds this.
        #[arg(long, default_value_t = 300)]
        max_n: u64,
        /// Include degree-of-regularity tables.
        #[arg(long)]
        dor: bool,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = "tables.json")]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
}

/// Exit status categories beyond clap's usage error (2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    /// A check failed: `--expect` mismatch, invalid coloring, failed cell.
    CheckFailed,
    /// The solver budget ran out before an answer.
    Inconclusive,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.command {
        Command::Compute { equation, colors, lower, upper, max_n, symmetry, emit_cnf, expect, out, backend } => {
            commands::compute(&equation, colors, lower, upper, max_n, symmetry, emit_cnf, expect.as_deref(), &out, &backend)
        }
        Command::Dor { equation, k_cap, expect, out, backend } => {
            commands::dor(&equation, k_cap, expect.as_deref(), &out, &backend)
        }
        Command::GenCnf { equation, n, colors, no_optional, symmetry, out } => {
            commands::gen_cnf(&equation, n, colors, !no_optional, symmetry, out.as_deref())
        }
        Command::Solve { cnf, expect, out, backend } => commands::solve(&cnf, expect.as_deref(), out.as_deref(), &backend),
        Command::Verify { equation, coloring, expect } => commands::verify(&equation, &coloring, &expect),
        Command::Family { name, spec, colors, max_iterations, values, emit_cnf, out, backend } => commands::family(
            name.as_deref(),
            spec.as_deref(),
            colors,
            max_iterations,
            &values,
            emit_cnf,
            &out,
            &backend,
        ),
        Command::Tables { tables, list, max_n, dor, jobs, out, backend } => {
            commands::tables(&tables, list, max_n, dor, jobs, &out, &backend)
        }
    };
    match run {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(3),
        Ok(Outcome::Inconclusive) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
