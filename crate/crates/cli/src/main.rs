use std::path::PathBuf;

use bergbep_cli::commands::{self, CliResult, ExitCode, FunctionInput};
use bergbep_cli::schema::{Builtin, GridSpec};
use clap::{Args, Parser, Subcommand};

/// Bounded extremal problems in Bergman and Bergman-Vekua spaces of the unit disc.
///
/// Exit status: 0 success, 1 input or schema error, 2 infeasible constraint, 3 no convergence.
/// Set BERGBEP_LOG to error, info or debug for diagnostics on standard error.
#[derive(Parser)]
#[command(name = "bergbep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the analytic bounded extremal problem.
    SolveBep {
        #[arg(long)]
        problem: PathBuf,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run the eigendecomposition solver and record the coefficient difference.
        #[arg(long)]
        oracle: bool,
    },
    /// Solve the bounded extremal problem in a Bergman-Vekua space.
    SolveFbep {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues of the truncated Toeplitz matrix of a region, as CSV.
    Spectrum {
        /// `disc`, `radial:A`, `annulus:A` or `sector:THETA`; prefix `!` for the complement.
        #[arg(long, allow_hyphen_values = true)]
        region: String,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bergman projection coefficients of a function.
    Project {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, default_value = "32x64")]
        grid: GridSpec,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Teodorescu transform of a function at every node, as CSV.
    Teodorescu {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, default_value = "32x64")]
        grid: GridSpec,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multiplier and errors of the analytic problem over several constraint levels, as CSV.
    LambdaSweep {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        m_values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct FunctionArgs {
    /// JSON file holding a function spec.
    #[arg(long)]
    function: Option<PathBuf>,
    /// `z_bar`, `abs2`, `const:RE[,IM]`, `exp_x:EPS`, `exp_xy:EPS` or `basis:N`.
    #[arg(long)]
    builtin: Option<Builtin>,
}

impl FunctionArgs {
    fn input(self) -> FunctionInput {
        match (self.function, self.builtin) {
            (Some(path), _) => FunctionInput::File(path),
            (None, Some(b)) => FunctionInput::Builtin(b),
            (None, None) => unreachable!("clap requires one of the group"),
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::SolveBep { problem, out, oracle } => commands::solve_bep(&problem, out.as_deref(), oracle),
        Command::SolveFbep { problem, out } => commands::solve_fbep_cmd(&problem, out.as_deref()),
        Command::Spectrum { region, degree, out } => commands::spectrum(&region, degree, out.as_deref()),
        Command::Project { function, grid, degree, out } => {
            commands::project(&function.input(), grid, degree, out.as_deref())
        }
        Command::Teodorescu { function, grid, out } => commands::teodorescu(&function.input(), grid, out.as_deref()),
        Command::LambdaSweep { problem, m_values, out } => commands::lambda_sweep(&problem, &m_values, out.as_deref()),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BERGBEP_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { ExitCode::Input as i32 } else { 0 });
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code as i32);
    }
}
