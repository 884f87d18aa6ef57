//! `tdpf`: solve, check and plan on time-dependent graphs.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 unparsable input or arguments,
//! 3 no convergence within the iteration cap, 4 failed validation.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tdpf::{Fixed, Float};

use commands::{FlowArgs, Numeric};

#[derive(Parser)]
#[command(name = "tdpf", version, about = "Optimal travel-time policies on time-dependent graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the optimal policy and travel-time table.
    Solve {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        num: NumericArgs,
    },
    /// Travel-time table of a fixed policy.
    Evaluate {
        #[arg(long)]
        graph: PathBuf,
        /// Policy or solution JSON.
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        num: NumericArgs,
    },
    /// Follow a solved policy from one state at each departure time.
    Extract {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Start state id.
        #[arg(long)]
        state: u64,
        #[arg(long = "t0", required = true, allow_negative_numbers = true)]
        t0: Vec<f64>,
        /// Also report the best departure in (0, WINDOW].
        #[arg(long)]
        window: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Fixed)]
        mode: Mode,
    },
    /// Compare the table against exhaustive walk enumeration.
    OracleCheck {
        #[arg(long)]
        graph: PathBuf,
        /// Check this solution file instead of solving.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        num: NumericArgs,
    },
    /// Build a flow roadmap, solve it and extract paths.
    PlanFlow {
        #[arg(long)]
        scene: PathBuf,
        /// Departure times; defaults to 0.
        #[arg(long = "t0")]
        t0: Vec<f64>,
        /// Overrides the scene's sampling seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Best departure is searched in (0, WINDOW].
        #[arg(long, default_value_t = 30.0)]
        window: f64,
        /// Flow snapshot resolution per axis.
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        num: NumericArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Exact decimal fixed point.
    Fixed,
    /// f64 with tolerant comparisons.
    Float,
}

#[derive(Debug, Args)]
struct NumericArgs {
    #[arg(long, value_enum, default_value_t = Mode::Fixed)]
    mode: Mode,
    /// Convergence tolerance; defaults to 0 (fixed) or 1e-9 (float).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Iteration cap; defaults to a bound derived from the graph.
    #[arg(long)]
    cap: Option<usize>,
}

impl NumericArgs {
    fn split(&self) -> (Mode, Numeric) {
        (
            self.mode,
            Numeric {
                epsilon: self.epsilon,
                cap: self.cap,
            },
        )
    }
}

macro_rules! by_mode {
    ($mode:expr, $f:ident ( $($arg:expr),* )) => {
        match $mode {
            Mode::Fixed => commands::$f::<Fixed>($($arg),*),
            Mode::Float => commands::$f::<Float>($($arg),*),
        }
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { graph, out, num } => {
            let (mode, num) = num.split();
            by_mode!(mode, solve(graph, out, num))
        }
        Command::Evaluate { graph, policy, out, num } => {
            let (mode, num) = num.split();
            by_mode!(mode, evaluate(graph, policy, out, num))
        }
        Command::Extract {
            graph,
            solution,
            state,
            t0,
            window,
            out,
            mode,
        } => by_mode!(mode, extract(graph, solution, *state, t0, *window, out)),
        Command::OracleCheck {
            graph,
            solution,
            samples,
            seed,
            out,
            num,
        } => {
            let (mode, num) = num.split();
            by_mode!(mode, oracle_check(graph, solution.as_deref(), *samples, *seed, out, num))
        }
        Command::PlanFlow {
            scene,
            t0,
            seed,
            window,
            grid,
            out,
            num,
        } => {
            let (mode, num) = num.split();
            let args = FlowArgs {
                scene,
                t0s: t0,
                seed: *seed,
                window: *window,
                grid: *grid,
                out,
                num,
            };
            by_mode!(mode, plan_flow(args))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.kind.exit_code())
        }
    }
}
