//! `hypctl`: minimal control times and simulations from a TOML problem file.
//!
//! Exit codes: 0 success, 2 parse or validation error, 3 no witness or
//! refusal, 4 numeric failure.

mod commands;
mod specfile;
mod table;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "hypctl", version, about = "Minimal control time of 1-D linear hyperbolic systems")]
struct Cli {
    /// Prefix CSV output with a `# hypctl <version>` comment line.
    #[arg(long, global = true)]
    version_header: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Forward,
    Adjoint,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Canonical form Q L = Q0 of the boundary matrix.
    Canon { spec: PathBuf },
    /// Travel times, T_opt and the comparison times.
    Times {
        spec: PathBuf,
        /// One CSV header and row instead of the key = value block.
        #[arg(long)]
        csv: bool,
    },
    /// Simulate the forward or adjoint system on a grid.
    Simulate {
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "forward")]
        mode: Mode,
        /// Initial (forward) or final (adjoint) state: `x,v1,..,vn`.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Boundary control for forward runs: `t,u1,..,um`.
        #[arg(long)]
        control: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Horizon; overrides `[horizon] t`.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        nt: Option<usize>,
        #[arg(long)]
        nx: Option<usize>,
        /// Write every `stride`-th time level (the last one is always written).
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Observability defect swept over the horizon.
    Gramian {
        spec: PathBuf,
        #[arg(long)]
        tmin: f64,
        #[arg(long)]
        tmax: f64,
        /// Number of intervals; the sweep has `steps + 1` points.
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Final data with vanishing observation below the minimal time.
    Witness {
        spec: PathBuf,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Grid used to check the residual.
        #[arg(long)]
        nx: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = commands::Output {
        header: cli.version_header,
    };
    let result = match cli.command {
        Command::Canon { spec } => commands::canon(&spec),
        Command::Times { spec, csv } => commands::times(&spec, csv, &out),
        Command::Simulate {
            spec,
            mode,
            data,
            control,
            out: path,
            t,
            nt,
            nx,
            stride,
        } => commands::simulate(
            &spec,
            &commands::SimulateArgs {
                mode,
                data,
                control,
                out: path,
                t,
                nt,
                nx,
                stride,
            },
            &out,
        ),
        Command::Gramian {
            spec,
            tmin,
            tmax,
            steps,
            nx,
            out: path,
        } => commands::gramian(&spec, tmin, tmax, steps, nx, path.as_deref(), &out),
        Command::Witness { spec, t, out: path, nx } => commands::witness(&spec, t, nx, path.as_deref(), &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
