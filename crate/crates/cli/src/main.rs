//! Command-line front end for the rotating-saddle toolkit: trajectory
//! simulation, exact reduction verification, and the stability, residual,
//! and precession experiments. Data files are plain CSV/JSON, formatted so
//! identical invocations produce byte-identical output.

mod commands;
mod io_util;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use saddletrap::analysis::PrecessionFrame;
use saddletrap::dynamics::{Frame, State4};

pub(crate) struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub(crate) fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

/// Settings shared by every subcommand.
pub(crate) struct Globals {
    pub out_dir: PathBuf,
    pub config_path: Option<PathBuf>,
    pub dt_override: Option<f64>,
    pub seedless: bool,
    pub started: Instant,
}

#[derive(Parser)]
#[command(
    name = "saddletrap",
    version,
    about = "Rotating saddle trap: simulation, exact normal-form checks, stability and precession experiments"
)]
struct Cli {
    /// JSON file with simulate settings (flags override it)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for CSV/JSON outputs and the run manifest
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Integration step override for simulate (other commands derive their
    /// own steps from epsilon)
    #[arg(long, global = true, value_name = "STEP")]
    dt: Option<f64>,

    /// Assert that the run uses no randomness (it never does; recorded in
    /// the manifest)
    #[arg(long, global = true)]
    seedless: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum FrameArg {
    Inertial,
    Rotating,
    Averaged,
    Naive,
    FirstNormalForm,
}

impl From<FrameArg> for Frame {
    fn from(f: FrameArg) -> Frame {
        match f {
            FrameArg::Inertial => Frame::Inertial,
            FrameArg::Rotating => Frame::Rotating,
            FrameArg::Averaged => Frame::Averaged,
            FrameArg::Naive => Frame::Naive,
            FrameArg::FirstNormalForm => Frame::FirstNormalForm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum PrecessionFrameArg {
    Averaged,
    Full,
    Naive,
}

impl From<PrecessionFrameArg> for PrecessionFrame {
    fn from(f: PrecessionFrameArg) -> PrecessionFrame {
        match f {
            PrecessionFrameArg::Averaged => PrecessionFrame::Averaged,
            PrecessionFrameArg::Full => PrecessionFrame::Full,
            PrecessionFrameArg::Naive => PrecessionFrame::Naive,
        }
    }
}

fn parse_state(s: &str) -> Result<State4, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!(
            "expected x1,x2,v1,v2 (4 comma-separated numbers), got {} fields",
            parts.len()
        ));
    }
    let mut a = [0.0f64; 4];
    for (slot, part) in a.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| format!("bad number {part:?}: {e}"))?;
    }
    Ok(State4::from_array(a))
}

#[derive(Args)]
struct SimulateCli {
    /// Inverse rotation rate, in (0, 1)
    #[arg(long)]
    eps: Option<f64>,
    /// Integration end time
    #[arg(long)]
    t_end: Option<f64>,
    /// Dynamics to integrate
    #[arg(long, value_enum)]
    frame: Option<FrameArg>,
    /// Initial state as x1,x2,v1,v2
    #[arg(long, value_parser = parse_state)]
    initial: Option<State4>,
    /// Keep every n-th step in the CSV
    #[arg(long)]
    sample_every: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write trajectory.csv
    Simulate(SimulateCli),
    /// Re-derive the exact reduction, check every identity, and certify the
    /// transform obstructions; write verify_report.json
    Verify {
        /// Report path (default <out>/verify_report.json)
        #[arg(long)]
        report: Option<PathBuf>,
        /// Deliberately corrupt T2 before checking (negative control)
        #[arg(long, hide = true)]
        tamper_t2: bool,
    },
    /// Guiding-center residual scaling over a list of epsilons
    Residual {
        /// Comma-separated epsilon values (at least 3, each in (0, 0.5])
        #[arg(long, value_delimiter = ',', required = true)]
        eps_list: Vec<f64>,
        /// Integration horizon per point (at least 20)
        #[arg(long, default_value_t = 50.0)]
        horizon: f64,
        /// Initial state as x1,x2,v1,v2 (default 1,0,0,0)
        #[arg(long, value_parser = parse_state)]
        initial: Option<State4>,
    },
    /// Floquet multiplier sweep and stability threshold bisection
    Stability {
        #[arg(long, default_value_t = 0.5)]
        eps_min: f64,
        #[arg(long, default_value_t = 1.5)]
        eps_max: f64,
        /// Grid points before bisection (at least 16)
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Measure the slow rotation of the orbit ellipse
    Precession {
        /// Inverse rotation rate, in (0, 0.3]
        #[arg(long)]
        eps: f64,
        /// Which dynamics to measure
        #[arg(long, value_enum, default_value = "averaged")]
        frame: PrecessionFrameArg,
        /// Integration span (default: a quarter precession period)
        #[arg(long)]
        horizon: Option<f64>,
    },
}

fn run(cli: Cli, started: Instant) -> Result<(), Failure> {
    let globals = Globals {
        out_dir: cli.out,
        config_path: cli.config,
        dt_override: cli.dt,
        seedless: cli.seedless,
        started,
    };
    std::fs::create_dir_all(&globals.out_dir).map_err(|e| {
        Failure::new(
            1,
            format!("cannot create {}: {e}", globals.out_dir.display()),
        )
    })?;
    if globals.dt_override.is_some() && !matches!(cli.command, Command::Simulate(_)) {
        eprintln!("warning: --dt applies only to simulate; this command derives its own steps");
    }

    match cli.command {
        Command::Simulate(args) => commands::cmd_simulate(
            &globals,
            commands::SimulateArgs {
                eps: args.eps,
                t_end: args.t_end,
                frame: args.frame.map(Frame::from),
                initial: args.initial,
                sample_every: args.sample_every,
            },
        ),
        Command::Verify { report, tamper_t2 } => commands::cmd_verify(&globals, report, tamper_t2),
        Command::Residual {
            eps_list,
            horizon,
            initial,
        } => commands::cmd_residual(&globals, &eps_list, horizon, initial),
        Command::Stability {
            eps_min,
            eps_max,
            n,
        } => commands::cmd_stability(&globals, eps_min, eps_max, n),
        Command::Precession {
            eps,
            frame,
            horizon,
        } => commands::cmd_precession(&globals, eps, frame.into(), horizon),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = Cli::parse();
    match run(cli, started) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
