//! `pointsynth`: generate, synthesize, evaluate and compare planar point patterns.
//!
//! Exit status is 0 on success, 1 on a runtime failure and 2 on a usage or
//! config error. Concurrent runs writing to the same output directory are
//! not supported.

mod compare;
mod error;
mod eval;
mod gen;
mod gradcheck;
mod synth;
mod util;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "pointsynth", version, about = "Point pattern synthesis with wavelet phase harmonics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Log level (error, warn, info, debug)
    #[arg(long, global = true, default_value = "warn")]
    log: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a pattern from a point process model
    Gen(gen::GenArgs),
    /// Synthesize patterns resembling an observation
    Synth(synth::SynthArgs),
    /// Compute spectrum, contact distribution, Euler curve and persistence diagrams
    Eval(eval::EvalArgs),
    /// Persistence-diagram distances and 2-D embedding across groups of patterns
    Compare(compare::CompareArgs),
    /// Finite-difference check of the rasterizer, descriptor and energy gradients
    Gradcheck(gradcheck::GradcheckArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).format_timestamp(None).init();
    let result = match cli.command {
        Command::Gen(a) => gen::run(a),
        Command::Synth(a) => synth::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Compare(a) => compare::run(a),
        Command::Gradcheck(a) => gradcheck::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pointsynth: {e}");
            e.exit_code()
        }
    }
}
