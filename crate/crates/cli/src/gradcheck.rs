use std::path::PathBuf;

use clap::Args;
use pointsynth::gradcheck::{gradcheck, GradcheckOptions, Stage};

use crate::error::{CliError, CliResult};
use crate::util::load_config;

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Run config; its [synthesis] table sets J, L, xi0 and the phase harmonics
    #[arg(long)]
    config: Option<PathBuf>,
    /// Resolution 16 only with 5 pairs
    #[arg(long)]
    fast: bool,
    /// Random (pattern, observation) pairs per resolution [default: 25, or 5 with --fast]
    #[arg(long)]
    pairs: Option<usize>,
    /// Points per random pattern
    #[arg(long)]
    points: Option<usize>,
    /// Maximum relative error
    #[arg(long)]
    tolerance: Option<f64>,
    /// Seed for the random test patterns [default: the config's seed]
    #[arg(long)]
    seed: Option<u64>,
    /// Negative control: scale one stage's analytic gradient by 1.01 (rasterizer, descriptor, energy)
    #[arg(long, value_name = "STAGE")]
    corrupt_stage: Option<String>,
}

pub fn run(args: GradcheckArgs) -> CliResult {
    let (cfg, _) = load_config(args.config.as_deref())?;
    let mut opts = if args.fast { GradcheckOptions::fast() } else { GradcheckOptions::default() };
    if let Some(p) = args.pairs {
        opts.pairs = p;
    }
    if let Some(p) = args.points {
        opts.points = p;
    }
    if let Some(t) = args.tolerance {
        opts.tolerance = t;
    }
    opts.seed = args.seed.unwrap_or(cfg.seed);
    if let Some(s) = &args.corrupt_stage {
        opts.corrupt = Some(s.parse::<Stage>()?);
    }
    if opts.pairs == 0 || opts.points < 2 {
        return Err(CliError::usage("need --pairs >= 1 and --points >= 2"));
    }
    let reports = gradcheck(&cfg.synthesis, &opts)?;
    let mut failed = Vec::new();
    for r in &reports {
        println!("{r}");
        if !r.passed() {
            failed.push(r.stage.to_string());
        }
    }
    if failed.is_empty() {
        println!("PASS all stages");
        Ok(())
    } else {
        Err(CliError::Runtime(format!("gradient check failed at stage(s): {}", failed.join(", "))))
    }
}
