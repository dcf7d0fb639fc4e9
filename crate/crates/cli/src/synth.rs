use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use pointsynth::energy::{format_trace, EnergyContext};
use pointsynth::geometry::format_pattern;
use pointsynth::optim::{gd_synthesize, rs_synthesize, MoveEnergy, NndMoves, RandomSearchOptions, Synthesis, WphMoves};
use pointsynth::rng::child_seed;
use pointsynth::PointPattern;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::util::{create_dir, load_config, load_pattern, write_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Multiscale L-BFGS particle descent on the wavelet phase harmonic energy
    GdWph,
    /// Random search on the nearest-neighbour distance energy
    RsNnd,
    /// Random search on the wavelet phase harmonic energy (finest width)
    RsWph,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::GdWph => "gd-wph",
            Method::RsNnd => "rs-nnd",
            Method::RsWph => "rs-wph",
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Observed pattern file [default: paths.observation from the config]
    #[arg(long)]
    observation: Option<PathBuf>,
    /// Run config (TOML); echoed into the output directory
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "gd-wph")]
    method: Method,
    /// Number of syntheses [default: n_outputs from the config]
    #[arg(long)]
    n_outputs: Option<usize>,
    /// Run seed; output i uses a seed derived from it and i [default: the config's seed]
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: paths.out_dir from the config]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Also write the observation's descriptor vector as descriptors.csv
    #[arg(long)]
    descriptors: bool,
}

pub fn run(args: SynthArgs) -> CliResult {
    let (mut cfg, original) = load_config(args.config.as_deref())?;
    if let Some(n) = args.n_outputs {
        cfg.n_outputs = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(p) = args.observation {
        cfg.paths.observation = Some(p);
    }
    if let Some(d) = args.out_dir {
        cfg.paths.out_dir = Some(d);
    }
    cfg.validate()?;
    let obs_path = cfg.paths.observation.clone().ok_or_else(|| CliError::usage("--observation is required"))?;
    let out_dir = cfg.paths.out_dir.clone().ok_or_else(|| CliError::usage("--out-dir is required"))?;
    let observation = load_pattern(&obs_path)?;
    if observation.is_empty() {
        return Err(CliError::usage(format!("{}: observation has no points", obs_path.display())));
    }
    if observation.window() != pointsynth::Window::unit() {
        log::warn!("observation window side {} (scales are relative to it)", observation.window().side());
    }
    create_dir(&out_dir)?;
    cfg.echo(original.as_deref(), &out_dir).map_err(|e| CliError::Runtime(e.to_string()))?;

    if args.descriptors {
        let ctx = wph_context(&observation, &cfg.synthesis)?;
        let d = ctx.target();
        write_file(&out_dir.join("descriptors.csv"), d.to_csv(ctx.gamma()))?;
    }

    let mut outputs = Vec::new();
    for i in 0..cfg.n_outputs {
        let seed = child_seed(cfg.seed, i as u64);
        let clock = Instant::now();
        let result = synthesize(args.method, &observation, &cfg, seed)?;
        let elapsed = clock.elapsed().as_secs_f64();
        let final_rel = result.trace.last().map(|r| r.relative_energy).unwrap_or(f64::NAN);
        log::info!(
            "{} output {i}: {} points, relative energy {final_rel:.3e}, {} evaluations, {elapsed:.1}s",
            args.method.name(),
            result.pattern.len(),
            result.evaluations
        );
        let pattern_file = format!("synth_{i:03}.txt");
        let trace_file = format!("trace_{i:03}.csv");
        write_file(&out_dir.join(&pattern_file), format_pattern(&result.pattern))?;
        write_file(&out_dir.join(&trace_file), format_trace(&result.trace))?;
        outputs.push(json!({
            "index": i,
            "seed": seed,
            "pattern": pattern_file,
            "trace": trace_file,
            "points": result.pattern.len(),
            "final_relative_energy": finite(final_rel),
            "evaluations": result.evaluations,
            "wall_time_s": elapsed,
        }));
    }
    let summary = json!({
        "command": "synth",
        "method": args.method.name(),
        "observation": obs_path.display().to_string(),
        "observation_points": observation.len(),
        "seed": cfg.seed,
        "outputs": outputs,
    });
    write_file(&out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn finite(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

fn wph_context(observation: &PointPattern, s: &pointsynth::optim::SynthesisConfig) -> CliResult<EnergyContext> {
    let sigma = *s.schedule(&observation.window()).sigmas.last().expect("schedule is non-empty");
    Ok(EnergyContext::new(observation, s.bank()?, s.gamma_set(), s.splat(sigma))?)
}

fn synthesize(method: Method, observation: &PointPattern, cfg: &pointsynth::config::RunConfig, seed: u64) -> CliResult<Synthesis> {
    let rs_opts = RandomSearchOptions { seed, ..cfg.random_search };
    let result = match method {
        Method::GdWph => {
            let mut s = cfg.synthesis.clone();
            s.seed = seed;
            gd_synthesize(observation, &s)
        }
        Method::RsNnd => {
            let mut moves = NndMoves::new(observation, cfg.nnd.clone())?;
            rs_synthesize(observation, &mut moves as &mut dyn MoveEnergy, &rs_opts)
        }
        Method::RsWph => {
            let mut moves = WphMoves::new(wph_context(observation, &cfg.synthesis)?);
            rs_synthesize(observation, &mut moves, &rs_opts)
        }
    };
    result.map_err(|e| match e {
        pointsynth::Error::Config(_) | pointsynth::Error::InvalidParameter(_) => CliError::Usage(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    })
}
