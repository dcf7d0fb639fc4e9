use std::path::PathBuf;

use clap::{Args, ValueEnum};
use pointsynth::eval::{curve_csv, diagrams, euler_curve, mean_spectrum, scdf_curve};
use pointsynth::PointPattern;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::util::{create_dir, load_config, load_pattern, write_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Metric {
    /// Radial power spectrum P(k) averaged over patterns -> spectrum.csv
    Spectrum,
    /// Spherical contact distribution H(r) with bootstrap CIs -> scdf.csv
    Scdf,
    /// Euler characteristic of the union of balls with bootstrap CIs -> euler.csv
    Euler,
    /// Persistence diagrams (dims 0 and 1) -> pd.csv, or pd_<i>.csv for several patterns
    Pd,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Pattern files, treated as one group
    #[arg(required = true, value_name = "PATTERN")]
    patterns: Vec<PathBuf>,
    /// Comma-separated metrics
    #[arg(long, value_enum, value_delimiter = ',', default_value = "spectrum,scdf,euler,pd")]
    metrics: Vec<Metric>,
    /// Run config; its [eval] table sets radii, k_max, persistence and bootstrap options
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for thinning and bootstrap resampling [default: the config's seed]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn run(args: EvalArgs) -> CliResult {
    let (mut cfg, original) = load_config(args.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.eval.bootstrap.seed = cfg.seed;
    let patterns: Vec<PointPattern> = args.patterns.iter().map(|p| load_pattern(p)).collect::<CliResult<_>>()?;
    if let Some((i, _)) = patterns.iter().enumerate().find(|(_, p)| p.is_empty()) {
        return Err(CliError::usage(format!("{}: pattern has no points", args.patterns[i].display())));
    }
    let mut metrics = args.metrics.clone();
    metrics.sort();
    metrics.dedup();
    let out = &args.out_dir;
    create_dir(out)?;
    cfg.echo(original.as_deref(), out).map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut summary = serde_json::Map::new();
    summary.insert("command".into(), json!("eval"));
    summary.insert("seed".into(), json!(cfg.seed));
    summary.insert(
        "patterns".into(),
        json!(args.patterns.iter().zip(&patterns).map(|(p, q)| json!({"path": p.display().to_string(), "points": q.len()})).collect::<Vec<_>>()),
    );

    let needs_pd = metrics.iter().any(|m| matches!(m, Metric::Euler | Metric::Pd));
    let pds = if needs_pd {
        log::info!("persistence of {} pattern(s)", patterns.len());
        Some(diagrams(&patterns, &cfg.eval, cfg.seed)?)
    } else {
        None
    };

    for m in &metrics {
        match m {
            Metric::Spectrum => {
                let s = mean_spectrum(&patterns, cfg.eval.k_max)?;
                write_file(&out.join("spectrum.csv"), s.to_csv())?;
                let mean = s.p.iter().sum::<f64>() / s.p.len() as f64;
                summary.insert("spectrum".into(), json!({"file": "spectrum.csv", "k_max": cfg.eval.k_max, "mean_P": mean}));
            }
            Metric::Scdf => {
                let rows = scdf_curve(&patterns, &cfg.eval)?;
                write_file(&out.join("scdf.csv"), curve_csv("H", &rows))?;
                summary.insert("scdf".into(), json!({"file": "scdf.csv", "radii": rows.len()}));
            }
            Metric::Euler => {
                let rows = euler_curve(pds.as_ref().expect("computed above"), &cfg.eval)?;
                write_file(&out.join("euler.csv"), curve_csv("chi", &rows))?;
                summary.insert("euler".into(), json!({"file": "euler.csv", "radii": rows.len()}));
            }
            Metric::Pd => {
                let pds = pds.as_ref().expect("computed above");
                let mut files = Vec::new();
                for (i, pd) in pds.iter().enumerate() {
                    let name = if pds.len() == 1 { "pd.csv".to_string() } else { format!("pd_{i:03}.csv") };
                    write_file(&out.join(&name), pd.to_csv())?;
                    let count = |d: u8| pd.pairs.iter().filter(|p| p.dim == d).count();
                    files.push(json!({"file": name, "dim0": count(0), "dim1": count(1)}));
                }
                summary.insert("pd".into(), json!({"r_cap": cfg.eval.persistence.r_cap, "diagrams": files}));
            }
        }
    }
    write_file(&out.join("summary.json"), serde_json::to_string_pretty(&serde_json::Value::Object(summary))?)?;
    Ok(())
}
