use std::path::PathBuf;

use clap::Args;
use pointsynth::eval::{diagrams, distance_matrix, mds_csv, mds_embed, mean_block};
use pointsynth::rng::child_seed;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::util::{create_dir, load_config, load_pattern, patterns_in, stem, write_file};

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Directories of pattern files, one per group (at least two)
    #[arg(required = true, value_name = "GROUP_DIR")]
    groups: Vec<PathBuf>,
    /// Comma-separated group names [default: directory names]
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    /// Run config; its [eval] table sets persistence, thinning and dims
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for thinning [default: the config's seed]
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for dist_matrix.csv, mds.csv and summary.json
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn run(args: CompareArgs) -> CliResult {
    if args.groups.len() < 2 {
        return Err(CliError::usage("compare needs at least two group directories"));
    }
    let (mut cfg, original) = load_config(args.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let names: Vec<String> = match &args.labels {
        Some(l) if l.len() != args.groups.len() => {
            return Err(CliError::usage(format!("{} labels for {} groups", l.len(), args.groups.len())))
        }
        Some(l) => l.clone(),
        None => args.groups.iter().map(|g| g.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| g.display().to_string())).collect(),
    };

    let mut labels = Vec::new();
    let mut members = Vec::new();
    let mut all = Vec::new();
    for (g, (dir, name)) in args.groups.iter().zip(&names).enumerate() {
        let files = patterns_in(dir)?;
        if files.is_empty() {
            return Err(CliError::usage(format!("{}: no pattern files", dir.display())));
        }
        let patterns = files.iter().map(|f| load_pattern(f)).collect::<CliResult<Vec<_>>>()?;
        log::info!("group {name}: {} patterns, persistence", patterns.len());
        let pds = diagrams(&patterns, &cfg.eval, child_seed(cfg.seed, g as u64))?;
        let start = all.len();
        members.push((start..start + pds.len()).collect::<Vec<_>>());
        labels.extend(files.iter().map(|f| format!("{name}/{}", stem(f))));
        all.extend(pds);
    }
    let d = distance_matrix(&all, &cfg.eval.dims);
    let coords = mds_embed(&d);

    let out = &args.out_dir;
    create_dir(out)?;
    cfg.echo(original.as_deref(), out).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&out.join("dist_matrix.csv"), d.to_csv(&labels))?;
    write_file(&out.join("mds.csv"), mds_csv(&labels, &coords))?;

    let mut pairs = Vec::new();
    for a in 0..names.len() {
        for b in a + 1..names.len() {
            pairs.push(json!({"a": names[a], "b": names[b], "mean_cross_distance": mean_block(&d, &members[a], &members[b])}));
        }
    }
    let groups: Vec<_> = names
        .iter()
        .zip(&args.groups)
        .zip(&members)
        .map(|((n, dir), m)| json!({"name": n, "dir": dir.display().to_string(), "patterns": m.len()}))
        .collect();
    let summary = json!({
        "command": "compare",
        "seed": cfg.seed,
        "dims": cfg.eval.dims,
        "groups": groups,
        "pairs": pairs,
    });
    write_file(&out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}
