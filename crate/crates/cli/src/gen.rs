use std::path::PathBuf;

use clap::Args;
use pointsynth::generators::{GeneratorSpec, IntensitySource};
use pointsynth::geometry::{format_pattern, write_pattern};
use pointsynth::Window;

use crate::error::{CliError, CliResult};
use crate::util::load_config;

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator: binomial, poisson, poisson_intensity, cox_voronoi, cox_circles,
    /// matern2_hardcore (alias matern2), matern_cluster. Defaults to the config's [generator]
    #[arg(long)]
    kind: Option<String>,
    /// Point count (binomial)
    #[arg(long)]
    n: Option<usize>,
    /// Intensity (poisson), or constant intensity for intensity-driven kinds
    #[arg(long)]
    rate: Option<f64>,
    /// Intensity raster file for intensity-driven kinds
    #[arg(long, value_name = "PATH")]
    intensity_file: Option<PathBuf>,
    /// Expected count of the synthetic smooth intensity
    #[arg(long)]
    synthetic_count: Option<f64>,
    /// Parent intensity (cox_voronoi, cox_circles)
    #[arg(long)]
    parent_rate: Option<f64>,
    /// Points per unit edge length (cox_voronoi)
    #[arg(long)]
    edge_rate: Option<f64>,
    /// Circle radius (cox_circles)
    #[arg(long)]
    r0: Option<f64>,
    /// Points per unit perimeter (cox_circles)
    #[arg(long)]
    perimeter_rate: Option<f64>,
    /// Hard-core distance (matern2_hardcore)
    #[arg(long = "R", alias = "radius", value_name = "R")]
    hardcore_radius: Option<f64>,
    /// Offspring disc radius (matern_cluster)
    #[arg(long)]
    cluster_radius: Option<f64>,
    /// Mean offspring per parent (matern_cluster)
    #[arg(long)]
    mean_offspring: Option<f64>,
    /// Seed [default: the config's seed, else 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Config file; its [generator] table is the starting point
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output pattern file; prints to stdout when absent
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn unused(flag: &str, kind: &str) -> CliError {
    CliError::usage(format!("--{flag} does not apply to generator kind `{kind}`"))
}

impl GenArgs {
    fn spec(&self, base: Option<GeneratorSpec>) -> CliResult<GeneratorSpec> {
        let mut spec = match (&self.kind, base) {
            (Some(k), _) => GeneratorSpec::default_for(k)?,
            (None, Some(b)) => b,
            (None, None) => return Err(CliError::usage("--kind is required (or a [generator] table in --config)")),
        };
        let kind = spec.kind();
        let intensity_override = match (self.rate, &self.intensity_file, self.synthetic_count) {
            (Some(rate), None, None) => Some(IntensitySource::Constant { rate }),
            (None, Some(path), None) => Some(IntensitySource::File { path: path.clone() }),
            (None, None, Some(mean_count)) => Some(IntensitySource::Synthetic { mean_count, resolution: 128, seed: 1 }),
            (None, None, None) => None,
            _ => return Err(CliError::usage("use only one of --rate, --intensity-file, --synthetic-count")),
        };
        let taken = |flag: &str, present: bool, applies: bool| -> CliResult {
            if present && !applies {
                return Err(unused(flag, kind));
            }
            Ok(())
        };
        use GeneratorSpec as G;
        let is = |pred: fn(&G) -> bool| pred(&spec);
        taken("n", self.n.is_some(), is(|s| matches!(s, G::Binomial { .. })))?;
        taken("intensity-file", self.intensity_file.is_some(), is(|s| matches!(s, G::PoissonIntensity { .. } | G::Matern2Hardcore { .. } | G::MaternCluster { .. })))?;
        taken("synthetic-count", self.synthetic_count.is_some(), is(|s| matches!(s, G::PoissonIntensity { .. } | G::Matern2Hardcore { .. } | G::MaternCluster { .. })))?;
        taken("rate", self.rate.is_some(), is(|s| matches!(s, G::Poisson { .. } | G::PoissonIntensity { .. } | G::Matern2Hardcore { .. } | G::MaternCluster { .. })))?;
        taken("parent-rate", self.parent_rate.is_some(), is(|s| matches!(s, G::CoxVoronoi { .. } | G::CoxCircles { .. })))?;
        taken("edge-rate", self.edge_rate.is_some(), is(|s| matches!(s, G::CoxVoronoi { .. })))?;
        taken("r0", self.r0.is_some(), is(|s| matches!(s, G::CoxCircles { .. })))?;
        taken("perimeter-rate", self.perimeter_rate.is_some(), is(|s| matches!(s, G::CoxCircles { .. })))?;
        taken("R", self.hardcore_radius.is_some(), is(|s| matches!(s, G::Matern2Hardcore { .. })))?;
        taken("cluster-radius", self.cluster_radius.is_some(), is(|s| matches!(s, G::MaternCluster { .. })))?;
        taken("mean-offspring", self.mean_offspring.is_some(), is(|s| matches!(s, G::MaternCluster { .. })))?;
        match &mut spec {
            G::Binomial { n } => *n = self.n.unwrap_or(*n),
            G::Poisson { rate } => *rate = self.rate.unwrap_or(*rate),
            G::PoissonIntensity { intensity } => {
                if let Some(i) = intensity_override {
                    *intensity = i;
                }
            }
            G::CoxVoronoi { parent_rate, edge_point_rate } => {
                *parent_rate = self.parent_rate.unwrap_or(*parent_rate);
                *edge_point_rate = self.edge_rate.unwrap_or(*edge_point_rate);
            }
            G::CoxCircles { parent_rate, r0, perimeter_point_rate } => {
                *parent_rate = self.parent_rate.unwrap_or(*parent_rate);
                *r0 = self.r0.unwrap_or(*r0);
                *perimeter_point_rate = self.perimeter_rate.unwrap_or(*perimeter_point_rate);
            }
            G::Matern2Hardcore { intensity, radius } => {
                if let Some(i) = intensity_override {
                    *intensity = i;
                }
                *radius = self.hardcore_radius.unwrap_or(*radius);
            }
            G::MaternCluster { intensity, cluster_radius, mean_offspring } => {
                if let Some(i) = intensity_override {
                    *intensity = i;
                }
                *cluster_radius = self.cluster_radius.unwrap_or(*cluster_radius);
                *mean_offspring = self.mean_offspring.unwrap_or(*mean_offspring);
            }
        }
        Ok(spec)
    }
}

pub fn run(args: GenArgs) -> CliResult {
    let (cfg, _) = load_config(args.config.as_deref())?;
    let spec = args.spec(cfg.generator.clone())?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let pattern = spec.sample(&Window::unit(), seed)?;
    log::info!("{}: {} points (seed {seed})", spec.kind(), pattern.len());
    match &args.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                crate::util::create_dir(dir)?;
            }
            write_pattern(&pattern, path).map_err(|e| CliError::Runtime(e.to_string()))?
        }
        None => print!("{}", format_pattern(&pattern)),
    }
    Ok(())
}
