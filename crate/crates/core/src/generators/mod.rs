//! Samplers for the reference point processes. Every sampler is a pure
//! function of its parameters and a 64-bit seed.

mod intensity;
pub mod voronoi;

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

pub use intensity::IntensityRaster;

use crate::error::{Error, Result};
use crate::geometry::{CellGrid, Point, PointPattern, Window};
use crate::rng::{rng_for, stream, Rng};

fn poisson_count(rng: &mut Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as usize
}

fn uniform_point(rng: &mut Rng, w: &Window) -> Point {
    w.wrap_point([rng.random_range(-w.s()..w.s()), rng.random_range(-w.s()..w.s())])
}

fn uniform_points(rng: &mut Rng, w: &Window, n: usize) -> Vec<Point> {
    (0..n).map(|_| uniform_point(rng, w)).collect()
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn radius_in_window(name: &str, r: f64, w: &Window) -> Result<()> {
    positive(name, r)?;
    if r >= w.s() {
        return Err(Error::invalid(format!("{name} must be smaller than s = {}, got {r}", w.s())));
    }
    Ok(())
}

/// `n` i.i.d. uniform points.
pub fn sample_binomial(n: usize, w: &Window, seed: u64) -> PointPattern {
    let mut rng = rng_for(seed, stream::PARENTS);
    PointPattern::from_wrapped(*w, uniform_points(&mut rng, w, n)).expect("uniform draws are distinct")
}

/// Homogeneous Poisson process with `rate` points per unit area.
pub fn sample_poisson(rate: f64, w: &Window, seed: u64) -> Result<PointPattern> {
    positive("rate", rate)?;
    let mut rng = rng_for(seed, stream::PARENTS);
    let n = poisson_count(&mut rng, rate * w.area());
    PointPattern::from_wrapped(*w, uniform_points(&mut rng, w, n))
}

fn inhomogeneous_points(raster: &IntensityRaster, seed: u64, parent_stream: u64) -> Vec<Point> {
    let w = raster.window();
    let max = raster.max();
    let mut rng = rng_for(seed, parent_stream);
    let mut thin = rng_for(seed, stream::THINNING);
    let n = poisson_count(&mut rng, max * w.area());
    uniform_points(&mut rng, &w, n)
        .into_iter()
        .filter(|&p| thin.random::<f64>() * max < raster.value_at(p))
        .collect()
}

/// Inhomogeneous Poisson process by thinning a homogeneous one at rate `max(raster)`.
pub fn sample_poisson_intensity(raster: &IntensityRaster, seed: u64) -> Result<PointPattern> {
    PointPattern::from_wrapped(raster.window(), inhomogeneous_points(raster, seed, stream::PARENTS))
}

/// Points of a linear Poisson process with rate `edge_point_rate` along the
/// edges of the periodic Voronoi tessellation of a Poisson parent process.
pub fn sample_cox_voronoi(parent_rate: f64, edge_point_rate: f64, w: &Window, seed: u64) -> Result<PointPattern> {
    positive("parent_rate", parent_rate)?;
    positive("edge_point_rate", edge_point_rate)?;
    let mut rng = rng_for(seed, stream::PARENTS);
    let np = poisson_count(&mut rng, parent_rate * w.area());
    if np < 3 {
        return Err(Error::Degenerate(format!("Voronoi tessellation needs at least 3 parents, drew {np}")));
    }
    let parents = uniform_points(&mut rng, w, np);
    let mut rng = rng_for(seed, stream::CHILDREN);
    let mut pts = Vec::new();
    for [a, b] in voronoi::periodic_voronoi_edges(&parents, w) {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        for _ in 0..poisson_count(&mut rng, edge_point_rate * len) {
            let t: f64 = rng.random();
            pts.push(w.wrap_point([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]));
        }
    }
    PointPattern::from_wrapped(*w, pts)
}

/// Poisson parents, each carrying `Poisson(perimeter_point_rate 2 pi r0)`
/// points at uniform angles on the circle of radius `r0` around it.
pub fn sample_cox_circles(
    parent_rate: f64,
    r0: f64,
    perimeter_point_rate: f64,
    w: &Window,
    seed: u64,
) -> Result<PointPattern> {
    Ok(cox_circles_with_parents(parent_rate, r0, perimeter_point_rate, w, seed)?.0)
}

/// As [`sample_cox_circles`], also returning the parent of every point.
pub fn cox_circles_with_parents(
    parent_rate: f64,
    r0: f64,
    perimeter_point_rate: f64,
    w: &Window,
    seed: u64,
) -> Result<(PointPattern, Vec<Point>)> {
    positive("parent_rate", parent_rate)?;
    radius_in_window("r0", r0, w)?;
    positive("perimeter_point_rate", perimeter_point_rate)?;
    let mut rng = rng_for(seed, stream::PARENTS);
    let np = poisson_count(&mut rng, parent_rate * w.area());
    let parents = uniform_points(&mut rng, w, np);
    let mut rng = rng_for(seed, stream::CHILDREN);
    let mut pts = Vec::new();
    let mut owner = Vec::new();
    for &c in &parents {
        for _ in 0..poisson_count(&mut rng, perimeter_point_rate * 2.0 * PI * r0) {
            let a = rng.random_range(0.0..2.0 * PI);
            pts.push(w.wrap_point([c[0] + r0 * a.cos(), c[1] + r0 * a.sin()]));
            owner.push(c);
        }
    }
    Ok((PointPattern::from_wrapped(*w, pts)?, owner))
}

/// Proposal points and their marks for the Matérn II construction.
pub fn matern2_proposals(intensity: &IntensityRaster, seed: u64) -> (Vec<Point>, Vec<f64>) {
    let pts = inhomogeneous_points(intensity, seed, stream::PARENTS);
    let mut rng = rng_for(seed, stream::MARKS);
    let marks = (0..pts.len()).map(|_| rng.random()).collect();
    (pts, marks)
}

/// Matérn II retention: a proposal survives unless another proposal within
/// periodic distance `< radius` has a smaller mark (ties broken by index).
pub fn matern2_retained(points: &[Point], marks: &[f64], radius: f64, w: &Window) -> Vec<bool> {
    let grid = CellGrid::new(*w, points, radius.max(w.side() / 1024.0));
    let r2 = radius * radius;
    (0..points.len())
        .map(|i| {
            let mut keep = true;
            grid.for_each_within(points[i], radius, |j, d2| {
                if j != i && d2 < r2 && (marks[j], j) < (marks[i], i) {
                    keep = false;
                }
            });
            keep
        })
        .collect()
}

pub fn sample_matern2_hardcore(intensity: &IntensityRaster, radius: f64, seed: u64) -> Result<PointPattern> {
    positive("hardcore radius", radius)?;
    let w = intensity.window();
    let (pts, marks) = matern2_proposals(intensity, seed);
    let keep = matern2_retained(&pts, &marks, radius, &w);
    PointPattern::from_wrapped(w, pts.into_iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p))
}

/// Offspring of Poisson parents (intensity `parents`), `Poisson(mean_offspring)`
/// per parent, uniform in the periodic disk of radius `cluster_radius`.
pub fn sample_matern_cluster(
    parents: &IntensityRaster,
    cluster_radius: f64,
    mean_offspring: f64,
    seed: u64,
) -> Result<PointPattern> {
    let w = parents.window();
    radius_in_window("cluster_radius", cluster_radius, &w)?;
    if !(mean_offspring.is_finite() && mean_offspring >= 0.0) {
        return Err(Error::invalid(format!("mean_offspring must be non-negative, got {mean_offspring}")));
    }
    let centers = inhomogeneous_points(parents, seed, stream::PARENTS);
    let mut rng = rng_for(seed, stream::CHILDREN);
    let mut pts = Vec::new();
    for &c in &centers {
        for _ in 0..poisson_count(&mut rng, mean_offspring) {
            let r = cluster_radius * rng.random::<f64>().sqrt();
            let a = rng.random_range(0.0..2.0 * PI);
            pts.push(w.wrap_point([c[0] + r * a.cos(), c[1] + r * a.sin()]));
        }
    }
    PointPattern::from_wrapped(w, pts)
}

/// Where an intensity field comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntensitySource {
    Constant { rate: f64 },
    File { path: PathBuf },
    /// [`IntensityRaster::synthetic`] with the given expected count.
    Synthetic { mean_count: f64, resolution: usize, seed: u64 },
}

impl IntensitySource {
    pub fn resolve(&self, w: &Window) -> Result<IntensityRaster> {
        match self {
            IntensitySource::Constant { rate } => {
                positive("rate", *rate)?;
                IntensityRaster::constant(*rate, *w)
            }
            IntensitySource::File { path } => {
                let r = IntensityRaster::read(path)?;
                if r.window() != *w {
                    return Err(Error::invalid(format!(
                        "intensity file has s={}, expected s={}",
                        r.window().s(),
                        w.s()
                    )));
                }
                Ok(r)
            }
            IntensitySource::Synthetic { mean_count, resolution, seed } => {
                IntensityRaster::synthetic(*resolution, *w, *mean_count, *seed)
            }
        }
    }
}

/// A generator and its parameters, as read from config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Binomial { n: usize },
    Poisson { rate: f64 },
    PoissonIntensity { intensity: IntensitySource },
    CoxVoronoi { parent_rate: f64, edge_point_rate: f64 },
    CoxCircles { parent_rate: f64, r0: f64, perimeter_point_rate: f64 },
    #[serde(alias = "matern2")]
    Matern2Hardcore { intensity: IntensitySource, radius: f64 },
    MaternCluster { intensity: IntensitySource, cluster_radius: f64, mean_offspring: f64 },
}

impl GeneratorSpec {
    pub const KINDS: [&'static str; 7] = [
        "binomial",
        "poisson",
        "poisson_intensity",
        "cox_voronoi",
        "cox_circles",
        "matern2_hardcore",
        "matern_cluster",
    ];

    /// Defaults per kind, calibrated on the unit window so the expected counts
    /// are about 1900 (Voronoi), 2500 (small circles), 1700 (hardcore) and
    /// 13000 (cluster).
    pub fn default_for(kind: &str) -> Result<Self> {
        let turbulent = |mean_count: f64| IntensitySource::Synthetic { mean_count, resolution: 128, seed: 1 };
        Ok(match kind {
            "binomial" => GeneratorSpec::Binomial { n: 1000 },
            "poisson" => GeneratorSpec::Poisson { rate: 1000.0 },
            "poisson_intensity" => GeneratorSpec::PoissonIntensity { intensity: turbulent(3800.0) },
            "cox_voronoi" => GeneratorSpec::CoxVoronoi { parent_rate: 100.0, edge_point_rate: 95.0 },
            "cox_circles" => GeneratorSpec::CoxCircles { parent_rate: 80.0, r0: 0.025, perimeter_point_rate: 200.0 },
            "matern2_hardcore" | "matern2" => {
                GeneratorSpec::Matern2Hardcore { intensity: turbulent(MATERN2_PROPOSALS), radius: 0.01 }
            }
            "matern_cluster" => GeneratorSpec::MaternCluster {
                intensity: turbulent(650.0),
                cluster_radius: 0.01,
                mean_offspring: 20.0,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown generator kind `{other}`; expected one of {}",
                    Self::KINDS.join(", ")
                )))
            }
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GeneratorSpec::Binomial { .. } => "binomial",
            GeneratorSpec::Poisson { .. } => "poisson",
            GeneratorSpec::PoissonIntensity { .. } => "poisson_intensity",
            GeneratorSpec::CoxVoronoi { .. } => "cox_voronoi",
            GeneratorSpec::CoxCircles { .. } => "cox_circles",
            GeneratorSpec::Matern2Hardcore { .. } => "matern2_hardcore",
            GeneratorSpec::MaternCluster { .. } => "matern_cluster",
        }
    }

    pub fn sample(&self, w: &Window, seed: u64) -> Result<PointPattern> {
        match self {
            GeneratorSpec::Binomial { n } => Ok(sample_binomial(*n, w, seed)),
            GeneratorSpec::Poisson { rate } => sample_poisson(*rate, w, seed),
            GeneratorSpec::PoissonIntensity { intensity } => sample_poisson_intensity(&intensity.resolve(w)?, seed),
            GeneratorSpec::CoxVoronoi { parent_rate, edge_point_rate } => {
                sample_cox_voronoi(*parent_rate, *edge_point_rate, w, seed)
            }
            GeneratorSpec::CoxCircles { parent_rate, r0, perimeter_point_rate } => {
                sample_cox_circles(*parent_rate, *r0, *perimeter_point_rate, w, seed)
            }
            GeneratorSpec::Matern2Hardcore { intensity, radius } => {
                sample_matern2_hardcore(&intensity.resolve(w)?, *radius, seed)
            }
            GeneratorSpec::MaternCluster { intensity, cluster_radius, mean_offspring } => {
                sample_matern_cluster(&intensity.resolve(w)?, *cluster_radius, *mean_offspring, seed)
            }
        }
    }
}

/// Expected proposal count behind the default hardcore generator.
const MATERN2_PROPOSALS: f64 = 4000.0;
