//! Group-level metric tables: curves averaged over patterns with bootstrap
//! intervals, and diagram distance matrices.

use crate::config::EvalConfig;
use crate::error::{Error, Result};
use crate::geometry::{random_thin, PointPattern};
use crate::rng::child_seed;

use super::bootstrap::{bootstrap_ci, BootstrapOptions};
use super::mds::DistanceMatrix;
use super::persistence::{euler_characteristic, persistence, PersistenceDiagram};
use super::scdf::scdf;
use super::spectrum::{radial_spectrum, RadialSpectrum};
use super::wasserstein::pd_wasserstein;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub r: f64,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// `r,<name>,ci_lo,ci_hi` rows.
pub fn curve_csv(name: &str, rows: &[CurveRow]) -> String {
    let mut out = format!("r,{name},ci_lo,ci_hi\n");
    for row in rows {
        out.push_str(&format!("{:e},{:e},{:e},{:e}\n", row.r, row.value, row.ci_lo, row.ci_hi));
    }
    out
}

/// Mean over patterns at each radius, with a bootstrap interval when there are
/// at least two patterns.
fn summarize(radii: &[f64], per_pattern: &[Vec<f64>], boot: &BootstrapOptions) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::with_capacity(radii.len());
    for (i, &r) in radii.iter().enumerate() {
        let samples: Vec<f64> = per_pattern.iter().map(|v| v[i]).collect();
        let row = if samples.len() >= 2 {
            let ci = bootstrap_ci(&samples, boot)?;
            CurveRow { r, value: ci.estimate, ci_lo: ci.lo, ci_hi: ci.hi }
        } else {
            CurveRow { r, value: samples[0], ci_lo: samples[0], ci_hi: samples[0] }
        };
        rows.push(row);
    }
    Ok(rows)
}

fn non_empty<T>(items: &[T]) -> Result<()> {
    if items.is_empty() {
        return Err(Error::invalid("no patterns to evaluate"));
    }
    Ok(())
}

/// Per-pattern spectra averaged over the group.
pub fn mean_spectrum(patterns: &[PointPattern], k_max: usize) -> Result<RadialSpectrum> {
    non_empty(patterns)?;
    let mut acc: Option<RadialSpectrum> = None;
    for p in patterns {
        let s = radial_spectrum(p, k_max)?;
        match acc.as_mut() {
            None => acc = Some(s),
            Some(a) => a.p.iter_mut().zip(&s.p).for_each(|(x, y)| *x += y),
        }
    }
    let mut out = acc.expect("non-empty");
    out.p.iter_mut().for_each(|v| *v /= patterns.len() as f64);
    Ok(out)
}

pub fn scdf_curve(patterns: &[PointPattern], cfg: &EvalConfig) -> Result<Vec<CurveRow>> {
    non_empty(patterns)?;
    let radii = cfg.scdf_radii.radii();
    let per: Vec<Vec<f64>> = patterns.iter().map(|p| scdf(p, &radii, cfg.probes)).collect::<Result<_>>()?;
    summarize(&radii, &per, &cfg.bootstrap)
}

pub fn euler_curve(diagrams: &[PersistenceDiagram], cfg: &EvalConfig) -> Result<Vec<CurveRow>> {
    non_empty(diagrams)?;
    let radii = cfg.euler_radii.radii();
    let per: Vec<Vec<f64>> = diagrams.iter().map(|d| euler_characteristic(d, &radii)).collect();
    summarize(&radii, &per, &cfg.bootstrap)
}

/// Diagrams of every pattern, thinning large ones first. Pattern `i` is
/// thinned with `child_seed(seed, i)`.
pub fn diagrams(patterns: &[PointPattern], cfg: &EvalConfig, seed: u64) -> Result<Vec<PersistenceDiagram>> {
    patterns
        .iter()
        .enumerate()
        .map(|(i, p)| match cfg.thin_to {
            Some(t) if p.len() > t => persistence(&random_thin(p, t, child_seed(seed, i as u64))?, &cfg.persistence),
            _ => persistence(p, &cfg.persistence),
        })
        .collect()
}

/// Sum of the per-dimension Wasserstein distances.
pub fn diagram_distance(a: &PersistenceDiagram, b: &PersistenceDiagram, dims: &[u8]) -> f64 {
    dims.iter().map(|&d| pd_wasserstein(a, b, d)).sum()
}

pub fn distance_matrix(diagrams: &[PersistenceDiagram], dims: &[u8]) -> DistanceMatrix {
    DistanceMatrix::from_fn(diagrams.len(), |i, j| diagram_distance(&diagrams[i], &diagrams[j], dims))
}

/// Mean of the `a x b` block of a distance matrix over index sets.
pub fn mean_block(d: &DistanceMatrix, a: &[usize], b: &[usize]) -> f64 {
    let mut total = 0.0;
    for &i in a {
        for &j in b {
            total += d.get(i, j);
        }
    }
    total / (a.len() * b.len()) as f64
}
