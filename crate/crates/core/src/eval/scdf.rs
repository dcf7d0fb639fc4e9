//! Spherical contact distribution estimated on a regular probe grid.

use crate::error::{Error, Result};
use crate::geometry::{CellGrid, PointPattern};

/// Distance from each probe of an `m x m` grid (cell centres) to the nearest point.
pub fn empty_space_distances(p: &PointPattern, m: usize) -> Result<Vec<f64>> {
    if p.is_empty() {
        return Err(Error::invalid("contact distances of an empty pattern"));
    }
    let w = p.window();
    let grid = CellGrid::with_density(w, p.points(), 2.0);
    let h = w.side() / m as f64;
    let mut out = Vec::with_capacity(m * m);
    for iy in 0..m {
        for ix in 0..m {
            let probe = [-w.s() + (ix as f64 + 0.5) * h, -w.s() + (iy as f64 + 0.5) * h];
            let (_, d2) = grid.nearest(probe, None).expect("pattern is non-empty");
            out.push(d2.sqrt());
        }
    }
    Ok(out)
}

/// `H(r)` = fraction of probes within distance `r` of the pattern.
pub fn scdf(p: &PointPattern, radii: &[f64], probes: usize) -> Result<Vec<f64>> {
    let mut d = empty_space_distances(p, probes)?;
    d.sort_by(f64::total_cmp);
    let total = d.len() as f64;
    Ok(radii.iter().map(|&r| d.partition_point(|&v| v <= r) as f64 / total).collect())
}
