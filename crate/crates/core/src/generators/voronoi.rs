//! Edges of the periodic Voronoi tessellation.
//!
//! Each cell is obtained by clipping the square of side `2s` centred on its
//! parent against the bisectors with the 3 x 3 replicas of every other
//! parent. Edges shared by two cells (or by a cell and its own replica) are
//! deduplicated by their midpoint modulo the window.

use std::collections::HashSet;

use crate::geometry::{Point, Window};

/// Keeps the part of a convex polygon with `(x - m) . n <= 0`.
fn clip(poly: &[Point], m: Point, n: Point) -> Vec<Point> {
    let side = |p: Point| (p[0] - m[0]) * n[0] + (p[1] - m[1]) * n[1];
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Cell of `parents[i]` in coordinates unwrapped around that parent.
pub fn voronoi_cell(parents: &[Point], i: usize, w: &Window) -> Vec<Point> {
    let p = parents[i];
    let s = w.s();
    let mut poly = vec![[p[0] - s, p[1] - s], [p[0] + s, p[1] - s], [p[0] + s, p[1] + s], [p[0] - s, p[1] + s]];
    let mut others: Vec<Point> = Vec::with_capacity(9 * parents.len());
    for (j, &q) in parents.iter().enumerate() {
        if j == i {
            continue;
        }
        let d = w.torus_diff(q, p);
        for a in -1..=1 {
            for b in -1..=1 {
                others.push([d[0] + a as f64 * w.side(), d[1] + b as f64 * w.side()]);
            }
        }
    }
    others.sort_by(|a, b| (a[0] * a[0] + a[1] * a[1]).total_cmp(&(b[0] * b[0] + b[1] * b[1])));
    for d in others {
        let reach2 = poly
            .iter()
            .map(|v| (v[0] - p[0]).powi(2) + (v[1] - p[1]).powi(2))
            .fold(0.0, f64::max);
        let dd = d[0] * d[0] + d[1] * d[1];
        // a bisector farther than every vertex cannot cut the polygon
        if dd > 4.0 * reach2 {
            break;
        }
        let m = [p[0] + 0.5 * d[0], p[1] + 0.5 * d[1]];
        poly = clip(&poly, m, d);
    }
    poly
}

/// All distinct edge segments of the periodic tessellation, each in unwrapped
/// coordinates (endpoints may leave the window; the segment is meant modulo
/// the window).
pub fn periodic_voronoi_edges(parents: &[Point], w: &Window) -> Vec<[Point; 2]> {
    let quanta = 1e9 / w.side();
    let period = (w.side() * quanta).round() as i64;
    let key = |m: Point| {
        let kx = ((m[0] + w.s()) * quanta).round() as i64;
        let ky = ((m[1] + w.s()) * quanta).round() as i64;
        (kx.rem_euclid(period), ky.rem_euclid(period))
    };
    let mut seen: HashSet<(i64, i64)> = HashSet::new();
    let mut edges = Vec::new();
    for i in 0..parents.len() {
        let cell = voronoi_cell(parents, i, w);
        for k in 0..cell.len() {
            let a = cell[k];
            let b = cell[(k + 1) % cell.len()];
            if (a[0] - b[0]).hypot(a[1] - b[1]) < 1e-12 {
                continue;
            }
            let (kx, ky) = key([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            // tolerate one quantum of rounding disagreement between the two cells
            let dup = (-1..=1).any(|dx| {
                (-1..=1).any(|dy| {
                    seen.contains(&((kx + dx).rem_euclid(period), (ky + dy).rem_euclid(period)))
                })
            });
            if !dup {
                seen.insert((kx, ky));
                edges.push([a, b]);
            }
        }
    }
    edges
}

/// Periodic distance from `x` to the segment `[a, b]` taken modulo the window.
pub fn torus_segment_distance(x: Point, seg: [Point; 2], w: &Window) -> f64 {
    let [a, b] = seg;
    let e = [b[0] - a[0], b[1] - a[1]];
    let len2 = e[0] * e[0] + e[1] * e[1];
    let mut best = f64::INFINITY;
    // the nearest image of x relative to a, plus neighbours for long segments
    let d0 = w.torus_diff(x, a);
    for i in -1..=1 {
        for j in -1..=1 {
            let d = [d0[0] + i as f64 * w.side(), d0[1] + j as f64 * w.side()];
            let t = if len2 > 0.0 { ((d[0] * e[0] + d[1] * e[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
            best = best.min((d[0] - t * e[0]).hypot(d[1] - t * e[1]));
        }
    }
    best
}
