//! k-th nearest-neighbour distance distributions and an incrementally
//! updated energy on them for random search.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CellGrid, Point, PointPattern, Window};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NndConfig {
    pub k_max: usize,
    pub r_max: f64,
    pub n_radii: usize,
}

impl Default for NndConfig {
    fn default() -> Self {
        NndConfig { k_max: 16, r_max: 0.125, n_radii: 250 }
    }
}

impl NndConfig {
    pub fn validate(&self, w: &Window) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::invalid("k_max must be at least 1"));
        }
        if !(self.r_max > 0.0 && self.r_max <= w.s()) {
            return Err(Error::invalid(format!("r_max must lie in (0, s], got {}", self.r_max)));
        }
        if self.n_radii == 0 {
            return Err(Error::invalid("n_radii must be at least 1"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.k_max * self.n_radii
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `r_m = r_max m / n_radii` for `m = 1..=n_radii`.
    pub fn radius(&self, m: usize) -> f64 {
        self.r_max * m as f64 / self.n_radii as f64
    }

    /// Smallest `m` with `d <= r_m`, or `n_radii + 1` when `d > r_max`.
    fn bin(&self, d: f64) -> usize {
        let mut m = ((d / self.r_max) * self.n_radii as f64).ceil().max(1.0) as usize;
        if m > self.n_radii + 1 {
            return self.n_radii + 1;
        }
        // repair rounding of the estimate against the exact comparison
        while m > 1 && d <= self.radius(m - 1) {
            m -= 1;
        }
        while m <= self.n_radii && d > self.radius(m) {
            m += 1;
        }
        m
    }
}

fn check_count(n: usize, cfg: &NndConfig) -> Result<()> {
    if n < cfg.k_max + 1 {
        return Err(Error::invalid(format!(
            "nearest-neighbour descriptor needs at least {} points, got {n}",
            cfg.k_max + 1
        )));
    }
    Ok(())
}

/// `D_k(r_m)` for `k = 1..=k_max`, `m = 1..=n_radii`, laid out `k`-major.
pub fn nnd_descriptor(p: &PointPattern, cfg: &NndConfig) -> Result<Vec<f64>> {
    cfg.validate(&p.window())?;
    check_count(p.len(), cfg)?;
    let grid = CellGrid::with_density(p.window(), p.points(), 4.0);
    let mut hist = vec![0usize; cfg.k_max * (cfg.n_radii + 2)];
    for (i, &x) in p.points().iter().enumerate() {
        for (k, (_, d2)) in grid.k_nearest(x, cfg.k_max, Some(i)).into_iter().enumerate() {
            hist[k * (cfg.n_radii + 2) + cfg.bin(d2.sqrt())] += 1;
        }
    }
    Ok(cumulate(&hist, cfg, p.len()))
}

fn cumulate(hist: &[usize], cfg: &NndConfig, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(cfg.len());
    for k in 0..cfg.k_max {
        let row = &hist[k * (cfg.n_radii + 2)..(k + 1) * (cfg.n_radii + 2)];
        let mut acc = row[0];
        for &c in &row[1..=cfg.n_radii] {
            acc += c;
            out.push(acc as f64 / n as f64);
        }
    }
    out
}

fn order_key(d: f64) -> u64 {
    d.to_bits()
}

/// `E = 1/2 |D(pattern) - target|^2`, kept up to date under single-point moves.
///
/// A move of point `p` changes the neighbour lists of `p` itself, of the points
/// that listed `p`, and of the points whose `k_max`-th neighbour is farther than
/// the new position. Only those lists are recomputed.
#[derive(Debug, Clone)]
pub struct NndEnergy {
    cfg: NndConfig,
    window: Window,
    target: Vec<f64>,
    grid: CellGrid,
    /// Ascending `(index, distance)` per point.
    knn: Vec<Vec<(usize, f64)>>,
    /// Points whose neighbour list contains the key.
    listed_by: Vec<Vec<usize>>,
    /// Multiset of every point's `k_max`-th neighbour distance.
    outer: BTreeMap<u64, usize>,
    hist: Vec<usize>,
    energy: f64,
    pending: Option<(usize, Point)>,
}

impl NndEnergy {
    pub fn new(points: &[Point], window: Window, target: Vec<f64>, cfg: NndConfig) -> Result<Self> {
        cfg.validate(&window)?;
        check_count(points.len(), &cfg)?;
        if target.len() != cfg.len() {
            return Err(Error::SizeMismatch { expected: cfg.len(), got: target.len() });
        }
        let n = points.len();
        let mut me = NndEnergy {
            cfg,
            window,
            target,
            grid: CellGrid::with_density(window, points, 4.0),
            knn: vec![Vec::new(); n],
            listed_by: vec![Vec::new(); n],
            outer: BTreeMap::new(),
            hist: vec![0; cfg.k_max * (cfg.n_radii + 2)],
            energy: 0.0,
            pending: None,
        };
        for i in 0..n {
            me.refresh(i);
        }
        me.energy = me.compute_energy();
        Ok(me)
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn descriptor(&self) -> Vec<f64> {
        cumulate(&self.hist, &self.cfg, self.knn.len())
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.grid.len()).map(|i| self.grid.point(i)).collect()
    }

    fn compute_energy(&self) -> f64 {
        0.5 * self.descriptor().iter().zip(&self.target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    fn stride(&self) -> usize {
        self.cfg.n_radii + 2
    }

    fn detach(&mut self, i: usize) {
        let old = std::mem::take(&mut self.knn[i]);
        if let Some(&(_, d)) = old.last() {
            let key = order_key(d);
            let c = self.outer.get_mut(&key).expect("outer distance tracked");
            *c -= 1;
            if *c == 0 {
                self.outer.remove(&key);
            }
        }
        let stride = self.stride();
        for (k, &(j, d)) in old.iter().enumerate() {
            self.hist[k * stride + self.cfg.bin(d)] -= 1;
            let list = &mut self.listed_by[j];
            let pos = list.iter().position(|&x| x == i).expect("reverse link present");
            list.swap_remove(pos);
        }
    }

    /// Recomputes the neighbour list of `i` from the grid.
    fn refresh(&mut self, i: usize) {
        let stride = self.stride();
        let list: Vec<(usize, f64)> = self
            .grid
            .k_nearest(self.grid.point(i), self.cfg.k_max, Some(i))
            .into_iter()
            .map(|(j, d2)| (j, d2.sqrt()))
            .collect();
        for (k, &(j, d)) in list.iter().enumerate() {
            self.hist[k * stride + self.cfg.bin(d)] += 1;
            self.listed_by[j].push(i);
        }
        if let Some(&(_, d)) = list.last() {
            *self.outer.entry(order_key(d)).or_insert(0) += 1;
        }
        self.knn[i] = list;
    }

    fn apply_move(&mut self, p: usize, to: Point) {
        let to = self.window.wrap_point(to);
        let mut affected: Vec<usize> = self.listed_by[p].clone();
        affected.push(p);
        self.grid.move_point(p, to);
        let reach = self.outer.keys().next_back().map_or(0.0, |&b| f64::from_bits(b));
        let knn = &self.knn;
        self.grid.for_each_within(to, reach, |i, d2| {
            if i != p {
                if let Some(&(_, dk)) = knn[i].last() {
                    if d2.sqrt() < dk {
                        affected.push(i);
                    }
                }
            }
        });
        affected.sort_unstable();
        affected.dedup();
        for &i in &affected {
            self.detach(i);
        }
        for &i in &affected {
            self.refresh(i);
        }
        self.energy = self.compute_energy();
    }

    /// Moves point `p` to `to` tentatively and returns the new energy.
    pub fn propose(&mut self, p: usize, to: Point) -> f64 {
        assert!(self.pending.is_none(), "previous proposal not resolved");
        let from = self.grid.point(p);
        self.apply_move(p, to);
        self.pending = Some((p, from));
        self.energy
    }

    pub fn accept(&mut self) {
        self.pending = None;
    }

    pub fn reject(&mut self) {
        if let Some((p, from)) = self.pending.take() {
            self.apply_move(p, from);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use rand::Rng as _;

    fn uniform(n: usize, seed: u64) -> PointPattern {
        let mut rng = rng_for(seed, 0);
        let pts = (0..n).map(|_| [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]).collect();
        PointPattern::new(Window::unit(), pts).unwrap()
    }

    #[test]
    fn two_points_step_function() {
        let p = PointPattern::new(Window::unit(), vec![[0.0, 0.0], [0.05, 0.0]]).unwrap();
        let cfg = NndConfig { k_max: 1, r_max: 0.1, n_radii: 10 };
        let d = nnd_descriptor(&p, &cfg).unwrap();
        for (m, v) in d.iter().enumerate() {
            let r = cfg.radius(m + 1);
            assert_eq!(*v, if r >= 0.05 { 1.0 } else { 0.0 }, "r={r}");
        }
    }

    #[test]
    fn paper_configuration_length() {
        let d = nnd_descriptor(&uniform(100, 1), &NndConfig::default()).unwrap();
        assert_eq!(d.len(), 4000);
    }

    #[test]
    fn monotone_in_r_and_k() {
        let cfg = NndConfig { k_max: 5, r_max: 0.2, n_radii: 40 };
        let d = nnd_descriptor(&uniform(200, 3), &cfg).unwrap();
        for k in 0..cfg.k_max {
            let row = &d[k * cfg.n_radii..(k + 1) * cfg.n_radii];
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
            assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
            if k > 0 {
                let prev = &d[(k - 1) * cfg.n_radii..k * cfg.n_radii];
                assert!(row.iter().zip(prev).all(|(a, b)| a <= b));
            }
        }
    }

    #[test]
    fn invariant_under_rigid_transforms() {
        let p = uniform(150, 4);
        let cfg = NndConfig { k_max: 4, r_max: 0.15, n_radii: 30 };
        let d0 = nnd_descriptor(&p, &cfg).unwrap();
        for t in [
            crate::geometry::RigidTransform::rotation(1),
            crate::geometry::RigidTransform::flip_x(),
            crate::geometry::RigidTransform::translation([0.25, -0.125]),
        ] {
            let d1 = nnd_descriptor(&t.apply(&p), &cfg).unwrap();
            assert_eq!(d0, d1);
        }
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(nnd_descriptor(&uniform(16, 1), &NndConfig::default()).is_err());
    }

    #[test]
    fn incremental_matches_recomputation() {
        let cfg = NndConfig { k_max: 6, r_max: 0.1, n_radii: 50 };
        let target = nnd_descriptor(&uniform(300, 7), &cfg).unwrap();
        let start = uniform(300, 8);
        let mut e = NndEnergy::new(start.points(), Window::unit(), target.clone(), cfg).unwrap();
        let mut rng = rng_for(9, 0);
        for step in 0..300 {
            let p = rng.random_range(0..300);
            let to = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
            let before = e.descriptor();
            e.propose(p, to);
            if step % 2 == 0 {
                e.accept();
            } else {
                e.reject();
                assert_eq!(e.descriptor(), before);
            }
            if step % 25 == 0 {
                let pat = PointPattern::new(Window::unit(), e.points()).unwrap();
                let direct = nnd_descriptor(&pat, &cfg).unwrap();
                assert_eq!(e.descriptor(), direct, "step {step}");
                let energy: f64 =
                    0.5 * direct.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                assert!((e.energy() - energy).abs() <= 1e-15 * energy.max(1.0));
            }
        }
    }
}
