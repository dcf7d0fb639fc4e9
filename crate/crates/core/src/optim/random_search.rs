//! Random search: move one uniformly chosen point to a uniform location and
//! keep the move only if the energy strictly decreases.

use web_time::Instant;

use rand::Rng as _;

use serde::{Deserialize, Serialize};

use super::{initial_points, Synthesis};

use crate::descriptors::{nnd_descriptor, NndConfig, NndEnergy};
use crate::energy::{EnergyContext, TraceRow};
use crate::error::{Error, Result};
use crate::geometry::{Point, PointPattern, Window};
use crate::rng::{rng_for, stream};

/// An energy that supports tentative single-point moves.
pub trait MoveEnergy {
    /// Sets the configuration and returns its energy.
    fn reset(&mut self, points: &[Point]) -> Result<f64>;
    /// Energy after moving point `i` to `to`; the move stays pending.
    fn propose(&mut self, i: usize, to: Point) -> Result<f64>;
    fn accept(&mut self);
    fn reject(&mut self);
    fn points(&self) -> Vec<Point>;
    /// `2 E / |K(obs)|^2`.
    fn relative(&self, energy: f64) -> f64;
}

/// The wavelet phase harmonic energy, recomputed in full for every proposal.
pub struct WphMoves {
    ctx: EnergyContext,
    points: Vec<Point>,
    pending: Option<(usize, Point)>,
}

impl WphMoves {
    pub fn new(ctx: EnergyContext) -> Self {
        WphMoves { ctx, points: Vec::new(), pending: None }
    }
}

impl MoveEnergy for WphMoves {
    fn reset(&mut self, points: &[Point]) -> Result<f64> {
        self.points = points.to_vec();
        self.pending = None;
        self.ctx.energy(&self.points)
    }

    fn propose(&mut self, i: usize, to: Point) -> Result<f64> {
        self.pending = Some((i, self.points[i]));
        self.points[i] = to;
        self.ctx.energy(&self.points)
    }

    fn accept(&mut self) {
        self.pending = None;
    }

    fn reject(&mut self) {
        if let Some((i, old)) = self.pending.take() {
            self.points[i] = old;
        }
    }

    fn points(&self) -> Vec<Point> {
        self.points.clone()
    }

    fn relative(&self, energy: f64) -> f64 {
        2.0 * energy / self.ctx.target().norm_sqr()
    }
}

/// The nearest-neighbour distance energy with incremental updates.
pub struct NndMoves {
    window: Window,
    cfg: NndConfig,
    target: Vec<f64>,
    target_norm2: f64,
    state: Option<NndEnergy>,
}

impl NndMoves {
    pub fn new(observation: &PointPattern, cfg: NndConfig) -> Result<Self> {
        let target = nnd_descriptor(observation, &cfg)?;
        let target_norm2 = target.iter().map(|v| v * v).sum();
        Ok(NndMoves { window: observation.window(), cfg, target, target_norm2, state: None })
    }

    fn state(&mut self) -> &mut NndEnergy {
        self.state.as_mut().expect("reset() must be called first")
    }
}

impl MoveEnergy for NndMoves {
    fn reset(&mut self, points: &[Point]) -> Result<f64> {
        let s = NndEnergy::new(points, self.window, self.target.clone(), self.cfg)?;
        let e = s.energy();
        self.state = Some(s);
        Ok(e)
    }

    fn propose(&mut self, i: usize, to: Point) -> Result<f64> {
        Ok(self.state().propose(i, to))
    }

    fn accept(&mut self) {
        self.state().accept();
    }

    fn reject(&mut self) {
        self.state().reject();
    }

    fn points(&self) -> Vec<Point> {
        self.state.as_ref().map(|s| s.points()).unwrap_or_default()
    }

    fn relative(&self, energy: f64) -> f64 {
        2.0 * energy / self.target_norm2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomSearchOptions {
    pub iterations_per_point: usize,
    /// Stop once this many proposals have been evaluated.
    pub max_evaluations: Option<usize>,
    pub target_relative_energy: Option<f64>,
    pub seed: u64,
}

impl Default for RandomSearchOptions {
    fn default() -> Self {
        RandomSearchOptions { iterations_per_point: 400, max_evaluations: None, target_relative_energy: None, seed: 0 }
    }
}

/// Random search from a uniform start with as many points as the observation.
/// The trace has one row per accepted move (`iteration` counts proposals).
pub fn rs_synthesize(
    observation: &PointPattern,
    energy: &mut dyn MoveEnergy,
    opts: &RandomSearchOptions,
) -> Result<Synthesis> {
    let w = observation.window();
    let n = observation.len();
    if n == 0 {
        return Err(Error::invalid("observation is empty"));
    }
    let clock = Instant::now();
    let start = initial_points(n, &w, opts.seed);
    let mut current = energy.reset(&start)?;
    let row = |iteration: usize, e: f64, energy: &dyn MoveEnergy, clock: &Instant| TraceRow {
        iteration,
        sigma_stage: 0,
        energy: e,
        relative_energy: energy.relative(e),
        grad_norm: f64::NAN,
        wall_time_ms: clock.elapsed().as_secs_f64() * 1e3,
    };
    let mut trace = vec![row(0, current, energy, &clock)];
    let mut rng = rng_for(opts.seed, stream::SEARCH);
    let total = n * opts.iterations_per_point;
    let mut evaluations = 1;
    let mut evaluations_to_target = None;
    let reached = |e: f64, energy: &dyn MoveEnergy| opts.target_relative_energy.is_some_and(|t| energy.relative(e) <= t);
    if reached(current, energy) {
        evaluations_to_target = Some(evaluations);
    }
    for it in 1..=total {
        if evaluations_to_target.is_some() || opts.max_evaluations.is_some_and(|m| evaluations >= m) {
            break;
        }
        let i = rng.random_range(0..n);
        let to = [rng.random_range(-w.s()..w.s()), rng.random_range(-w.s()..w.s())];
        let e = energy.propose(i, w.wrap_point(to))?;
        evaluations += 1;
        if !e.is_finite() {
            return Err(Error::Diverged(format!("energy {e} at proposal {it}")));
        }
        if e < current {
            energy.accept();
            current = e;
            trace.push(row(it, e, energy, &clock));
            if reached(e, energy) {
                evaluations_to_target = Some(evaluations);
            }
        } else {
            energy.reject();
        }
    }
    let pattern = PointPattern::new(w, energy.points())?;
    Ok(Synthesis { pattern, trace, evaluations, evaluations_to_target })
}
