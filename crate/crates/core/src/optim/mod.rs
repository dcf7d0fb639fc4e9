//! Synthesis drivers: multiscale particle gradient descent and random search.

pub mod lbfgs;
mod random_search;

use web_time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use random_search::{rs_synthesize, MoveEnergy, NndMoves, RandomSearchOptions, WphMoves};

use crate::descriptors::{GammaSet, GammaVariant};
use crate::energy::{EnergyContext, TraceRow};
use crate::error::{Error, Result};
use crate::geometry::{Point, PointPattern, Window};
use crate::raster::{KernelExponent, SplatConfig};
use crate::rng::{rng_for, stream};
use crate::wavelets::WaveletBank;
use lbfgs::{Control, LbfgsOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineSearch {
    /// Backtracking from step 1 by halving until `f <= f0 + c1 t g.d`.
    #[default]
    Armijo,
}

/// Parameters of a gradient-descent synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    /// Image resolution `N` (power of two).
    pub n: usize,
    /// Number of wavelet scales; `log2(N) - 3` when absent.
    pub j: Option<usize>,
    pub l: usize,
    pub xi0: f64,
    pub gamma: GammaVariant,
    pub multiscale: bool,
    pub iterations_per_stage: usize,
    /// Run only the first `max_stages` widths of the schedule.
    pub max_stages: Option<usize>,
    pub lbfgs_memory: usize,
    pub line_search: LineSearch,
    pub final_blur: bool,
    pub kernel_exponent: KernelExponent,
    /// Splat cut-off in units of sigma; `None` keeps every node.
    pub truncation_sigmas: Option<f64>,
    /// Stop as soon as the relative energy drops to this level.
    pub target_relative_energy: Option<f64>,
    pub seed: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            n: 128,
            j: None,
            l: 8,
            xi0: WaveletBank::DEFAULT_XI0,
            gamma: GammaVariant::Full,
            multiscale: true,
            iterations_per_stage: 100,
            max_stages: None,
            lbfgs_memory: 10,
            line_search: LineSearch::Armijo,
            final_blur: true,
            kernel_exponent: KernelExponent::Stddev,
            truncation_sigmas: Some(4.0),
            target_relative_energy: None,
            seed: 0,
        }
    }
}

impl SynthesisConfig {
    pub fn scales(&self) -> usize {
        self.j.unwrap_or_else(|| WaveletBank::synthesis_scales(self.n))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < 8 {
            return Err(Error::Config(format!("n = {} must be a power of two >= 8", self.n)));
        }
        let max_j = WaveletBank::reconstruction_scales(self.n);
        let j = self.scales();
        if j == 0 || j > max_j {
            return Err(Error::Config(format!("j = {j} must lie in 1..={max_j} for n = {}", self.n)));
        }
        if self.l < 2 {
            return Err(Error::Config(format!("l = {} must be at least 2", self.l)));
        }
        if self.lbfgs_memory == 0 {
            return Err(Error::Config("lbfgs_memory must be at least 1".into()));
        }
        if !(self.xi0 > 0.0 && self.xi0 <= std::f64::consts::PI) {
            return Err(Error::Config(format!("xi0 = {} must lie in (0, pi]", self.xi0)));
        }
        if let Some(t) = self.truncation_sigmas {
            if !(t > 0.0) {
                return Err(Error::Config("truncation_sigmas must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn bank(&self) -> Result<WaveletBank> {
        self.validate()?;
        WaveletBank::new(self.n, self.scales(), self.l, self.xi0)
    }

    pub fn gamma_set(&self) -> GammaSet {
        GammaSet::build(self.scales(), self.l, self.gamma)
    }

    pub fn schedule(&self, w: &Window) -> MultiscaleSchedule {
        let mut s = if self.multiscale {
            MultiscaleSchedule::dyadic(self.n, self.scales(), w)
        } else {
            MultiscaleSchedule { sigmas: vec![SplatConfig::sigma_min(self.n, w)] }
        };
        if let Some(m) = self.max_stages {
            s.sigmas.truncate(m.max(1));
        }
        s
    }

    pub fn splat(&self, sigma: f64) -> SplatConfig {
        SplatConfig { n: self.n, sigma, truncation_sigmas: self.truncation_sigmas, kernel: self.kernel_exponent }
    }
}

/// Splat widths of the successive stages, coarse to fine.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleSchedule {
    pub sigmas: Vec<f64>,
}

impl MultiscaleSchedule {
    /// `sigma_j = (s/N) 2^(J - j - 2)` for `j = 0..J`, floored at `s/N`.
    /// The formula gives `s/(2N)` for the last stage, so the last two
    /// stages both run at the floor.
    pub fn dyadic(n: usize, scales: usize, w: &Window) -> Self {
        let min = SplatConfig::sigma_min(n, w);
        let sigmas = (0..scales)
            .map(|j| (min * 2f64.powi(scales as i32 - j as i32 - 2)).max(min))
            .collect();
        MultiscaleSchedule { sigmas }
    }
}

/// Result of a synthesis run.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub pattern: PointPattern,
    pub trace: Vec<TraceRow>,
    /// Energy evaluations spent (each gradient evaluation counts once).
    pub evaluations: usize,
    /// Evaluations spent when the target relative energy was first reached.
    pub evaluations_to_target: Option<usize>,
}

/// `n` uniform starting positions drawn from the initialization stream.
pub fn initial_points(n: usize, w: &Window, seed: u64) -> Vec<Point> {
    let mut rng = rng_for(seed, stream::INIT);
    (0..n).map(|_| w.wrap_point([rng.random_range(-w.s()..w.s()), rng.random_range(-w.s()..w.s())])).collect()
}

fn flatten(points: &[Point]) -> Vec<f64> {
    points.iter().flat_map(|p| p.iter().copied()).collect()
}

fn unflatten(x: &[f64]) -> Vec<Point> {
    x.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}

/// Multiscale L-BFGS particle descent from a uniform start with as many points as the observation.
pub fn gd_synthesize(observation: &PointPattern, cfg: &SynthesisConfig) -> Result<Synthesis> {
    let start = initial_points(observation.len(), &observation.window(), cfg.seed);
    gd_synthesize_from(observation, start, cfg)
}

pub fn gd_synthesize_from(observation: &PointPattern, start: Vec<Point>, cfg: &SynthesisConfig) -> Result<Synthesis> {
    if observation.is_empty() {
        return Err(Error::invalid("observation is empty"));
    }
    let w = observation.window();
    let bank = cfg.bank()?;
    let gamma = cfg.gamma_set();
    let schedule = cfg.schedule(&w);
    let clock = Instant::now();
    let mut x = flatten(&start);
    let mut trace = Vec::new();
    let mut evaluations = 0;
    let mut evaluations_to_target = None;
    for (stage, &sigma) in schedule.sigmas.iter().enumerate() {
        let ctx = EnergyContext::new(observation, bank.clone(), gamma.clone(), cfg.splat(sigma))?;
        let opts = LbfgsOptions {
            memory: cfg.lbfgs_memory,
            max_iterations: cfg.iterations_per_stage,
            first_step: w.side() / cfg.n as f64,
            ..LbfgsOptions::default()
        };
        let r0 = ctx.energy_and_gradient(&unflatten(&x))?;
        let offset = trace.len();
        trace.push(TraceRow {
            iteration: offset,
            sigma_stage: stage,
            energy: r0.energy,
            relative_energy: r0.relative_energy,
            grad_norm: r0.grad_norm(),
            wall_time_ms: clock.elapsed().as_secs_f64() * 1e3,
        });
        let mut stage_evals = 0usize;
        let target = cfg.target_relative_energy;
        let last_stage = stage + 1 == schedule.sigmas.len();
        let mut reached = false;
        let outcome = lbfgs::minimize(
            x.clone(),
            &opts,
            |xs| {
                stage_evals += 1;
                let r = ctx.energy_and_gradient(&unflatten(xs))?;
                Ok((r.energy, flatten(&r.gradient)))
            },
            |it, value, g| {
                let rel = 2.0 * value / ctx.target().norm_sqr();
                trace.push(TraceRow {
                    iteration: offset + it,
                    sigma_stage: stage,
                    energy: value,
                    relative_energy: rel,
                    grad_norm: g.iter().map(|v| v * v).sum::<f64>().sqrt(),
                    wall_time_ms: clock.elapsed().as_secs_f64() * 1e3,
                });
                if last_stage && target.is_some_and(|t| rel <= t) {
                    reached = true;
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        )?;
        // the reported count includes the stage's initial evaluation
        evaluations += stage_evals + 1;
        if reached && evaluations_to_target.is_none() {
            evaluations_to_target = Some(evaluations);
        }
        x = outcome.x;
    }
    let points: Vec<Point> = unflatten(&x).into_iter().map(|p| w.wrap_point(p)).collect();
    let mut pattern = dedup_pattern(w, points)?;
    if cfg.final_blur {
        pattern = final_blur(&pattern, cfg.n, cfg.seed);
    }
    Ok(Synthesis { pattern, trace, evaluations, evaluations_to_target })
}

/// Builds a pattern from optimizer output; exact coincidences (possible only
/// if two particles were started at the same place) are nudged apart by one ulp.
fn dedup_pattern(w: Window, mut points: Vec<Point>) -> Result<PointPattern> {
    let mut seen = std::collections::HashSet::new();
    for p in points.iter_mut() {
        while !seen.insert([p[0].to_bits(), p[1].to_bits()]) {
            p[0] = w.wrap(p[0] + f64::EPSILON * w.s());
        }
    }
    PointPattern::new(w, points)
}

/// `x - step * grad E(x)` for every point, wrapped to the window.
pub fn gradient_step(ctx: &EnergyContext, points: &[Point], step: f64) -> Result<Vec<Point>> {
    let r = ctx.energy_and_gradient(points)?;
    let w = ctx.window();
    Ok(points.iter().zip(&r.gradient).map(|(p, g)| w.wrap_point([p[0] - step * g[0], p[1] - step * g[1]])).collect())
}

/// Independent uniform displacement of every point in `[-s/N, s/N)^2`.
pub fn final_blur(p: &PointPattern, n: usize, seed: u64) -> PointPattern {
    let w = p.window();
    let half = w.s() / n as f64;
    let mut rng = rng_for(seed, stream::BLUR);
    let moved: Vec<Point> = p
        .points()
        .iter()
        .map(|q| w.wrap_point([q[0] + rng.random_range(-half..half), q[1] + rng.random_range(-half..half)]))
        .collect();
    dedup_pattern(w, moved).expect("wrapped points lie in the window")
}
