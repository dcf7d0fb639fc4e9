//! Browser bindings: sample a model, run particle descent a few iterations
//! at a time, and compare radial spectra. Points cross the boundary as flat
//! `[x0, y0, x1, y1, ...]` arrays on the window `[-1/2, 1/2)^2`.

use pointsynth::energy::EnergyContext;
use pointsynth::eval::radial_spectrum;
use pointsynth::generators::GeneratorSpec;
use pointsynth::geometry::Point;
use pointsynth::optim::lbfgs::{minimize, Control, LbfgsOptions};
use pointsynth::optim::{initial_points, SynthesisConfig};
use pointsynth::{PointPattern, Window};
use wasm_bindgen::prelude::*;

fn js(e: pointsynth::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn pattern(flat: &[f64]) -> Result<PointPattern, JsError> {
    if flat.len() % 2 != 0 {
        return Err(JsError::new("odd coordinate count"));
    }
    PointPattern::new(Window::unit(), unflatten(flat)).map_err(js)
}

fn flatten(points: &[Point]) -> Vec<f64> {
    points.iter().flat_map(|p| p.iter().copied()).collect()
}

fn unflatten(x: &[f64]) -> Vec<Point> {
    x.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}

/// Generator kinds accepted by `sample`.
#[wasm_bindgen]
pub fn kinds() -> Vec<String> {
    GeneratorSpec::KINDS.iter().map(|k| k.to_string()).collect()
}

/// One realization of a model with its default parameters.
#[wasm_bindgen]
pub fn sample(kind: &str, seed: u32) -> Result<Vec<f64>, JsError> {
    let spec = GeneratorSpec::default_for(kind).map_err(js)?;
    let p = spec.sample(&Window::unit(), seed as u64).map_err(js)?;
    Ok(flatten(p.points()))
}

/// Radial power spectrum `P(k)` for `k = 1..=k_max`.
#[wasm_bindgen]
pub fn spectrum(points: &[f64], k_max: usize) -> Result<Vec<f64>, JsError> {
    Ok(radial_spectrum(&pattern(points)?, k_max).map_err(js)?.p)
}

/// Multiscale particle descent that can be advanced in small slices so the
/// page stays responsive.
#[wasm_bindgen]
pub struct Synthesizer {
    observation: PointPattern,
    cfg: SynthesisConfig,
    sigmas: Vec<f64>,
    stage: usize,
    stage_iterations: usize,
    ctx: Option<EnergyContext>,
    x: Vec<f64>,
    relative_energy: f64,
}

#[wasm_bindgen]
impl Synthesizer {
    /// `n` is the image resolution (power of two, at least 16).
    #[wasm_bindgen(constructor)]
    pub fn new(observation: &[f64], n: usize, iterations_per_stage: usize, seed: u32) -> Result<Synthesizer, JsError> {
        let observation = pattern(observation)?;
        if observation.is_empty() {
            return Err(JsError::new("observation is empty"));
        }
        let cfg = SynthesisConfig { n, iterations_per_stage: iterations_per_stage.max(1), seed: seed as u64, ..Default::default() };
        cfg.validate().map_err(js)?;
        let w = observation.window();
        let sigmas = cfg.schedule(&w).sigmas;
        let x = flatten(&initial_points(observation.len(), &w, cfg.seed));
        Ok(Synthesizer { observation, cfg, sigmas, stage: 0, stage_iterations: 0, ctx: None, x, relative_energy: f64::NAN })
    }

    /// Runs up to `iterations` descent steps; returns `false` once every stage is done.
    pub fn step(&mut self, iterations: usize) -> Result<bool, JsError> {
        if self.done() {
            return Ok(false);
        }
        if self.ctx.is_none() {
            let sigma = self.sigmas[self.stage];
            let bank = self.cfg.bank().map_err(js)?;
            self.ctx = Some(EnergyContext::new(&self.observation, bank, self.cfg.gamma_set(), self.cfg.splat(sigma)).map_err(js)?);
        }
        let ctx = self.ctx.as_ref().expect("built above");
        let budget = iterations.min(self.cfg.iterations_per_stage - self.stage_iterations).max(1);
        let opts = LbfgsOptions {
            memory: self.cfg.lbfgs_memory,
            max_iterations: budget,
            first_step: 1.0 / self.cfg.n as f64,
            ..LbfgsOptions::default()
        };
        let norm = ctx.target().norm_sqr();
        let mut rel = self.relative_energy;
        let out = minimize(
            self.x.clone(),
            &opts,
            |xs| {
                let r = ctx.energy_and_gradient(&unflatten(xs))?;
                Ok((r.energy, flatten(&r.gradient)))
            },
            |_, value, _| {
                rel = 2.0 * value / norm;
                Control::Continue
            },
        )
        .map_err(js)?;
        let w = self.observation.window();
        self.x = flatten(&unflatten(&out.x).into_iter().map(|p| w.wrap_point(p)).collect::<Vec<_>>());
        self.relative_energy = if out.iterations == 0 { 2.0 * out.value / norm } else { rel };
        self.stage_iterations += budget;
        if self.stage_iterations >= self.cfg.iterations_per_stage || out.stalled {
            self.stage += 1;
            self.stage_iterations = 0;
            self.ctx = None;
        }
        Ok(!self.done())
    }

    pub fn done(&self) -> bool {
        self.stage >= self.sigmas.len()
    }

    /// Index of the current width in the coarse-to-fine schedule.
    pub fn stage(&self) -> usize {
        self.stage.min(self.sigmas.len().saturating_sub(1))
    }

    pub fn stages(&self) -> usize {
        self.sigmas.len()
    }

    /// `2 E / |K(obs)|^2` after the last step (NaN before the first).
    pub fn relative_energy(&self) -> f64 {
        self.relative_energy
    }

    pub fn points(&self) -> Vec<f64> {
        self.x.clone()
    }
}
