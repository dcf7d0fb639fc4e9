//! Finite-difference checks of every hand-written adjoint in the energy chain.

use std::fmt;
use std::str::FromStr;
use web_time::Instant;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::descriptors::{wph_descriptor, wph_descriptor_adjoint};
use crate::energy::EnergyContext;
use crate::error::{Error, Result};
use crate::generators::sample_binomial;
use crate::geometry::{Point, Window};
use crate::optim::SynthesisConfig;
use crate::raster::{splat_adjoint_points, splat_points, PixelImage, SplatConfig};
use crate::rng::{child_seed, rng_for, stream};
use crate::wavelets::WaveletBank;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Rasterizer,
    Descriptor,
    Energy,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Rasterizer, Stage::Descriptor, Stage::Energy];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Rasterizer => "rasterizer",
            Stage::Descriptor => "descriptor",
            Stage::Energy => "energy",
        })
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}` (rasterizer, descriptor, energy)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckOptions {
    pub sizes: Vec<usize>,
    /// Random (pattern, observation) pairs per size.
    pub pairs: usize,
    pub points: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Scales this stage's analytic gradient by 1.01; a negative control.
    pub corrupt: Option<Stage>,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions { sizes: vec![16, 32], pairs: 25, points: 20, tolerance: 1e-4, seed: 0, corrupt: None }
    }
}

impl GradcheckOptions {
    /// One size, few pairs.
    pub fn fast() -> Self {
        GradcheckOptions { sizes: vec![16], pairs: 5, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: Stage,
    pub checks: usize,
    /// Largest `|fd - analytic|` over the largest analytic component, per case.
    pub max_error: f64,
    pub tolerance: f64,
    pub elapsed_ms: f64,
}

impl StageReport {
    pub fn passed(&self) -> bool {
        self.max_error < self.tolerance
    }
}

impl fmt::Display for StageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<10} max_rel_err={:.3e} tol={:.0e} cases={} time={:.0}ms",
            if self.passed() { "PASS" } else { "FAIL" },
            self.stage.to_string(),
            self.max_error,
            self.tolerance,
            self.checks,
            self.elapsed_ms
        )
    }
}

const H: f64 = 1e-5;

fn normalized_error(fd: &[f64], analytic: &[f64]) -> f64 {
    let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    fd.iter().zip(analytic).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

fn point_fd(points: &[Point], w: &Window, f: impl Fn(&[Point]) -> Result<f64>) -> Result<Vec<f64>> {
    let h = H * w.side();
    let mut out = Vec::with_capacity(points.len() * 2);
    for i in 0..points.len() {
        for c in 0..2 {
            let mut plus = points.to_vec();
            plus[i][c] += h;
            let mut minus = points.to_vec();
            minus[i][c] -= h;
            out.push((f(&plus)? - f(&minus)?) / (2.0 * h));
        }
    }
    Ok(out)
}

struct Case {
    n: usize,
    seed: u64,
    points: Vec<Point>,
    observation: crate::PointPattern,
    splat: SplatConfig,
}

fn cases(opts: &GradcheckOptions, cfg: &SynthesisConfig) -> Vec<Case> {
    let w = Window::unit();
    let mut out = Vec::new();
    for &n in &opts.sizes {
        for k in 0..opts.pairs {
            let seed = child_seed(opts.seed, (n * 1000 + k) as u64);
            let count = 2 + (seed % (opts.points.max(2) as u64 - 1)) as usize;
            let points = sample_binomial(count, &w, seed).into_points();
            let observation = sample_binomial(count, &w, seed ^ 0x5a5a);
            // one pixel wide, untruncated so the map is smooth
            let splat = SplatConfig { n, sigma: 2.0 * SplatConfig::sigma_min(n, &w), truncation_sigmas: None, kernel: cfg.kernel_exponent };
            out.push(Case { n, seed, points, observation, splat });
        }
    }
    out
}

fn corrupt(stage: Stage, opts: &GradcheckOptions, grad: &mut [f64]) {
    if opts.corrupt == Some(stage) {
        grad.iter_mut().for_each(|g| *g *= 1.01);
    }
}

fn bank_for(n: usize, cfg: &SynthesisConfig) -> Result<WaveletBank> {
    WaveletBank::new(n, WaveletBank::synthesis_scales(n).max(1), cfg.l, cfg.xi0)
}

fn check_rasterizer(case: &Case, opts: &GradcheckOptions) -> Result<f64> {
    let w = Window::unit();
    let n = case.n;
    let mut rng = rng_for(case.seed, stream::OUTPUTS);
    let g = PixelImage::from_vec(n, w, (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    let mut analytic: Vec<f64> =
        splat_adjoint_points(&case.points, &w, &case.splat, &g).into_iter().flatten().collect();
    corrupt(Stage::Rasterizer, opts, &mut analytic);
    let fd = point_fd(&case.points, &w, |pts| Ok(splat_points(pts, &w, &case.splat).dot(&g)))?;
    Ok(normalized_error(&fd, &analytic))
}

fn check_descriptor(case: &Case, cfg: &SynthesisConfig, opts: &GradcheckOptions) -> Result<f64> {
    let w = Window::unit();
    let bank = bank_for(case.n, cfg)?;
    let gamma = crate::descriptors::GammaSet::build(bank.scales(), cfg.l, cfg.gamma);
    let img = splat_points(&case.points, &w, &case.splat);
    let obs = splat_points(case.observation.points(), &w, &case.splat);
    let means = wph_descriptor(&obs, &bank, &gamma, None)?.means;
    let mut rng = rng_for(case.seed, stream::OUTPUTS);
    let c: Vec<Complex64> =
        (0..gamma.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let objective = |im: &PixelImage| -> Result<f64> {
        let k = wph_descriptor(im, &bank, &gamma, Some(&means))?;
        Ok(c.iter().zip(&k.values).map(|(c, v)| (c.conj() * v).re).sum())
    };
    let grad = wph_descriptor_adjoint(&img, &bank, &gamma, Some(&means), &c)?;
    let n = case.n;
    let mut fd = Vec::new();
    let mut analytic = Vec::new();
    for _ in 0..16 {
        let (ix, iy) = (rng.random_range(0..n), rng.random_range(0..n));
        let h = H * img.data().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let mut plus = img.clone();
        plus.set(ix, iy, img.get(ix, iy) + h);
        let mut minus = img.clone();
        minus.set(ix, iy, img.get(ix, iy) - h);
        fd.push((objective(&plus)? - objective(&minus)?) / (2.0 * h));
        analytic.push(grad.get(ix, iy));
    }
    corrupt(Stage::Descriptor, opts, &mut analytic);
    Ok(normalized_error(&fd, &analytic))
}

fn check_energy(case: &Case, cfg: &SynthesisConfig, opts: &GradcheckOptions) -> Result<f64> {
    let bank = bank_for(case.n, cfg)?;
    let gamma = crate::descriptors::GammaSet::build(bank.scales(), cfg.l, cfg.gamma);
    let ctx = EnergyContext::new(&case.observation, bank, gamma, case.splat)?;
    let mut analytic: Vec<f64> = ctx.energy_and_gradient(&case.points)?.gradient.into_iter().flatten().collect();
    corrupt(Stage::Energy, opts, &mut analytic);
    let fd = point_fd(&case.points, &ctx.window(), |pts| ctx.energy(pts))?;
    Ok(normalized_error(&fd, &analytic))
}

/// Runs the three suites; wavelet angles, `xi0`, kernel and index-set variant come from `cfg`.
pub fn gradcheck(cfg: &SynthesisConfig, opts: &GradcheckOptions) -> Result<Vec<StageReport>> {
    if opts.sizes.iter().any(|&n| !n.is_power_of_two() || n < 8) || opts.pairs == 0 {
        return Err(Error::Config("gradcheck sizes must be powers of two >= 8 and pairs >= 1".into()));
    }
    let cases = cases(opts, cfg);
    let mut reports = Vec::new();
    for stage in Stage::ALL {
        let start = Instant::now();
        let mut worst: f64 = 0.0;
        for case in &cases {
            let err = match stage {
                Stage::Rasterizer => check_rasterizer(case, opts)?,
                Stage::Descriptor => check_descriptor(case, cfg, opts)?,
                Stage::Energy => check_energy(case, cfg, opts)?,
            };
            worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
        }
        reports.push(StageReport {
            stage,
            checks: cases.len(),
            max_error: worst,
            tolerance: opts.tolerance,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(reports)
}
