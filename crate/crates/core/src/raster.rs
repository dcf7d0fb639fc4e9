//! Differentiable rasterization of point patterns by periodic Gaussian splatting.
//!
//! Pixel `(ix, iy)` samples the smoothed measure at the grid node
//! `(-s + 2s ix / N, -s + 2s iy / N)`. Images are stored row-major with row 0
//! at the lowest `y`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{parse_finite, parse_header, Point, PointPattern, Window};

/// A real `N x N` image on the periodic window.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelImage {
    n: usize,
    window: Window,
    data: Vec<f64>,
}

impl PixelImage {
    pub fn zeros(n: usize, window: Window) -> Self {
        PixelImage { n, window, data: vec![0.0; n * n] }
    }

    pub fn from_vec(n: usize, window: Window, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::SizeMismatch { expected: n * n, got: data.len() });
        }
        Ok(PixelImage { n, window, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.data[iy * self.n + ix]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        self.data[iy * self.n + ix] = v;
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn dot(&self, other: &PixelImage) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Circular shift: output pixel `(ix + dx, iy + dy)` holds input pixel `(ix, iy)`.
    pub fn shifted(&self, dx: isize, dy: isize) -> PixelImage {
        let n = self.n as isize;
        let mut out = PixelImage::zeros(self.n, self.window);
        for iy in 0..n {
            for ix in 0..n {
                let tx = (ix + dx).rem_euclid(n) as usize;
                let ty = (iy + dy).rem_euclid(n) as usize;
                out.data[ty * self.n + tx] = self.data[(iy * n + ix) as usize];
            }
        }
        out
    }

    /// Text dump in the raster matrix format.
    pub fn to_text(&self) -> String {
        format_matrix(self.n, self.window.s(), &self.data)
    }
}

/// Whether the kernel exponent divides by `2 sigma^2` or literally by `2 sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelExponent {
    #[default]
    Stddev,
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplatConfig {
    pub n: usize,
    pub sigma: f64,
    /// Cut-off radius in units of `sigma`; `None` sums every grid node once
    /// (nearest periodic image), which makes the map smooth everywhere except
    /// on the cut locus at torus distance `s`.
    pub truncation_sigmas: Option<f64>,
    pub kernel: KernelExponent,
}

impl SplatConfig {
    pub fn new(n: usize, sigma: f64) -> Self {
        SplatConfig { n, sigma, truncation_sigmas: Some(4.0), kernel: KernelExponent::Stddev }
    }

    pub fn untruncated(mut self) -> Self {
        self.truncation_sigmas = None;
        self
    }

    /// Smallest admissible width, `s / N`.
    pub fn sigma_min(n: usize, w: &Window) -> f64 {
        w.s() / n as f64
    }

    pub fn validate(&self, w: &Window) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < 4 {
            return Err(Error::invalid(format!("image size {} must be a power of two >= 4", self.n)));
        }
        let min = Self::sigma_min(self.n, w);
        if !(self.sigma.is_finite() && self.sigma >= min * (1.0 - 1e-12)) {
            return Err(Error::invalid(format!(
                "sigma {} below the minimum s/N = {min}",
                self.sigma
            )));
        }
        if let Some(t) = self.truncation_sigmas {
            if !(t > 0.0) {
                return Err(Error::invalid("truncation radius must be positive"));
            }
        }
        Ok(())
    }

    #[inline]
    fn inv_two_var(&self) -> f64 {
        match self.kernel {
            KernelExponent::Stddev => 1.0 / (2.0 * self.sigma * self.sigma),
            KernelExponent::Variance => 1.0 / (2.0 * self.sigma),
        }
    }
}

/// Grid nodes touched by one point, along one axis: `(pixel index, offset node - x)`.
fn axis_support(x: f64, cfg: &SplatConfig, w: &Window, out: &mut Vec<(usize, f64)>) {
    out.clear();
    let n = cfg.n;
    let h = w.side() / n as f64;
    let s = w.s();
    match cfg.truncation_sigmas.map(|t| t * cfg.sigma) {
        Some(r) if r < s => {
            let lo = ((x - r + s) / h).ceil() as i64;
            let hi = ((x + r + s) / h).floor() as i64;
            for i in lo..=hi {
                let node = -s + i as f64 * h;
                out.push((i.rem_euclid(n as i64) as usize, w.wrap(node - x)));
            }
        }
        _ => {
            for i in 0..n {
                let node = -s + i as f64 * h;
                out.push((i, w.wrap(node - x)));
            }
        }
    }
}

/// Walks every (pixel, offset, kernel value) pair contributed by point `x`.
#[inline]
fn for_each_contribution(
    x: Point,
    cfg: &SplatConfig,
    w: &Window,
    xs: &mut Vec<(usize, f64)>,
    ys: &mut Vec<(usize, f64)>,
    mut f: impl FnMut(usize, f64, f64, f64),
) {
    axis_support(x[0], cfg, w, xs);
    axis_support(x[1], cfg, w, ys);
    let c = cfg.inv_two_var();
    let r2 = cfg
        .truncation_sigmas
        .map(|t| (t * cfg.sigma) * (t * cfg.sigma))
        .unwrap_or(f64::INFINITY);
    for &(iy, dy) in ys.iter() {
        let ey = (-dy * dy * c).exp();
        for &(ix, dx) in xs.iter() {
            let d2 = dx * dx + dy * dy;
            if d2 > r2 {
                continue;
            }
            let v = (-dx * dx * c).exp() * ey;
            f(iy * cfg.n + ix, dx, dy, v);
        }
    }
}

/// `image(node) = sum_i exp(-d(node, x_i)^2 / (2 sigma^2))` on the torus.
pub fn splat(p: &PointPattern, cfg: &SplatConfig) -> Result<PixelImage> {
    let w = p.window();
    cfg.validate(&w)?;
    Ok(splat_points(p.points(), &w, cfg))
}

/// Unchecked splat over raw (canonical or not) positions; used inside the optimizer.
pub fn splat_points(points: &[Point], w: &Window, cfg: &SplatConfig) -> PixelImage {
    let mut img = PixelImage::zeros(cfg.n, *w);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &x in points {
        let x = w.wrap_point(x);
        for_each_contribution(x, cfg, w, &mut xs, &mut ys, |idx, _, _, v| img.data[idx] += v);
    }
    img
}

/// Gradient of `<image_grad, splat(p)>` with respect to every point position.
pub fn splat_adjoint(p: &PointPattern, cfg: &SplatConfig, image_grad: &PixelImage) -> Result<Vec<Point>> {
    if image_grad.n() != cfg.n {
        return Err(Error::SizeMismatch { expected: cfg.n, got: image_grad.n() });
    }
    let w = p.window();
    cfg.validate(&w)?;
    Ok(splat_adjoint_points(p.points(), &w, cfg, image_grad))
}

pub fn splat_adjoint_points(
    points: &[Point],
    w: &Window,
    cfg: &SplatConfig,
    image_grad: &PixelImage,
) -> Vec<Point> {
    // d/dx exp(-|node - x|^2 c) = 2c (node - x) exp(...)
    let two_c = 2.0 * cfg.inv_two_var();
    let g = image_grad.data();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    points
        .iter()
        .map(|&x| {
            let x = w.wrap_point(x);
            let mut acc = [0.0, 0.0];
            for_each_contribution(x, cfg, w, &mut xs, &mut ys, |idx, dx, dy, v| {
                let gv = g[idx] * v;
                acc[0] += gv * dx;
                acc[1] += gv * dy;
            });
            [acc[0] * two_c, acc[1] * two_c]
        })
        .collect()
}

pub(crate) fn format_matrix(m: usize, s: f64, data: &[f64]) -> String {
    let mut out = String::with_capacity(m * m * 12);
    let _ = writeln!(out, "# raster v1 M={m} s={s}");
    for row in data.chunks(m) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Parses the raster matrix format; returns `(M, s, row-major values)`.
pub(crate) fn parse_matrix(text: &str, path: &Path) -> Result<(usize, f64, Vec<f64>)> {
    let perr = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
    let (s, m) = parse_header(header, "# raster v1").map_err(|e| perr(1, e))?;
    let m = m.ok_or_else(|| perr(1, "header lacks M=".into()))?;
    let mut data = Vec::with_capacity(m * m);
    let mut rows = 0;
    for (i, line) in lines {
        let before = data.len();
        for tok in line.split(',') {
            data.push(parse_finite(tok).map_err(|e| perr(i + 1, e))?);
        }
        if data.len() - before != m {
            return Err(perr(i + 1, format!("expected {m} values, got {}", data.len() - before)));
        }
        rows += 1;
    }
    if rows != m {
        return Err(perr(1, format!("expected {m} rows, got {rows}")));
    }
    Ok((m, s, data))
}

pub fn write_image(img: &PixelImage, path: &Path) -> Result<()> {
    std::fs::write(path, img.to_text()).map_err(|e| Error::io(path, e))
}

pub fn read_image(path: &Path) -> Result<PixelImage> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (m, s, data) = parse_matrix(&text, path)?;
    PixelImage::from_vec(m, Window::new(s)?, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use rand::Rng as _;

    fn w() -> Window {
        Window::unit()
    }

    fn random_pattern(n: usize, seed: u64) -> PointPattern {
        let mut rng = rng_for(seed, 0);
        PointPattern::new(
            w(),
            (0..n).map(|_| [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn point_on_node_closed_form() {
        let n = 32;
        let h = 1.0 / n as f64;
        let cfg = SplatConfig::new(n, 2.0 * h);
        // node (16, 16) is the origin
        let p = PointPattern::new(w(), vec![[0.0, 0.0]]).unwrap();
        let img = splat(&p, &cfg).unwrap();
        assert!((img.get(16, 16) - 1.0).abs() < 1e-15);
        for (ix, iy) in [(15, 16), (17, 16), (16, 15), (16, 17)] {
            assert!((img.get(ix, iy) - (-0.125f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_pattern_and_sigma_floor() {
        let cfg = SplatConfig::new(16, 1.0 / 32.0);
        let img = splat(&PointPattern::empty(w()), &cfg).unwrap();
        assert!(img.data().iter().all(|&v| v == 0.0));
        let bad = SplatConfig::new(16, 0.9 / 32.0);
        assert!(splat(&PointPattern::empty(w()), &bad).is_err());
    }

    #[test]
    fn corner_point_wraps_symmetrically() {
        let n = 16;
        let cfg = SplatConfig::new(n, 1.5 / n as f64);
        // halfway between node 0 and node N-1 on both axes
        let c = -0.5 - 0.5 / n as f64;
        let p = PointPattern::from_wrapped(w(), vec![[c, c]]).unwrap();
        let img = splat(&p, &cfg).unwrap();
        let corners = [img.get(0, 0), img.get(n - 1, 0), img.get(0, n - 1), img.get(n - 1, n - 1)];
        for v in corners {
            assert!((v - corners[0]).abs() < 1e-14);
        }
        assert!(corners[0] > 0.5);
    }

    #[test]
    fn mass_is_position_independent() {
        let n = 32;
        let cfg = SplatConfig::new(n, 2.0 / n as f64).untruncated();
        let m0 = splat(&random_pattern(1, 1), &cfg).unwrap().sum();
        for seed in 2..10 {
            let m = splat(&random_pattern(1, seed), &cfg).unwrap().sum();
            assert!((m - m0).abs() / m0 < 1e-6, "{m} vs {m0}");
        }
    }

    #[test]
    fn one_pixel_translation_shifts_image() {
        let n = 32;
        let cfg = SplatConfig::new(n, 2.0 / n as f64);
        let p = random_pattern(20, 4);
        let q = PointPattern::from_wrapped(
            w(),
            p.points().iter().map(|x| [x[0] + 1.0 / n as f64, x[1] - 2.0 / n as f64]),
        )
        .unwrap();
        let a = splat(&p, &cfg).unwrap().shifted(1, -2);
        let b = splat(&q, &cfg).unwrap();
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_of_zero_and_self_symmetric() {
        let n = 32;
        let cfg = SplatConfig::new(n, 2.0 / n as f64);
        let p = PointPattern::new(w(), vec![[0.0, 0.0]]).unwrap();
        let g = splat_adjoint(&p, &cfg, &PixelImage::zeros(n, w())).unwrap();
        assert_eq!(g, vec![[0.0, 0.0]]);
        let img = splat(&p, &cfg).unwrap();
        let g = splat_adjoint(&p, &cfg, &img).unwrap();
        assert!(g[0][0].abs() < 1e-8 && g[0][1].abs() < 1e-8);
    }

    /// Central differences of `<G, splat(p)>` against the adjoint.
    fn fd_check(cfg: SplatConfig, seed: u64) -> f64 {
        let n = cfg.n;
        let p = random_pattern(5, seed);
        let mut rng = rng_for(seed, 99);
        let g = PixelImage::from_vec(n, w(), (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap();
        let analytic = splat_adjoint(&p, &cfg, &g).unwrap();
        let h = 1e-5;
        let f = |pts: &[Point]| splat_points(pts, &w(), &cfg).dot(&g);
        let mut worst: f64 = 0.0;
        for i in 0..p.len() {
            for c in 0..2 {
                let mut plus = p.points().to_vec();
                let mut minus = plus.clone();
                plus[i][c] += h;
                minus[i][c] -= h;
                let fd = (f(&plus) - f(&minus)) / (2.0 * h);
                let scale = analytic[i][c].abs().max(1e-3);
                worst = worst.max((fd - analytic[i][c]).abs() / scale);
            }
        }
        worst
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        for seed in 0..6 {
            let cfg = SplatConfig::new(32, 1.5 / 32.0).untruncated();
            let err = fd_check(cfg, seed);
            assert!(err < 1e-6, "seed {seed}: rel err {err}");
        }
    }

    #[test]
    fn raster_text_round_trip() {
        let img = splat(&random_pattern(3, 1), &SplatConfig::new(8, 1.0 / 8.0)).unwrap();
        let back = {
            let (m, s, d) = parse_matrix(&img.to_text(), Path::new("t")).unwrap();
            PixelImage::from_vec(m, Window::new(s).unwrap(), d).unwrap()
        };
        assert_eq!(img, back);
    }
}
