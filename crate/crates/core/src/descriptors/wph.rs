//! Wavelet phase harmonic covariances and their backward pass.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::gamma::{GammaSet, HarmonicField};
use super::harmonic::{phase_harmonic, pullback};
use crate::error::{Error, Result};
use crate::geometry::Window;
use crate::raster::PixelImage;
use crate::wavelets::{Band, WaveletBank};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Covariance values indexed like the entries of a [`GammaSet`], plus the
/// means `v_{lambda,k}` that were subtracted (one per harmonic field).
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorVector {
    pub values: Vec<Complex64>,
    pub means: Vec<Complex64>,
}

impl DescriptorVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `|self - other|^2` over the real embedding.
    pub fn dist_sqr(&self, other: &DescriptorVector) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum()
    }

    /// CSV with header `j,l,k,j2,l2,k2,tau_x,tau_y,re,im`; the low-pass band is written as `j = l = -1`.
    pub fn to_csv(&self, gamma: &GammaSet) -> String {
        let band = |b: Band| match b {
            Band::Wavelet { j, l } => (j as i64, l as i64),
            Band::LowPass => (-1, -1),
        };
        let mut out = String::from("j,l,k,j2,l2,k2,tau_x,tau_y,re,im\n");
        for (e, v) in gamma.entries().iter().zip(&self.values) {
            let (j, l) = band(e.a);
            let (jp, lp) = band(e.b);
            let _ = writeln!(
                out,
                "{j},{l},{},{jp},{lp},{},{},{},{:?},{:?}",
                e.k, e.kp, e.tau[0], e.tau[1], v.re, v.im
            );
        }
        out
    }

    pub fn write_csv(&self, gamma: &GammaSet, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv(gamma)).map_err(|e| Error::io(path, e))
    }
}

/// `(1/N^2) sum_x a(x) conj(b(x - tau))` on the periodic grid.
fn correlate(a: &[Complex64], b: &[Complex64], tau: [i64; 2], n: usize) -> Complex64 {
    let (tx, ty) = (tau[0].rem_euclid(n as i64) as usize, tau[1].rem_euclid(n as i64) as usize);
    let mut acc = ZERO;
    for iy in 0..n {
        let by = (iy + n - ty) % n;
        let arow = &a[iy * n..(iy + 1) * n];
        let brow = &b[by * n..(by + 1) * n];
        if tx == 0 {
            for (x, y) in arow.iter().zip(brow) {
                acc += x * y.conj();
            }
        } else {
            for ix in 0..n {
                acc += arow[ix] * brow[(ix + n - tx) % n].conj();
            }
        }
    }
    acc / (n * n) as f64
}

/// `out(x) += w * src(x + shift)`.
fn add_shifted(out: &mut [Complex64], src: &[Complex64], shift: [i64; 2], w: Complex64, n: usize) {
    let (sx, sy) = (shift[0].rem_euclid(n as i64) as usize, shift[1].rem_euclid(n as i64) as usize);
    for iy in 0..n {
        let ry = (iy + sy) % n;
        let orow = &mut out[iy * n..(iy + 1) * n];
        let srow = &src[ry * n..(ry + 1) * n];
        for ix in 0..n {
            orow[ix] += w * srow[(ix + sx) % n];
        }
    }
}

/// Intermediate fields of one forward evaluation, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct WphForward {
    n: usize,
    window: Window,
    /// Wavelet coefficients per bank filter; `None` for filters no entry uses.
    coeffs: Vec<Option<Vec<Complex64>>>,
    /// `[z]^k - v` per harmonic field.
    centered: Vec<Vec<Complex64>>,
    pub descriptor: DescriptorVector,
}

/// Forward pass. With `reference_means` the harmonic fields are centred by
/// those values (one per field of `gamma`); otherwise by their own spatial means.
pub fn wph_forward(
    img: &PixelImage,
    bank: &WaveletBank,
    gamma: &GammaSet,
    reference_means: Option<&[Complex64]>,
) -> Result<WphForward> {
    let n = bank.n();
    if img.n() != n {
        return Err(Error::SizeMismatch { expected: n, got: img.n() });
    }
    if gamma.scales() != bank.scales() || gamma.angles() != bank.angles() {
        return Err(Error::invalid(format!(
            "covariance set built for J={} L={}, bank has J={} L={}",
            gamma.scales(),
            gamma.angles(),
            bank.scales(),
            bank.angles()
        )));
    }
    if let Some(m) = reference_means {
        if m.len() != gamma.fields().len() {
            return Err(Error::SizeMismatch { expected: gamma.fields().len(), got: m.len() });
        }
    }
    let spec = bank.fft().forward_real(img.data());
    let mut coeffs: Vec<Option<Vec<Complex64>>> = vec![None; bank.len()];
    for f in gamma.fields() {
        let idx = bank.index(f.band);
        if coeffs[idx].is_none() {
            coeffs[idx] = Some(bank.apply_filter(&spec, idx));
        }
    }
    let nn = (n * n) as f64;
    let mut means = Vec::with_capacity(gamma.fields().len());
    let centered: Vec<Vec<Complex64>> = gamma
        .fields()
        .iter()
        .enumerate()
        .map(|(fi, &HarmonicField { band, k })| {
            let z = coeffs[bank.index(band)].as_ref().expect("coefficients computed above");
            let mut f: Vec<Complex64> = z.iter().map(|&v| phase_harmonic(v, k as i32)).collect();
            let mean = match reference_means {
                Some(m) => m[fi],
                None => f.iter().sum::<Complex64>() / nn,
            };
            for v in f.iter_mut() {
                *v -= mean;
            }
            means.push(mean);
            f
        })
        .collect();
    let values = gamma
        .entries()
        .iter()
        .zip(gamma.pairs())
        .map(|(e, &(fa, fb))| correlate(&centered[fa], &centered[fb], e.tau, n))
        .collect();
    Ok(WphForward { n, window: img.window(), coeffs, centered, descriptor: DescriptorVector { values, means } })
}

pub fn wph_descriptor(
    img: &PixelImage,
    bank: &WaveletBank,
    gamma: &GammaSet,
    reference_means: Option<&[Complex64]>,
) -> Result<DescriptorVector> {
    Ok(wph_forward(img, bank, gamma, reference_means)?.descriptor)
}

impl WphForward {
    /// Gradient of `Re <cotangent, K>` with respect to every pixel, where
    /// `<a, b> = sum conj(a_i) b_i`.
    pub fn backward(&self, bank: &WaveletBank, gamma: &GammaSet, cotangent: &[Complex64]) -> Result<PixelImage> {
        let n = self.n;
        if cotangent.len() != gamma.len() {
            return Err(Error::SizeMismatch { expected: gamma.len(), got: cotangent.len() });
        }
        let scale = 1.0 / (n * n) as f64;
        let mut g_field: Vec<Option<Vec<Complex64>>> = vec![None; gamma.fields().len()];
        for ((e, &(fa, fb)), &c) in gamma.entries().iter().zip(gamma.pairs()).zip(cotangent) {
            if c == ZERO {
                continue;
            }
            // dK = (1/N^2) sum_x dA(x) conj(B(x - tau)) + A(x) conj(dB(x - tau))
            let ga = g_field[fa].get_or_insert_with(|| vec![ZERO; n * n]);
            add_shifted(ga, &self.centered[fb], [-e.tau[0], -e.tau[1]], c * scale, n);
            let gb = g_field[fb].get_or_insert_with(|| vec![ZERO; n * n]);
            add_shifted(gb, &self.centered[fa], e.tau, c.conj() * scale, n);
        }
        // The subtracted mean is either constant or the field's own average; in
        // the latter case its derivative term vanishes because every
        // accumulated cotangent above is a shifted copy of a centred field.
        let mut g_band: Vec<Option<Vec<Complex64>>> = vec![None; bank.len()];
        for (fi, g) in g_field.into_iter().enumerate() {
            let Some(g) = g else { continue };
            let HarmonicField { band, k } = gamma.fields()[fi];
            let idx = bank.index(band);
            let z = self.coeffs[idx].as_ref().expect("band computed in forward pass");
            let mean = self.descriptor.means[fi];
            let acc = g_band[idx].get_or_insert_with(|| vec![ZERO; n * n]);
            for (((a, &gv), &zv), &cv) in acc.iter_mut().zip(&g).zip(z).zip(&self.centered[fi]) {
                *a += pullback(gv, zv, cv + mean, k as i32);
            }
        }
        let out = bank.adjoint_complex(&g_band);
        PixelImage::from_vec(n, self.window, out.into_iter().map(|c| c.re).collect())
    }
}

/// Gradient of `Re <cotangent, K(img)>` with respect to the pixels of `img`.
pub fn wph_descriptor_adjoint(
    img: &PixelImage,
    bank: &WaveletBank,
    gamma: &GammaSet,
    reference_means: Option<&[Complex64]>,
    cotangent: &[Complex64],
) -> Result<PixelImage> {
    wph_forward(img, bank, gamma, reference_means)?.backward(bank, gamma, cotangent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::gamma::{GammaEntry, GammaVariant};
    use crate::rng::rng_for;
    use rand::Rng as _;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> PixelImage {
        let mut rng = rng_for(seed, 0);
        let data = (0..n * n).map(|_| StandardNormal.sample(&mut rng)).collect();
        PixelImage::from_vec(n, Window::unit(), data).unwrap()
    }

    fn smooth_blobs(n: usize, seed: u64) -> PixelImage {
        let mut rng = rng_for(seed, 1);
        let mut img = PixelImage::zeros(n, Window::unit());
        for _ in 0..6 {
            let (cx, cy) = (rng.random_range(0.0..n as f64), rng.random_range(0.0..n as f64));
            for iy in 0..n {
                for ix in 0..n {
                    let dx = (ix as f64 - cx + n as f64 / 2.0).rem_euclid(n as f64) - n as f64 / 2.0;
                    let dy = (iy as f64 - cy + n as f64 / 2.0).rem_euclid(n as f64) - n as f64 / 2.0;
                    let v = img.get(ix, iy) + (-(dx * dx + dy * dy) / 3.0).exp();
                    img.set(ix, iy, v);
                }
            }
        }
        img
    }

    fn random_cotangent(len: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = rng_for(seed, 2);
        (0..len).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn zero_image_gives_zero_vector() {
        let bank = WaveletBank::new(32, 2, 4, WaveletBank::DEFAULT_XI0).unwrap();
        let gamma = GammaSet::build(2, 4, GammaVariant::Full);
        let k = wph_descriptor(&PixelImage::zeros(32, Window::unit()), &bank, &gamma, None).unwrap();
        assert_eq!(k.len(), gamma.len());
        assert!(k.values.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn invariant_under_pixel_shifts() {
        let bank = WaveletBank::new(32, 3, 8, WaveletBank::DEFAULT_XI0).unwrap();
        let gamma = GammaSet::build(3, 8, GammaVariant::Full);
        let img = smooth_blobs(32, 3);
        let k0 = wph_descriptor(&img, &bank, &gamma, None).unwrap();
        for (dx, dy) in [(1, 0), (0, 5), (-7, 13), (31, 31)] {
            let k1 = wph_descriptor(&img.shifted(dx, dy), &bank, &gamma, None).unwrap();
            let scale = k0.norm_sqr().sqrt();
            assert!(k0.dist_sqr(&k1).sqrt() < 1e-10 * scale, "shift ({dx},{dy})");
        }
    }

    #[test]
    fn quarter_turn_permutes_angles() {
        let (j, l) = (3, 8);
        let bank = WaveletBank::new(32, j, l, WaveletBank::DEFAULT_XI0).unwrap();
        let gamma = GammaSet::build(j, l, GammaVariant::Full);
        let img = smooth_blobs(32, 5);
        let n = 32;
        let mut rot = PixelImage::zeros(n, Window::unit());
        // (ix, iy) -> (-iy, ix) about the origin node
        for iy in 0..n {
            for ix in 0..n {
                let (rx, ry) = ((n - iy) % n, ix);
                rot.set(rx, ry, img.get(ix, iy));
            }
        }
        let k0 = wph_descriptor(&img, &bank, &gamma, None).unwrap();
        let k1 = wph_descriptor(&rot, &bank, &gamma, None).unwrap();
        let lookup: std::collections::HashMap<GammaEntry, Complex64> =
            gamma.entries().iter().copied().zip(k1.values.iter().copied()).collect();
        let rb = |b: Band| match b {
            Band::Wavelet { j, l } => Band::Wavelet { j, l: bank.rotated_angle(l, 1) },
            Band::LowPass => Band::LowPass,
        };
        let mut matched = 0;
        for (e, v) in gamma.entries().iter().zip(&k0.values) {
            // rotated translation: (tx, ty) -> (-ty, tx)
            let re = GammaEntry { a: rb(e.a), b: rb(e.b), tau: [-e.tau[1], e.tau[0]], ..*e };
            if let Some(w) = lookup.get(&re) {
                assert!((v - w).norm() < 1e-10 * (1.0 + v.norm()), "{e:?}");
                matched += 1;
            }
        }
        assert_eq!(matched, gamma.len());
    }

    #[test]
    fn white_noise_disjoint_bands_are_uncorrelated() {
        let n = 32;
        let bank = WaveletBank::new(n, 3, 8, WaveletBank::DEFAULT_XI0).unwrap();
        // opposite orientations live on opposite frequency half-planes
        let a = Band::Wavelet { j: 1, l: 0 };
        let b = Band::Wavelet { j: 1, l: 4 };
        let fa = bank.filter(bank.index(a));
        let fb = bank.filter(bank.index(b));
        assert!(fa.iter().zip(fb).all(|(x, y)| x * y == 0.0));
        let entries = vec![
            GammaEntry { a, k: 1, b, kp: 1, tau: [0, 0] },
            GammaEntry { a, k: 1, b: a, kp: 1, tau: [0, 0] },
            GammaEntry { a: b, k: 1, b, kp: 1, tau: [0, 0] },
        ];
        let gamma = GammaSet::from_entries(3, 8, entries);
        for seed in 0..100 {
            let k = wph_descriptor(&noise(n, seed), &bank, &gamma, None).unwrap();
            let bound = 5.0 / (n * n) as f64 * (k.values[1].re * k.values[2].re).sqrt() * n as f64;
            assert!(k.values[0].norm() < bound, "seed {seed}: {} vs {bound}", k.values[0].norm());
        }
    }

    fn fd_check(img: &PixelImage, bank: &WaveletBank, gamma: &GammaSet, means: Option<&[Complex64]>, seed: u64) {
        let c = random_cotangent(gamma.len(), seed);
        let objective = |im: &PixelImage| {
            let k = wph_descriptor(im, bank, gamma, means).unwrap();
            c.iter().zip(&k.values).map(|(c, v)| (c.conj() * v).re).sum::<f64>()
        };
        let grad = wph_descriptor_adjoint(img, bank, gamma, means, &c).unwrap();
        let mut rng = rng_for(seed, 3);
        let n = img.n();
        let h = 1e-5;
        for _ in 0..20 {
            let (ix, iy) = (rng.random_range(0..n), rng.random_range(0..n));
            let mut plus = img.clone();
            plus.set(ix, iy, img.get(ix, iy) + h);
            let mut minus = img.clone();
            minus.set(ix, iy, img.get(ix, iy) - h);
            let fd = (objective(&plus) - objective(&minus)) / (2.0 * h);
            let an = grad.get(ix, iy);
            let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-3);
            assert!(err < 1e-5, "pixel ({ix},{iy}): fd {fd} analytic {an}");
        }
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        let n = 32;
        let bank = WaveletBank::new(n, 3, 8, WaveletBank::DEFAULT_XI0).unwrap();
        let gamma = GammaSet::build(3, 8, GammaVariant::Full);
        let img = smooth_blobs(n, 11);
        fd_check(&img, &bank, &gamma, None, 1);
        let obs = smooth_blobs(n, 12);
        let means = wph_descriptor(&obs, &bank, &gamma, None).unwrap().means;
        fd_check(&img, &bank, &gamma, Some(&means), 2);
    }

    #[test]
    fn zero_cotangent_gives_zero_gradient() {
        let bank = WaveletBank::new(16, 2, 4, WaveletBank::DEFAULT_XI0).unwrap();
        let gamma = GammaSet::build(2, 4, GammaVariant::Full);
        let c = vec![ZERO; gamma.len()];
        let g = wph_descriptor_adjoint(&noise(16, 1), &bank, &gamma, None, &c).unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn second_order_gradient_matches_quadratic_form() {
        // Re <c, K(x)> is a real quadratic form x^T Q x; recover the symmetric
        // Q by polarization from forward evaluations only, then grad = 2 Q x.
        let n = 8;
        let bank = WaveletBank::new(n, 1, 4, WaveletBank::DEFAULT_XI0).unwrap();
        let gamma = GammaSet::build(1, 4, GammaVariant::SecondOrder);
        let c = random_cotangent(gamma.len(), 9);
        let q = |im: &PixelImage| {
            let k = wph_descriptor(im, &bank, &gamma, None).unwrap();
            c.iter().zip(&k.values).map(|(c, v)| (c.conj() * v).re).sum::<f64>()
        };
        let basis = |i: usize| {
            let mut e = PixelImage::zeros(n, Window::unit());
            e.data_mut()[i] = 1.0;
            e
        };
        let nn = n * n;
        let diag: Vec<f64> = (0..nn).map(|i| q(&basis(i))).collect();
        let mut qm = vec![0.0; nn * nn];
        for i in 0..nn {
            qm[i * nn + i] = diag[i];
            for j in (i + 1)..nn {
                let mut e = basis(i);
                e.data_mut()[j] = 1.0;
                let v = 0.5 * (q(&e) - diag[i] - diag[j]);
                qm[i * nn + j] = v;
                qm[j * nn + i] = v;
            }
        }
        let x = noise(n, 4);
        let grad = wph_descriptor_adjoint(&x, &bank, &gamma, None, &c).unwrap();
        let scale = grad.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..nn {
            let oracle: f64 = 2.0 * (0..nn).map(|j| qm[i * nn + j] * x.data()[j]).sum::<f64>();
            assert!((oracle - grad.data()[i]).abs() < 1e-9 * scale, "pixel {i}");
        }
    }

    #[test]
    fn csv_has_one_row_per_entry() {
        let bank = WaveletBank::new(16, 1, 2, WaveletBank::DEFAULT_XI0).unwrap();
        let gamma = GammaSet::build(1, 2, GammaVariant::Full);
        let k = wph_descriptor(&noise(16, 2), &bank, &gamma, None).unwrap();
        let csv = k.to_csv(&gamma);
        assert_eq!(csv.lines().count(), 12);
        assert!(csv.lines().last().unwrap().starts_with("-1,-1,1,-1,-1,1,0,0,"));
    }
}
