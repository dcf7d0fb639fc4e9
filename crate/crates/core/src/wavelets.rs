//! Bump steerable wavelet bank and periodic convolutions in the Fourier domain.
//!
//! Mother wavelet (frequency domain, `omega` in radians per pixel):
//!
//! ```text
//! psi_hat(omega) = beta(|omega|) * alpha(angle(omega))
//! beta(r)      = exp(-(r - xi0)^2 / (xi0^2 - (r - xi0)^2))   for |r - xi0| < xi0
//! alpha(theta) = cos(theta)^(L - 1)                           for |theta| < pi/2
//! ```
//!
//! Both factors are zero outside their supports, so `psi_hat(0) = 0` exactly.
//! The filter at scale `j` and angle index `l` is
//! `psi_hat(2^j r_theta omega)` with `theta = 2 pi l / L`. The low-pass filter
//! is an isotropic Gaussian with standard deviation `xi0 2^-J`.
//!
//! The Nyquist row and column (frequency index `N/2`) are set to zero in every
//! filter. That frequency has no sign, so leaving it in would break the exact
//! covariance of the bank under quarter turns and mirror images of the grid.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::Window;
use crate::raster::PixelImage;

/// Square 2-D FFT on row-major `N x N` buffers. Forward is unnormalized,
/// inverse divides by `N^2`.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({})", self.n)
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    fn transpose(&self, buf: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                buf.swap(i * n + j, j * n + i);
            }
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
        self.transpose(buf);
        self.fwd.process(buf);
        self.transpose(buf);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
        self.transpose(buf);
        self.inv.process(buf);
        self.transpose(buf);
        let scale = 1.0 / (self.n * self.n) as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }
}

/// Index of a filter in a [`WaveletBank`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Band {
    Wavelet { j: usize, l: usize },
    LowPass,
}

/// Signed frequency of FFT bin `k`, in `[-N/2, N/2)`.
#[inline]
pub fn signed_freq(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

#[derive(Debug, Clone)]
pub struct WaveletBank {
    n: usize,
    j: usize,
    l: usize,
    xi0: f64,
    /// `j * L + l` for band-pass filters, `J * L` for the low-pass.
    filters: Vec<Vec<f64>>,
    fft: Fft2,
}

/// Radial bump centred at `xi0`.
fn bump(r: f64, xi0: f64) -> f64 {
    let d = r - xi0;
    if d.abs() < xi0 {
        (-(d * d) / (xi0 * xi0 - d * d)).exp()
    } else {
        0.0
    }
}

pub fn mother_wavelet_hat(omega: [f64; 2], xi0: f64, l: usize) -> f64 {
    let r = omega[0].hypot(omega[1]);
    if r == 0.0 {
        return 0.0;
    }
    // angle measured from the +x axis; the analytic half-plane is omega_x > 0
    let c = omega[0] / r;
    if c <= 0.0 {
        return 0.0;
    }
    bump(r, xi0) * c.powi(l as i32 - 1)
}

impl WaveletBank {
    /// Default central frequency of the mother wavelet, radians per pixel.
    pub const DEFAULT_XI0: f64 = 0.85 * PI;

    pub fn new(n: usize, j: usize, l: usize, xi0: f64) -> Result<Self> {
        if !n.is_power_of_two() || n < 8 {
            return Err(Error::invalid(format!("N = {n} must be a power of two >= 8")));
        }
        let log2n = n.trailing_zeros() as usize;
        if j < 1 || j + 2 > log2n {
            return Err(Error::invalid(format!(
                "J = {j} out of range for N = {n} (need 1 <= J <= log2(N) - 2 = {})",
                log2n.saturating_sub(2)
            )));
        }
        if l < 2 {
            return Err(Error::invalid(format!("L = {l} must be >= 2")));
        }
        if !(xi0 > 0.0 && xi0 <= PI) {
            return Err(Error::invalid(format!("xi0 = {xi0} must lie in (0, pi]")));
        }
        let mut filters = Vec::with_capacity(j * l + 1);
        for jj in 0..j {
            let dil = (1u64 << jj) as f64;
            for ll in 0..l {
                let theta = 2.0 * PI * ll as f64 / l as f64;
                let (st, ct) = theta.sin_cos();
                filters.push(Self::tabulate(n, |w| {
                    let rot = [ct * w[0] - st * w[1], st * w[0] + ct * w[1]];
                    mother_wavelet_hat([dil * rot[0], dil * rot[1]], xi0, l)
                }));
            }
        }
        let sd = xi0 / (1u64 << j) as f64;
        filters.push(Self::tabulate(n, |w| (-(w[0] * w[0] + w[1] * w[1]) / (2.0 * sd * sd)).exp()));
        Ok(WaveletBank { n, j, l, xi0, filters, fft: Fft2::new(n) })
    }

    /// `J = log2(N) - 3`, the setting used for synthesis.
    pub fn synthesis_scales(n: usize) -> usize {
        (n.trailing_zeros() as usize).saturating_sub(3)
    }

    /// `J = log2(N) - 2`, the setting used for reconstruction.
    pub fn reconstruction_scales(n: usize) -> usize {
        (n.trailing_zeros() as usize).saturating_sub(2)
    }

    fn tabulate(n: usize, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        let step = 2.0 * PI / n as f64;
        for ky in 0..n {
            for kx in 0..n {
                if kx == n / 2 || ky == n / 2 {
                    continue;
                }
                let w = [signed_freq(kx, n) as f64 * step, signed_freq(ky, n) as f64 * step];
                out[ky * n + kx] = f(w);
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scales(&self) -> usize {
        self.j
    }

    pub fn angles(&self) -> usize {
        self.l
    }

    pub fn xi0(&self) -> f64 {
        self.xi0
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn index(&self, band: Band) -> usize {
        match band {
            Band::Wavelet { j, l } => j * self.l + l,
            Band::LowPass => self.j * self.l,
        }
    }

    pub fn band(&self, index: usize) -> Band {
        if index == self.j * self.l {
            Band::LowPass
        } else {
            Band::Wavelet { j: index / self.l, l: index % self.l }
        }
    }

    /// Frequency response of filter `index`, row-major over FFT bins.
    pub fn filter(&self, index: usize) -> &[f64] {
        &self.filters[index]
    }

    /// Angle index carrying the same coefficients after the input image is
    /// rotated by `quarter_turns * 90` degrees counter-clockwise (`4 | L`).
    pub fn rotated_angle(&self, l: usize, quarter_turns: i32) -> usize {
        let shift = (self.l / 4) as i64 * quarter_turns as i64;
        (l as i64 - shift).rem_euclid(self.l as i64) as usize
    }

    /// Angle index matching `l` after mirroring the input image in `x -> -x`.
    pub fn mirrored_angle_x(&self, l: usize) -> usize {
        ((self.l / 2) as i64 - l as i64).rem_euclid(self.l as i64) as usize
    }

    /// Angle index matching `l` after transposing the input image (`x <-> y`).
    pub fn transposed_angle(&self, l: usize) -> usize {
        (-((self.l / 4) as i64) - l as i64).rem_euclid(self.l as i64) as usize
    }

    fn check(&self, img: &PixelImage) -> Result<()> {
        if img.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: img.n() });
        }
        Ok(())
    }

    /// `img * psi_lambda` for every filter, via one forward and `J L + 1` inverse FFTs.
    pub fn transform(&self, img: &PixelImage) -> Result<WaveletCoeffs> {
        self.check(img)?;
        let spec = self.fft.forward_real(img.data());
        Ok(self.transform_spectrum(&spec))
    }

    pub fn transform_spectrum(&self, spec: &[Complex64]) -> WaveletCoeffs {
        let bands = (0..self.len()).map(|i| self.apply_filter(spec, i)).collect();
        WaveletCoeffs { n: self.n, bands }
    }

    /// Inverse FFT of `spec * filter(index)`.
    pub fn apply_filter(&self, spec: &[Complex64], index: usize) -> Vec<Complex64> {
        let f = &self.filters[index];
        let mut buf: Vec<Complex64> = spec.iter().zip(f).map(|(s, &h)| s * h).collect();
        self.fft.inverse(&mut buf);
        buf
    }

    /// `sum_lambda IDFT(DFT(g_lambda) conj(psi_hat_lambda))`, complex valued.
    /// Bands given as `None` contribute nothing.
    pub fn adjoint_complex(&self, grads: &[Option<Vec<Complex64>>]) -> Vec<Complex64> {
        let nn = self.n * self.n;
        let mut acc = vec![Complex64::new(0.0, 0.0); nn];
        for (i, g) in grads.iter().enumerate() {
            let Some(g) = g else { continue };
            let mut buf = g.clone();
            self.fft.forward(&mut buf);
            // filters are real, so conj(psi_hat) = psi_hat
            for ((a, b), &h) in acc.iter_mut().zip(&buf).zip(&self.filters[i]) {
                *a += b * h;
            }
        }
        self.fft.inverse(&mut acc);
        acc
    }

    /// Adjoint of `transform` as a map from real images: the real part of
    /// [`adjoint_complex`](Self::adjoint_complex).
    pub fn adjoint(&self, grads: &WaveletCoeffs, window: Window) -> Result<PixelImage> {
        if grads.n != self.n || grads.bands.len() != self.len() {
            return Err(Error::SizeMismatch { expected: self.len(), got: grads.bands.len() });
        }
        let opt: Vec<Option<Vec<Complex64>>> = grads.bands.iter().cloned().map(Some).collect();
        let out = self.adjoint_complex(&opt);
        PixelImage::from_vec(self.n, window, out.into_iter().map(|c| c.re).collect())
    }
}

/// Complex coefficient fields, one `N x N` buffer per filter.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    pub n: usize,
    pub bands: Vec<Vec<Complex64>>,
}

impl WaveletCoeffs {
    pub fn zeros(n: usize, bands: usize) -> Self {
        WaveletCoeffs { n, bands: vec![vec![Complex64::new(0.0, 0.0); n * n]; bands] }
    }
}
