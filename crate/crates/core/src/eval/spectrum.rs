//! Radially averaged power spectrum of a pattern's Fourier coefficients.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::PointPattern;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpectrum {
    pub k: Vec<usize>,
    pub p: Vec<f64>,
}

impl RadialSpectrum {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,P\n");
        for (k, p) in self.k.iter().zip(&self.p) {
            out.push_str(&format!("{k},{p:e}\n"));
        }
        out
    }
}

/// `F_m = sum_u exp(-i pi m . x_u / s)`.
pub fn fourier_coefficient(p: &PointPattern, m: [i64; 2]) -> Complex64 {
    let s = p.window().s();
    p.points()
        .iter()
        .map(|x| Complex64::cis(-std::f64::consts::PI * (m[0] as f64 * x[0] + m[1] as f64 * x[1]) / s))
        .sum()
}

/// `P(k) = mean_{floor|m| = k} |F_m|^2 / n` for `k = 1..=k_max`.
pub fn radial_spectrum(p: &PointPattern, k_max: usize) -> Result<RadialSpectrum> {
    if p.is_empty() {
        return Err(Error::invalid("spectrum of an empty pattern"));
    }
    if k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    let s = p.window().s();
    let km = k_max as i64;
    let width = (2 * km + 1) as usize;
    // per-point phasors exp(-i pi m x / s) for m = -k_max..=k_max, per axis
    let phasors = |coord: usize| -> Vec<Complex64> {
        let mut out = Vec::with_capacity(p.len() * width);
        for x in p.points() {
            for m in -km..=km {
                out.push(Complex64::cis(-std::f64::consts::PI * m as f64 * x[coord] / s));
            }
        }
        out
    };
    let ex = phasors(0);
    let ey = phasors(1);
    let mut sums = vec![0.0; k_max + 1];
    let mut counts = vec![0usize; k_max + 1];
    // |F_{-m}| = |F_m|, so half the plane suffices: my > 0, or my = 0 and mx > 0
    let mut f = vec![Complex64::new(0.0, 0.0); width];
    for my in 0..=km {
        f.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for u in 0..p.len() {
            let py = ey[u * width + (my + km) as usize];
            let row = &ex[u * width..(u + 1) * width];
            for (acc, px) in f.iter_mut().zip(row) {
                *acc += px * py;
            }
        }
        for mx in -km..=km {
            if my == 0 && mx <= 0 {
                continue;
            }
            let r = ((mx * mx + my * my) as f64).sqrt().floor() as usize;
            if (1..=k_max).contains(&r) {
                sums[r] += 2.0 * f[(mx + km) as usize].norm_sqr();
                counts[r] += 2;
            }
        }
    }
    let n = p.len() as f64;
    let k: Vec<usize> = (1..=k_max).collect();
    let pk = k.iter().map(|&k| sums[k] / counts[k] as f64 / n).collect();
    Ok(RadialSpectrum { k, p: pk })
}
