//! Phase harmonics `[z]^k = |z| e^{i k arg z}` and their Wirtinger derivatives.

use num_complex::Complex64;

/// Below this modulus the phase is undefined; the harmonic and its
/// derivative are both taken to be zero. Kept tiny: small but nonzero
/// coefficients still carry gradient through products with large ones.
pub const EPS_PH: f64 = 1e-300;

#[inline]
pub fn phase_harmonic(z: Complex64, k: i32) -> Complex64 {
    match k {
        1 => return z,
        -1 => return z.conj(),
        _ => {}
    }
    let r = z.norm();
    if r < EPS_PH {
        return Complex64::new(0.0, 0.0);
    }
    match k {
        0 => Complex64::new(r, 0.0),
        1 => z,
        -1 => z.conj(),
        _ => {
            let u = z / r;
            u.powi(k) * r
        }
    }
}

/// `(d f / d z, d f / d conj(z))` for `f(z) = [z]^k`, given `f = [z]^k`.
///
/// Writing `f = z^k |z|^{1-k}` gives `f_z = f (1 + k) / (2 z)` and
/// `f_zbar = f (1 - k) / (2 conj(z))`.
#[inline]
pub fn phase_harmonic_wirtinger(z: Complex64, f: Complex64, k: i32) -> (Complex64, Complex64) {
    match k {
        1 => return (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
        -1 => return (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
        _ => {}
    }
    if z.norm() < EPS_PH {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let kf = f64::from(k);
    (f * (0.5 * (1.0 + kf)) / z, f * (0.5 * (1.0 - kf)) / z.conj())
}

/// Pulls a cotangent `g_f` (with `dE = Re(conj(g_f) df)`) back through `f = [z]^k`.
#[inline]
pub fn pullback(g_f: Complex64, z: Complex64, f: Complex64, k: i32) -> Complex64 {
    let (fz, fzb) = phase_harmonic_wirtinger(z, f, k);
    g_f * fz.conj() + g_f.conj() * fzb
}
