//! The covariance index set: which pairs of wavelet phase harmonics are correlated.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::wavelets::Band;

/// One covariance `(lambda, k, lambda', k', tau')`; `tau` is a pixel offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GammaEntry {
    pub a: Band,
    pub k: u32,
    pub b: Band,
    pub kp: u32,
    pub tau: [i64; 2],
}

/// Which families of entries to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaVariant {
    #[default]
    Full,
    /// Only `k = k' = 1`: plain second-order wavelet covariances.
    SecondOrder,
}

/// A `(band, k)` harmonic field referenced by the entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HarmonicField {
    pub band: Band,
    pub k: u32,
}

/// Ordered list of covariance entries plus the distinct harmonic fields they use.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSet {
    scales: usize,
    angles: usize,
    entries: Vec<GammaEntry>,
    fields: Vec<HarmonicField>,
    /// `(field index of a, field index of b)` per entry.
    pairs: Vec<(usize, usize)>,
}

/// Pixel offset `round(2^j u)` for the unit vector `u` at angle `-theta`
/// (the direction of the wavelet's central frequency).
pub fn direction_offset(j: usize, l: usize, angles: usize, perpendicular: bool) -> [i64; 2] {
    let mut theta = -2.0 * PI * l as f64 / angles as f64;
    if perpendicular {
        theta += PI / 2.0;
    }
    let scale = (1u64 << j) as f64;
    [(scale * theta.cos()).round() as i64, (scale * theta.sin()).round() as i64]
}

impl GammaSet {
    /// Builds the default index set for `J` scales and `L` angles.
    ///
    /// - same scale, `|l - l'| <= L/4` (circular): `(k, k') in {(1,1), (0,0), (0,1)}`,
    ///   unordered for the symmetric pairs and ordered for `(0,1)`;
    /// - cross scale `j < j'`, same angle: `(1, 2^(j'-j))`, `(0,0)`, `(0,1)`;
    /// - same band, `(1,1)`, translated by `2^j u_theta` and `2^j u_theta^perp`;
    /// - low-pass autocovariance.
    pub fn build(scales: usize, angles: usize, variant: GammaVariant) -> Self {
        let mut entries = Vec::new();
        let quarter = angles / 4;
        let wav = |j, l| Band::Wavelet { j, l };
        let mut push = |a: Band, k: u32, b: Band, kp: u32, tau: [i64; 2]| {
            if variant == GammaVariant::SecondOrder && (k, kp) != (1, 1) {
                return;
            }
            entries.push(GammaEntry { a, k, b, kp, tau });
        };
        for j in 0..scales {
            for l in 0..angles {
                for d in 0..=quarter {
                    let lp = (l + d) % angles;
                    push(wav(j, l), 1, wav(j, lp), 1, [0, 0]);
                    push(wav(j, l), 0, wav(j, lp), 0, [0, 0]);
                }
                for d in -(quarter as i64)..=(quarter as i64) {
                    let lp = (l as i64 + d).rem_euclid(angles as i64) as usize;
                    push(wav(j, l), 0, wav(j, lp), 1, [0, 0]);
                }
            }
        }
        for j in 0..scales {
            for jp in (j + 1)..scales {
                for l in 0..angles {
                    push(wav(j, l), 1, wav(jp, l), 1 << (jp - j), [0, 0]);
                    push(wav(j, l), 0, wav(jp, l), 0, [0, 0]);
                    push(wav(j, l), 0, wav(jp, l), 1, [0, 0]);
                }
            }
        }
        for j in 0..scales {
            for l in 0..angles {
                for perp in [false, true] {
                    push(wav(j, l), 1, wav(j, l), 1, direction_offset(j, l, angles, perp));
                }
            }
        }
        push(Band::LowPass, 1, Band::LowPass, 1, [0, 0]);
        Self::from_entries(scales, angles, entries)
    }

    pub fn from_entries(scales: usize, angles: usize, entries: Vec<GammaEntry>) -> Self {
        let mut index: HashMap<HarmonicField, usize> = HashMap::new();
        let mut fields = Vec::new();
        let mut field_of = |f: HarmonicField| {
            *index.entry(f).or_insert_with(|| {
                fields.push(f);
                fields.len() - 1
            })
        };
        let pairs = entries
            .iter()
            .map(|e| {
                (
                    field_of(HarmonicField { band: e.a, k: e.k }),
                    field_of(HarmonicField { band: e.b, k: e.kp }),
                )
            })
            .collect();
        GammaSet { scales, angles, entries, fields, pairs }
    }

    /// Closed-form size of [`GammaSet::build`] with the full variant.
    pub fn full_size(scales: usize, angles: usize) -> usize {
        let q = angles / 4;
        let same = scales * angles * (2 * (q + 1) + (2 * q + 1));
        let cross = scales * scales.saturating_sub(1) / 2 * angles * 3;
        same + cross + 2 * scales * angles + 1
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    pub fn angles(&self) -> usize {
        self.angles
    }

    pub fn entries(&self) -> &[GammaEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fields(&self) -> &[HarmonicField] {
        &self.fields
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_keeps_only_unit_harmonics() {
        let full = GammaSet::build(3, 8, GammaVariant::Full);
        let second = GammaSet::build(3, 8, GammaVariant::SecondOrder);
        let expected: Vec<_> =
            full.entries().iter().filter(|e| (e.k, e.kp) == (1, 1)).copied().collect();
        assert_eq!(second.entries(), expected.as_slice());
    }

    /// Brute-force enumeration over every candidate tuple, filtered by the rules.
    fn enumerate(scales: usize, angles: usize) -> usize {
        let q = angles / 4;
        let circ = |a: usize, b: usize| {
            let d = (a as i64 - b as i64).rem_euclid(angles as i64) as usize;
            d.min(angles - d)
        };
        let ks: Vec<u32> = std::iter::once(0).chain((0..scales).map(|i| 1u32 << i)).collect();
        let mut count = 0;
        for j in 0..scales {
            for jp in 0..scales {
                for l in 0..angles {
                    for lp in 0..angles {
                        for &k in &ks {
                            for &kp in &ks {
                                let same = j == jp && circ(l, lp) <= q;
                                // unordered pairs counted once: lp reached from l by +d, d <= q
                                let forward = (lp + angles - l) % angles <= q;
                                if same && forward && (k, kp) == (1, 1) {
                                    count += 1;
                                }
                                if same && forward && (k, kp) == (0, 0) {
                                    count += 1;
                                }
                                if same && (k, kp) == (0, 1) {
                                    count += 1;
                                }
                                if j < jp && l == lp {
                                    if (k, kp) == (1, 1 << (jp - j)) || (k, kp) == (0, 0) || (k, kp) == (0, 1) {
                                        count += 1;
                                    }
                                }
                                if j == jp && l == lp && (k, kp) == (1, 1) {
                                    count += 2; // two translations
                                }
                            }
                        }
                    }
                }
            }
        }
        count + 1
    }

    #[test]
    fn size_matches_enumeration_and_closed_form() {
        for (j, l) in [(1, 2), (2, 4), (3, 8), (4, 8), (2, 6)] {
            let built = GammaSet::build(j, l, GammaVariant::Full).len();
            assert_eq!(built, enumerate(j, l), "J={j} L={l}");
            assert_eq!(built, GammaSet::full_size(j, l), "J={j} L={l}");
        }
        assert_eq!(GammaSet::build(1, 2, GammaVariant::Full).len(), 11);
    }

    #[test]
    fn size_grows_quadratically() {
        // |Gamma| / (L^2 J^2) stays bounded as both grow
        for (j, l) in [(2, 4), (4, 8), (6, 16), (8, 32)] {
            let ratio = GammaSet::full_size(j, l) as f64 / (l * l * j * j) as f64;
            assert!(ratio > 0.1 && ratio < 2.0, "J={j} L={l} ratio {ratio}");
        }
    }

    #[test]
    fn harmonic_orders_follow_transposition_rule() {
        let g = GammaSet::build(4, 8, GammaVariant::Full);
        for e in g.entries() {
            if let (Band::Wavelet { j, .. }, Band::Wavelet { j: jp, .. }) = (e.a, e.b) {
                if e.k >= 1 && e.kp >= 1 {
                    let f = e.k as f64 / (1u64 << j) as f64;
                    let fp = e.kp as f64 / (1u64 << jp) as f64;
                    assert!(f / fp <= 2.0 && fp / f <= 2.0, "{e:?}");
                }
            }
        }
    }

    #[test]
    fn offsets_follow_wavelet_direction() {
        assert_eq!(direction_offset(0, 0, 8, false), [1, 0]);
        assert_eq!(direction_offset(2, 0, 8, true), [0, 4]);
        assert_eq!(direction_offset(1, 2, 8, false), [0, -2]);
        assert_eq!(direction_offset(0, 1, 8, false), [1, -1]);
    }
}
