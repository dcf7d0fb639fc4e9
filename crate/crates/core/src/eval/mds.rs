//! Classical multidimensional scaling to the plane.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Square distance matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub size: usize,
    pub data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(size: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != size * size {
            return Err(Error::SizeMismatch { expected: size * size, got: data.len() });
        }
        for i in 0..size {
            if data[i * size + i] != 0.0 {
                return Err(Error::invalid("distance matrix needs a zero diagonal"));
            }
            for j in 0..i {
                if data[i * size + j] != data[j * size + i] || data[i * size + j] < 0.0 {
                    return Err(Error::invalid("distance matrix must be symmetric and non-negative"));
                }
            }
        }
        Ok(DistanceMatrix { size, data })
    }

    /// Fills the upper triangle with `f(i, j)` and mirrors it.
    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; size * size];
        for i in 0..size {
            for j in (i + 1)..size {
                let d = f(i, j);
                data[i * size + j] = d;
                data[j * size + i] = d;
            }
        }
        DistanceMatrix { size, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    pub fn to_csv(&self, labels: &[String]) -> String {
        let mut out = String::from("label");
        for l in labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for i in 0..self.size {
            out.push_str(&labels[i]);
            for j in 0..self.size {
                out.push_str(&format!(",{:e}", self.get(i, j)));
            }
            out.push('\n');
        }
        out
    }
}

pub fn mds_embed(d: &DistanceMatrix) -> Vec<[f64; 2]> {
    let n = d.size;
    if n == 0 {
        return Vec::new();
    }
    let sq = DMatrix::from_fn(n, n, |i, j| -0.5 * d.get(i, j).powi(2));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let total = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| sq[(i, j)] - row_means[i] - row_means[j] + total);
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let mut coords = vec![[0.0; 2]; n];
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for (axis, &k) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[k];
        if lambda <= 1e-12 * scale {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        let flip = v.iter().find(|x| x.abs() > 1e-12).is_some_and(|&x| x < 0.0);
        let root = lambda.sqrt() * if flip { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i][axis] = v[i] * root;
        }
    }
    coords
}

pub fn mds_csv(labels: &[String], coords: &[[f64; 2]]) -> String {
    let mut out = String::from("label,x,y\n");
    for (l, c) in labels.iter().zip(coords) {
        out.push_str(&format!("{l},{:e},{:e}\n", c[0], c[1]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    #[test]
    fn equilateral_triangle_is_realized() {
        let d = DistanceMatrix::from_fn(3, |_, _| 1.0);
        let x = mds_embed(&d);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((dist(x[i], x[j]) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn planar_points_are_recovered_up_to_isometry() {
        let pts = [[0.0, 0.0], [1.0, 0.2], [0.3, 2.0], [-1.0, 0.5], [0.7, -0.9]];
        let d = DistanceMatrix::from_fn(5, |i, j| dist(pts[i], pts[j]));
        let x = mds_embed(&d);
        for i in 0..5 {
            for j in 0..5 {
                assert!((dist(x[i], x[j]) - d.get(i, j)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn collinear_points_are_rank_one() {
        let d = DistanceMatrix::from_fn(10, |i, j| (i as f64 - j as f64).abs());
        let x = mds_embed(&d);
        assert!(x.iter().all(|c| c[1].abs() < 1e-6));
        assert!(x.iter().find(|c| c[0].abs() > 1e-12).unwrap()[0] > 0.0);
    }

    #[test]
    fn duplicates_coincide_and_zero_matrix_collapses() {
        let pts = [[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]];
        let x = mds_embed(&DistanceMatrix::from_fn(3, |i, j| dist(pts[i], pts[j])));
        assert!(dist(x[0], x[1]) < 1e-8);
        let z = mds_embed(&DistanceMatrix::from_fn(4, |_, _| 0.0));
        assert!(z.iter().all(|c| *c == [0.0, 0.0]));
    }

    #[test]
    fn rejects_asymmetric_input() {
        assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
    }
}
