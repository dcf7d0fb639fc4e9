//! Order-1 Wasserstein distance between persistence diagrams, L-infinity ground metric.

use super::persistence::PersistenceDiagram;

fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn to_diagonal(a: (f64, f64)) -> f64 {
    (a.1 - a.0) / 2.0
}

/// Minimum-cost perfect assignment on a square cost matrix (shortest augmenting paths
/// with potentials). Returns the total cost.
pub fn assignment_cost(cost: &[f64], size: usize) -> f64 {
    if size == 0 {
        return 0.0;
    }
    let inf = f64::INFINITY;
    // 1-based rows/columns, column 0 is a sentinel
    let mut u = vec![0.0; size + 1];
    let mut v = vec![0.0; size + 1];
    let mut row_of = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for i in 1..=size {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=size {
                if !used[j] {
                    let cur = cost[(i0 - 1) * size + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=size).map(|j| cost[(row_of[j] - 1) * size + (j - 1)]).sum()
}

/// Exact distance between two point multisets, each point free to go to the diagonal.
pub fn wasserstein_points(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    // canonical argument order makes the result exactly symmetric
    let sort = |v: &[(f64, f64)]| {
        let mut v = v.to_vec();
        v.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
        v
    };
    let (a, b) = (sort(a), sort(b));
    let less = a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(&b)
            .map(|(p, q)| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let (a, b) = if less.is_gt() { (&b[..], &a[..]) } else { (&a[..], &b[..]) };
    if let (Some(ba), Some(bb)) = (common_birth(a), common_birth(b)) {
        if ba == bb {
            return same_birth(a, b);
        }
    }
    let (m, k) = (a.len(), b.len());
    let size = m + k;
    let mut cost = vec![0.0; size * size];
    for i in 0..size {
        for j in 0..size {
            cost[i * size + j] = match (i < m, j < k) {
                (true, true) => linf(a[i], b[j]),
                (true, false) => to_diagonal(a[i]),
                (false, true) => to_diagonal(b[j]),
                (false, false) => 0.0,
            };
        }
    }
    assignment_cost(&cost, size)
}

fn common_birth(a: &[(f64, f64)]) -> Option<f64> {
    let first = a.first()?.0;
    a.iter().all(|p| p.0 == first).then_some(first)
}

/// All points on one vertical line: the problem is one-dimensional with costs
/// `|d - d'|` and `(d - b) / 2`, where an optimal matching never crosses, so a
/// DP over the two sorted death lists is exact.
fn same_birth(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut x: Vec<(f64, f64)> = a.to_vec();
    let mut y: Vec<(f64, f64)> = b.to_vec();
    x.sort_by(|p, q| p.1.total_cmp(&q.1));
    y.sort_by(|p, q| p.1.total_cmp(&q.1));
    let k = y.len();
    let mut prev = vec![0.0; k + 1];
    for j in 1..=k {
        prev[j] = prev[j - 1] + to_diagonal(y[j - 1]);
    }
    let mut cur = vec![0.0; k + 1];
    for xi in &x {
        cur[0] = prev[0] + to_diagonal(*xi);
        for j in 1..=k {
            cur[j] = (prev[j] + to_diagonal(*xi))
                .min(cur[j - 1] + to_diagonal(y[j - 1]))
                .min(prev[j - 1] + linf(*xi, y[j - 1]));
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[k]
}

pub fn pd_wasserstein(a: &PersistenceDiagram, b: &PersistenceDiagram, dim: u8) -> f64 {
    wasserstein_points(&a.points(dim), &b.points(dim))
}

/// Mean distance over all cross pairs of two groups.
pub fn mean_cross_distance(a: &[PersistenceDiagram], b: &[PersistenceDiagram], dim: u8) -> f64 {
    let mut total = 0.0;
    for x in a {
        for y in b {
            total += pd_wasserstein(x, y, dim);
        }
    }
    total / (a.len() * b.len()) as f64
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::*;

    /// Minimum over every partial injection of `a` into `b`; the rest goes to the diagonal.
    pub fn exhaustive(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
        fn go(i: usize, a: &[(f64, f64)], b: &[(f64, f64)], used: &mut Vec<bool>) -> f64 {
            if i == a.len() {
                return b.iter().zip(used.iter()).filter(|(_, u)| !**u).map(|(p, _)| to_diagonal(*p)).sum();
            }
            let mut best = to_diagonal(a[i]) + go(i + 1, a, b, used);
            for j in 0..b.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(linf(a[i], b[j]) + go(i + 1, a, b, used));
                    used[j] = false;
                }
            }
            best
        }
        go(0, a, b, &mut vec![false; b.len()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{rng_for, stream};
    use rand::Rng;

    fn random_diagram(rng: &mut impl Rng, max: usize) -> Vec<(f64, f64)> {
        let n = rng.random_range(0..=max);
        (0..n)
            .map(|_| {
                let b: f64 = rng.random_range(0.0..0.3);
                (b, b + rng.random_range(0.0..0.2))
            })
            .collect()
    }

    #[test]
    fn trivial_cases() {
        let a = vec![(0.1, 0.4), (0.0, 0.2)];
        assert_eq!(wasserstein_points(&a, &a), 0.0);
        assert!((wasserstein_points(&[(0.1, 0.5)], &[]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn matches_exhaustive_search() {
        let mut rng = rng_for(3, stream::OUTPUTS);
        for _ in 0..100 {
            let a = random_diagram(&mut rng, 6);
            let b = random_diagram(&mut rng, 6);
            let got = wasserstein_points(&a, &b);
            let want = oracle::exhaustive(&a, &b);
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn shared_birth_shortcut_matches_assignment() {
        let mut rng = rng_for(4, stream::OUTPUTS);
        for _ in 0..50 {
            let a: Vec<_> = (0..rng.random_range(0..30)).map(|_| (0.0, rng.random_range(0.0..0.1))).collect();
            let b: Vec<_> = (0..rng.random_range(0..30)).map(|_| (0.0, rng.random_range(0.0..0.1))).collect();
            let fast = wasserstein_points(&a, &b);
            let size = a.len() + b.len();
            let mut cost = vec![0.0; size * size];
            for i in 0..size {
                for j in 0..size {
                    cost[i * size + j] = match (i < a.len(), j < b.len()) {
                        (true, true) => linf(a[i], b[j]),
                        (true, false) => to_diagonal(a[i]),
                        (false, true) => to_diagonal(b[j]),
                        (false, false) => 0.0,
                    };
                }
            }
            assert!((fast - assignment_cost(&cost, size)).abs() < 1e-12);
        }
    }

    #[test]
    fn metric_axioms() {
        let mut rng = rng_for(5, stream::OUTPUTS);
        for _ in 0..100 {
            let a = random_diagram(&mut rng, 8);
            let b = random_diagram(&mut rng, 8);
            let c = random_diagram(&mut rng, 8);
            let ab = wasserstein_points(&a, &b);
            assert_eq!(ab, wasserstein_points(&b, &a));
            assert!(ab <= wasserstein_points(&a, &c) + wasserstein_points(&c, &b) + 1e-12);
        }
    }
}
