//! Vietoris-Rips persistence (dimensions 0 and 1) on the periodic metric.
//!
//! Dimension 0 comes from Kruskal's union-find. Dimension 1 comes from a
//! reduction of the edge/triangle coboundary matrix processed from the longest
//! edge down, with the MST edges cleared and zero-persistence apparent pairs
//! detected without building their columns.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointPattern;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
    pub dim: u8,
    /// Never dies inside the filtration; `death` then equals `r_cap`.
    pub essential: bool,
}

impl PersistencePair {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pub pairs: Vec<PersistencePair>,
    pub r_cap: f64,
}

impl PersistenceDiagram {
    pub fn new(pairs: Vec<PersistencePair>, r_cap: f64) -> Self {
        PersistenceDiagram { pairs, r_cap }
    }

    /// `(birth, death)` points of one dimension, essential classes included.
    pub fn points(&self, dim: u8) -> Vec<(f64, f64)> {
        self.pairs.iter().filter(|p| p.dim == dim).map(|p| (p.birth, p.death)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("birth,death,dim\n");
        for p in &self.pairs {
            out.push_str(&format!("{:e},{:e},{}\n", p.birth, p.death, p.dim));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersistenceOptions {
    pub r_cap: f64,
    pub max_points: usize,
}

impl Default for PersistenceOptions {
    fn default() -> Self {
        PersistenceOptions { r_cap: 0.5, max_points: 3000 }
    }
}

struct Filtration {
    n: usize,
    /// edges sorted by (length, a, b)
    edges: Vec<(f64, u32, u32)>,
    /// rank of edge {a, b} in `edges`, `u32::MAX` when longer than the cap
    rank: Vec<u32>,
    /// per vertex, `(rank, other end)` of its incident edges in increasing rank
    incident: Vec<Vec<(u32, u32)>>,
}

impl Filtration {
    fn new(p: &PointPattern, r_cap: f64) -> Self {
        let n = p.len();
        let w = p.window();
        let pts = p.points();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                let d = w.dist(pts[a], pts[b]);
                if d <= r_cap {
                    edges.push((d, a as u32, b as u32));
                }
            }
        }
        edges.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut rank = vec![u32::MAX; n * n];
        let mut incident = vec![Vec::new(); n];
        for (r, &(_, a, b)) in edges.iter().enumerate() {
            rank[a as usize * n + b as usize] = r as u32;
            rank[b as usize * n + a as usize] = r as u32;
            incident[a as usize].push((r as u32, b));
            incident[b as usize].push((r as u32, a));
        }
        Filtration { n, edges, rank, incident }
    }

    #[inline]
    fn rank(&self, a: usize, b: usize) -> u32 {
        self.rank[a * self.n + b]
    }

    /// A triangle is keyed by its longest and second-longest edges, which
    /// orders triangles compatibly with the filtration.
    #[inline]
    fn key(&self, top: u32, second: u32) -> u64 {
        top as u64 * self.edges.len() as u64 + second as u64
    }

    fn key_length(&self, key: u64) -> f64 {
        self.edges[(key / self.edges.len() as u64) as usize].0
    }

    /// Cofacets of `e` with keys at least `from`.
    fn cofacets_from(&self, e: u32, from: u64) -> Cofacets {
        let (_, a, b) = self.edges[e as usize];
        let (top, second) = ((from / self.edges.len() as u64) as u32, (from % self.edges.len() as u64) as u32);
        // walk entries below this rank only produce smaller keys
        let skip = if top > e { top } else if top == e { second } else { 0 };
        let (a, b) = (a as usize, b as usize);
        let ia = self.incident[a].partition_point(|x| x.0 < skip);
        let ib = self.incident[b].partition_point(|x| x.0 < skip);
        Cofacets { e, a, b, ia, ib, from }
    }

    /// Whether some triangle has `r` as its longest edge.
    fn has_apparent_cofacet(&self, r: u32) -> bool {
        let (_, a, b) = self.edges[r as usize];
        let (a, b) = (a as usize, b as usize);
        (0..self.n).any(|c| c != a && c != b && self.rank(a, c) < r && self.rank(b, c) < r)
    }

    /// Smallest cofacet of edge `r`, when it has `r` as its longest edge.
    fn apparent_cofacet(&self, r: u32) -> Option<u64> {
        if !self.has_apparent_cofacet(r) {
            return None;
        }
        self.cofacets_from(r, 0).next(self)
    }
}

/// Cofacets of edge `{a, b}` in increasing key order, produced by walking the
/// two rank-sorted incidence lists: vertex `c` completes a triangle when the
/// second of its edges to `a` and `b` is reached.
#[derive(Clone, Copy)]
struct Cofacets {
    e: u32,
    a: usize,
    b: usize,
    ia: usize,
    ib: usize,
    /// keys below this are skipped
    from: u64,
}

impl Cofacets {
    fn next(&mut self, f: &Filtration) -> Option<u64> {
        let (la, lb) = (&f.incident[self.a], &f.incident[self.b]);
        loop {
            let next_a = la.get(self.ia).copied();
            let next_b = lb.get(self.ib).copied();
            let ((edge, c), to) = match (next_a, next_b) {
                (None, None) => return None,
                (Some(x), Some(y)) if x.0 < y.0 => {
                    self.ia += 1;
                    (x, self.b)
                }
                (Some(x), None) => {
                    self.ia += 1;
                    (x, self.b)
                }
                (_, Some(y)) => {
                    self.ib += 1;
                    (y, self.a)
                }
            };
            let c = c as usize;
            if c == to {
                continue;
            }
            let sibling = f.rank(to, c);
            if sibling == u32::MAX || sibling > edge {
                continue;
            }
            let key = if edge < self.e { f.key(self.e, edge) } else { f.key(edge, sibling.max(self.e)) };
            if key >= self.from {
                return Some(key);
            }
        }
    }
}

const BARE: u32 = u32::MAX;

/// Working column: a sum of edge coboundaries merged lazily. Entries wait in
/// buckets indexed by the triangle's longest edge; the pivot only moves up, so
/// buckets are drained in increasing order, found through a two-level bitmap.
/// Iterator index `BARE` marks a key with no iterator behind it.
struct Column {
    edges: u64,
    buckets: Vec<Vec<(u32, u32)>>,
    bits: Vec<u64>,
    summary: Vec<u64>,
    touched: Vec<u32>,
    iters: Vec<Cofacets>,
    scratch: Vec<(u32, u32)>,
}

impl Column {
    fn new(edges: usize) -> Self {
        let words = edges.div_ceil(64);
        Column {
            edges: edges as u64,
            buckets: vec![Vec::new(); edges],
            bits: vec![0; words],
            summary: vec![0; words.div_ceil(64)],
            touched: Vec::new(),
            iters: Vec::new(),
            scratch: Vec::new(),
        }
    }

    fn clear(&mut self) {
        for &top in &self.touched {
            self.buckets[top as usize].clear();
            self.bits[top as usize / 64] = 0;
            self.summary[top as usize / 4096] = 0;
        }
        self.touched.clear();
        self.iters.clear();
    }

    fn push(&mut self, key: u64, iter: u32) {
        let top = (key / self.edges) as usize;
        if self.buckets[top].is_empty() {
            self.bits[top / 64] |= 1 << (top % 64);
            self.summary[top / 4096] |= 1 << ((top / 64) % 64);
            self.touched.push(top as u32);
        }
        self.buckets[top].push(((key % self.edges) as u32, iter));
    }

    fn lowest(&self) -> Option<usize> {
        let s = self.summary.iter().position(|&w| w != 0)?;
        let word = s * 64 + self.summary[s].trailing_zeros() as usize;
        Some(word * 64 + self.bits[word].trailing_zeros() as usize)
    }

    fn take(&mut self, top: usize) {
        self.bits[top / 64] &= !(1 << (top % 64));
        if self.bits[top / 64] == 0 {
            self.summary[top / 4096] &= !(1 << ((top / 64) % 64));
        }
    }

    fn add(&mut self, f: &Filtration, e: u32, from: u64) {
        let mut it = f.cofacets_from(e, from);
        if let Some(k) = it.next(f) {
            self.iters.push(it);
            self.push(k, (self.iters.len() - 1) as u32);
        }
    }

    /// Lowest key with odd multiplicity. Larger keys sharing its bucket are
    /// kept as bare keys.
    fn pivot(&mut self, f: &Filtration) -> Option<u64> {
        let mut cur = std::mem::take(&mut self.scratch);
        while let Some(top) = self.lowest() {
            cur.clear();
            // advancing an iterator can land in the same bucket again
            while !self.buckets[top].is_empty() {
                let batch = std::mem::take(&mut self.buckets[top]);
                self.take(top);
                for &(second, i) in &batch {
                    cur.push((second, i));
                    if i != BARE {
                        if let Some(next) = self.iters[i as usize].next(f) {
                            self.push(next, i);
                        }
                    }
                }
                let mut batch = batch;
                batch.clear();
                if self.buckets[top].is_empty() {
                    // hand the allocation back for reuse
                    self.buckets[top] = batch;
                }
            }
            cur.sort_unstable_by_key(|&(second, _)| second);
            let mut i = 0;
            let mut found = None;
            while i < cur.len() {
                let mut j = i;
                while j < cur.len() && cur[j].0 == cur[i].0 {
                    j += 1;
                }
                if (j - i) % 2 == 1 {
                    found = Some(i);
                    break;
                }
                i = j;
            }
            if let Some(i) = found {
                let second = cur[i].0;
                let key = top as u64 * self.edges + second as u64;
                let rest: Vec<u32> = cur[i..].iter().map(|c| c.0).filter(|&s| s > second).collect();
                for s in rest {
                    self.push(top as u64 * self.edges + s as u64, BARE);
                }
                self.scratch = cur;
                return Some(key);
            }
        }
        self.scratch = cur;
        None
    }
}

pub fn persistence(p: &PointPattern, opts: &PersistenceOptions) -> Result<PersistenceDiagram> {
    if p.is_empty() {
        return Err(Error::invalid("persistence of an empty pattern"));
    }
    if p.len() > opts.max_points {
        return Err(Error::invalid(format!(
            "pattern has {} points, above the persistence cap of {}; thin it first (e.g. random thinning to 2000 points)",
            p.len(),
            opts.max_points
        )));
    }
    if !(opts.r_cap > 0.0) {
        return Err(Error::invalid("r_cap must be positive"));
    }
    let f = Filtration::new(p, opts.r_cap);
    let n = p.len();
    let mut pairs = Vec::new();

    // dimension 0
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut is_tree = vec![false; f.edges.len()];
    for (r, &(d, a, b)) in f.edges.iter().enumerate() {
        let (ra, rb) = (find(&mut parent, a as usize), find(&mut parent, b as usize));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
            is_tree[r] = true;
            pairs.push(PersistencePair { birth: 0.0, death: d, dim: 0, essential: false });
        }
    }
    let components = (0..n).filter(|&v| find(&mut parent, v) == v).count();
    for _ in 0..components {
        pairs.push(PersistencePair { birth: 0.0, death: opts.r_cap, dim: 0, essential: true });
    }

    // dimension 1
    // owners of pivots from columns that needed reduction
    let mut pivot_owner: HashMap<u64, u32> = HashMap::new();
    // reduced columns as sums of edge coboundaries, for columns that needed work
    let mut reduced: HashMap<u32, Vec<u32>> = HashMap::new();
    let mut apparent: HashMap<u32, Option<u64>> = HashMap::new();
    let mut dim1 = Vec::new();
    let mut column = Column::new(f.edges.len());
    for r in (0..f.edges.len() as u32).rev() {
        if is_tree[r as usize] {
            continue;
        }
        if f.has_apparent_cofacet(r) {
            // zero persistence; its partner is looked up only if a reduction reaches it
            continue;
        }
        column.clear();
        column.add(&f, r, 0);
        let mut sum = vec![r];
        let birth = f.edges[r as usize].0;
        loop {
            match column.pivot(&f) {
                None => {
                    dim1.push(PersistencePair { birth, death: opts.r_cap, dim: 1, essential: true });
                    break;
                }
                Some(t) => match pivot_owner.get(&t).copied().or_else(|| {
                    // an apparent pair (top, t) owns t when t is top's smallest cofacet
                    let top = (t / f.edges.len() as u64) as u32;
                    if is_tree[top as usize] {
                        return None;
                    }
                    let partner = *apparent.entry(top).or_insert_with(|| f.apparent_cofacet(top));
                    (partner == Some(t)).then_some(top)
                }) {
                    None => {
                        pivot_owner.insert(t, r);
                        let death = f.key_length(t);
                        if death > birth {
                            dim1.push(PersistencePair { birth, death, dim: 1, essential: false });
                        }
                        // keep the cochain mod 2 so repeated edges cancel
                        sum.sort_unstable();
                        let mut cancelled: Vec<u32> = Vec::with_capacity(sum.len());
                        for e in sum.drain(..) {
                            if cancelled.last() == Some(&e) {
                                cancelled.pop();
                            } else {
                                cancelled.push(e);
                            }
                        }
                        if cancelled != [r] {
                            reduced.insert(r, cancelled);
                        }
                            break;
                    }
                    Some(other) => {
                        // t goes back once so the added column cancels it
                        column.push(t, BARE);
                        let terms: &[u32] = match reduced.get(&other) {
                            Some(v) => v,
                            None => std::slice::from_ref(&other),
                        };
                        for &e in terms {
                            column.add(&f, e, t);
                        }
                        sum.extend_from_slice(terms);
                    }
                },
            }
        }
    }
    dim1.reverse();
    pairs.extend(dim1);
    Ok(PersistenceDiagram::new(pairs, opts.r_cap))
}

/// `chi(r) = beta_0(r) - beta_1(r)` with `beta_d(r) = #{b <= r < d}`; essential classes never die.
pub fn euler_characteristic(pd: &PersistenceDiagram, radii: &[f64]) -> Vec<f64> {
    radii
        .iter()
        .map(|&r| {
            pd.pairs
                .iter()
                .filter(|p| p.birth <= r && (p.essential || r < p.death))
                .map(|p| if p.dim == 0 { 1.0 } else { -1.0 })
                .sum()
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::*;

    /// Plain boundary-matrix reduction over all vertices, edges and triangles.
    pub fn brute_force(p: &PointPattern, r_cap: f64) -> Vec<(f64, f64, u8)> {
        let n = p.len();
        let w = p.window();
        let d = |a: usize, b: usize| w.dist(p.points()[a], p.points()[b]);
        // (value, dim, vertices)
        let mut simplices: Vec<(f64, usize, Vec<usize>)> = (0..n).map(|v| (0.0, 0, vec![v])).collect();
        for a in 0..n {
            for b in (a + 1)..n {
                if d(a, b) <= r_cap {
                    simplices.push((d(a, b), 1, vec![a, b]));
                }
            }
        }
        for a in 0..n {
            for b in (a + 1)..n {
                for c in (b + 1)..n {
                    let v = d(a, b).max(d(a, c)).max(d(b, c));
                    if v <= r_cap {
                        simplices.push((v, 2, vec![a, b, c]));
                    }
                }
            }
        }
        simplices.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let index: HashMap<Vec<usize>, usize> =
            simplices.iter().enumerate().map(|(i, s)| (s.2.clone(), i)).collect();
        let mut cols: Vec<Vec<usize>> = simplices
            .iter()
            .map(|s| {
                let mut c: Vec<usize> = if s.1 == 0 {
                    Vec::new()
                } else {
                    (0..s.2.len())
                        .map(|skip| {
                            let face: Vec<usize> =
                                s.2.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                            index[&face]
                        })
                        .collect()
                };
                c.sort_unstable();
                c
            })
            .collect();
        let mut low_owner: HashMap<usize, usize> = HashMap::new();
        let mut paired = vec![false; simplices.len()];
        let mut out = Vec::new();
        for j in 0..cols.len() {
            while let Some(&low) = cols[j].last() {
                match low_owner.get(&low) {
                    Some(&i) => {
                        let other = cols[i].clone();
                        let mut merged = Vec::new();
                        let (mut x, mut y) = (0, 0);
                        let cur = &cols[j];
                        while x < cur.len() || y < other.len() {
                            if y == other.len() || (x < cur.len() && cur[x] < other[y]) {
                                merged.push(cur[x]);
                                x += 1;
                            } else if x == cur.len() || other[y] < cur[x] {
                                merged.push(other[y]);
                                y += 1;
                            } else {
                                x += 1;
                                y += 1;
                            }
                        }
                        cols[j] = merged;
                    }
                    None => {
                        low_owner.insert(low, j);
                        paired[low] = true;
                        paired[j] = true;
                        let (b, dd) = (simplices[low].0, simplices[j].0);
                        if dd > b {
                            out.push((b, dd, simplices[low].1 as u8));
                        }
                        break;
                    }
                }
            }
        }
        for (i, s) in simplices.iter().enumerate() {
            if !paired[i] && s.1 < 2 {
                out.push((s.0, r_cap, s.1 as u8));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::sample_binomial;
    use crate::geometry::Window;
    use crate::rng::{rng_for, stream};
    use rand::Rng;

    fn sorted(mut v: Vec<(f64, f64, u8)>) -> Vec<(f64, f64, u8)> {
        v.sort_by(|a, b| a.2.cmp(&b.2).then(a.0.total_cmp(&b.0)).then(a.1.total_cmp(&b.1)));
        v
    }

    fn triples(pd: &PersistenceDiagram) -> Vec<(f64, f64, u8)> {
        sorted(pd.pairs.iter().map(|p| (p.birth, p.death, p.dim)).collect())
    }

    fn pattern(points: Vec<[f64; 2]>) -> PointPattern {
        PointPattern::new(Window::unit(), points).unwrap()
    }

    #[test]
    fn equilateral_triangle_has_no_loop() {
        let d = 0.1;
        let h = d * 3f64.sqrt() / 2.0;
        let p = pattern(vec![[0.0, 0.0], [d, 0.0], [d / 2.0, h]]);
        let pd = persistence(&p, &PersistenceOptions::default()).unwrap();
        let dim0: Vec<_> = pd.pairs.iter().filter(|q| q.dim == 0 && !q.essential).collect();
        assert_eq!(dim0.len(), 2);
        assert!(dim0.iter().all(|q| (q.death - d).abs() < 1e-12));
        assert!(pd.pairs.iter().all(|q| q.dim == 0));
        assert_eq!(pd.pairs.iter().filter(|q| q.essential).count(), 1);
    }

    #[test]
    fn square_has_one_loop() {
        let d = 0.1;
        let p = pattern(vec![[0.0, 0.0], [d, 0.0], [d, d], [0.0, d]]);
        let pd = persistence(&p, &PersistenceOptions::default()).unwrap();
        let loops: Vec<_> = pd.pairs.iter().filter(|q| q.dim == 1).collect();
        assert_eq!(loops.len(), 1);
        assert!((loops[0].birth - d).abs() < 1e-12);
        assert!((loops[0].death - d * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_on_small_patterns() {
        let mut rng = rng_for(11, stream::OUTPUTS);
        for trial in 0..60 {
            let n = rng.random_range(1..=10);
            let p = sample_binomial(n, &Window::unit(), trial);
            let r_cap = if trial % 3 == 0 { 0.3 } else { 0.5 };
            let opts = PersistenceOptions { r_cap, ..Default::default() };
            let got = triples(&persistence(&p, &opts).unwrap());
            let want = sorted(oracle::brute_force(&p, r_cap));
            assert_eq!(got, want, "trial {trial}");
        }
    }

    #[test]
    fn torus_loops_survive_on_a_grid() {
        // a 4x4 lattice wraps into a torus whose two generating cycles are essential at small caps
        let pts: Vec<[f64; 2]> =
            (0..16).map(|i| [-0.5 + 0.25 * (i % 4) as f64, -0.5 + 0.25 * (i / 4) as f64]).collect();
        let p = pattern(pts);
        let opts = PersistenceOptions { r_cap: 0.3, ..Default::default() };
        let got = triples(&persistence(&p, &opts).unwrap());
        assert_eq!(got, sorted(oracle::brute_force(&p, 0.3)));
    }

    #[test]
    fn size_cap_is_enforced() {
        let p = sample_binomial(50, &Window::unit(), 1);
        let opts = PersistenceOptions { max_points: 49, ..Default::default() };
        assert!(persistence(&p, &opts).is_err());
    }

    #[test]
    fn euler_endpoints() {
        let p = sample_binomial(40, &Window::unit(), 5);
        let pd = persistence(&p, &PersistenceOptions::default()).unwrap();
        let chi = euler_characteristic(&pd, &[0.0, 0.49]);
        assert_eq!(chi[0], 40.0);
        let essential1 = pd.pairs.iter().filter(|q| q.dim == 1 && q.essential).count() as f64;
        assert_eq!(chi[1], 1.0 - essential1);
    }
}
