//! Point patterns on the periodic square window `[-s, s)^2`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::{rng_for, stream};

pub type Point = [f64; 2];

/// The flat torus `[-s, s)^2`. `s` is the half side length.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Window {
    s: f64,
}

impl Window {
    pub fn new(s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::invalid(format!("window half side must be > 0, got {s}")));
        }
        Ok(Window { s })
    }

    /// The unit-area window used throughout the experiments, `s = 1/2`.
    pub fn unit() -> Self {
        Window { s: 0.5 }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn side(&self) -> f64 {
        2.0 * self.s
    }

    pub fn area(&self) -> f64 {
        self.side() * self.side()
    }

    /// Canonical representative of `x` modulo `2s`, in `[-s, s)`.
    #[inline]
    pub fn wrap(&self, x: f64) -> f64 {
        let side = self.side();
        let mut r = x - side * ((x + self.s) / side).floor();
        // floor() can leave r on the wrong side of a boundary by one ulp
        if r >= self.s {
            r -= side;
        }
        if r < -self.s {
            r += side;
        }
        r
    }

    #[inline]
    pub fn wrap_point(&self, p: Point) -> Point {
        [self.wrap(p[0]), self.wrap(p[1])]
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        p.iter().all(|&c| c >= -self.s && c < self.s)
    }

    /// Representative of `a - b` with each coordinate in `[-s, s)`.
    #[inline]
    pub fn torus_diff(&self, a: Point, b: Point) -> Point {
        [self.wrap(a[0] - b[0]), self.wrap(a[1] - b[1])]
    }

    #[inline]
    pub fn dist2(&self, a: Point, b: Point) -> f64 {
        let d = self.torus_diff(a, b);
        d[0] * d[0] + d[1] * d[1]
    }

    #[inline]
    pub fn dist(&self, a: Point, b: Point) -> f64 {
        self.dist2(a, b).sqrt()
    }
}

/// A simple finite point configuration on a [`Window`].
///
/// Points are stored canonicalized and no two are bitwise identical.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    window: Window,
    points: Vec<Point>,
}

impl PointPattern {
    /// Validates that every point lies in the window and that the pattern is simple.
    pub fn new(window: Window, points: Vec<Point>) -> Result<Self> {
        let s = window.s();
        let mut seen = HashSet::with_capacity(points.len());
        for (index, p) in points.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) || !window.contains(*p) {
                return Err(Error::OutOfWindow { index, x: p[0], y: p[1], s });
            }
            // +0.0 and -0.0 are the same location
            let key = ((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits());
            if !seen.insert(key) {
                return Err(Error::DuplicatePoint { index, x: p[0], y: p[1] });
            }
        }
        Ok(PointPattern { window, points })
    }

    /// Canonicalizes arbitrary real coordinates onto the torus first.
    pub fn from_wrapped(window: Window, points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let points = points.into_iter().map(|p| window.wrap_point(p)).collect();
        Self::new(window, points)
    }

    pub fn empty(window: Window) -> Self {
        PointPattern { window, points: Vec::new() }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// Flattened `[x0, y0, x1, y1, ...]` coordinates.
    pub fn flat(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| [p[0], p[1]]).collect()
    }

    /// Point set comparison ignoring storage order.
    pub fn same_set(&self, other: &PointPattern) -> bool {
        let key = |p: &Point| ((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits());
        let a: HashSet<_> = self.points.iter().map(key).collect();
        let b: HashSet<_> = other.points.iter().map(key).collect();
        self.window == other.window && a == b
    }

    /// Smallest pairwise torus distance, `None` for fewer than two points.
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        if self.len() < 2 {
            return None;
        }
        let grid = CellGrid::new(self.window, &self.points, self.window.side() / 64.0);
        let mut best = f64::INFINITY;
        for (i, &p) in self.points.iter().enumerate() {
            if let Some((_, d2)) = grid.nearest(p, Some(i)) {
                best = best.min(d2);
            }
        }
        Some(best.sqrt())
    }
}

/// `x -> A x + b` with `A` one of the eight signed permutation matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    a: [[i8; 2]; 2],
    b: Point,
}

impl RigidTransform {
    pub fn new(a: [[i8; 2]; 2], b: Point) -> Result<Self> {
        let ata = mat_mul(transpose(a), a);
        if ata != [[1, 0], [0, 1]] {
            return Err(Error::invalid(format!("matrix {a:?} is not orthogonal")));
        }
        if !(b[0].is_finite() && b[1].is_finite()) {
            return Err(Error::invalid("translation must be finite"));
        }
        Ok(RigidTransform { a, b })
    }

    pub fn identity() -> Self {
        RigidTransform { a: [[1, 0], [0, 1]], b: [0.0, 0.0] }
    }

    pub fn translation(b: Point) -> Self {
        RigidTransform { a: [[1, 0], [0, 1]], b }
    }

    /// Counter-clockwise rotation by `quarter_turns * 90` degrees about the origin.
    pub fn rotation(quarter_turns: i32) -> Self {
        let mut a = [[1i8, 0], [0, 1]];
        for _ in 0..quarter_turns.rem_euclid(4) {
            a = mat_mul([[0, -1], [1, 0]], a);
        }
        RigidTransform { a, b: [0.0, 0.0] }
    }

    /// Mirror `x -> -x`.
    pub fn flip_x() -> Self {
        RigidTransform { a: [[-1, 0], [0, 1]], b: [0.0, 0.0] }
    }

    /// Mirror across the diagonal, `(x, y) -> (y, x)`.
    pub fn transpose() -> Self {
        RigidTransform { a: [[0, 1], [1, 0]], b: [0.0, 0.0] }
    }

    /// All eight orthogonal integer matrices.
    pub fn point_group() -> Vec<[[i8; 2]; 2]> {
        let mut out = Vec::with_capacity(8);
        for q in 0..4 {
            let r = Self::rotation(q).a;
            out.push(r);
            out.push(mat_mul(r, [[-1, 0], [0, 1]]));
        }
        out
    }

    pub fn matrix(&self) -> [[i8; 2]; 2] {
        self.a
    }

    pub fn offset(&self) -> Point {
        self.b
    }

    /// `self` applied after `other`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let ab = self.apply_linear(other.b);
        RigidTransform {
            a: mat_mul(self.a, other.a),
            b: [ab[0] + self.b[0], ab[1] + self.b[1]],
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let at = transpose(self.a);
        let inv = RigidTransform { a: at, b: [0.0, 0.0] };
        let b = inv.apply_linear(self.b);
        RigidTransform { a: at, b: [-b[0], -b[1]] }
    }

    #[inline]
    pub fn apply_linear(&self, x: Point) -> Point {
        let a = self.a;
        [
            f64::from(a[0][0]) * x[0] + f64::from(a[0][1]) * x[1],
            f64::from(a[1][0]) * x[0] + f64::from(a[1][1]) * x[1],
        ]
    }

    #[inline]
    pub fn apply_point(&self, w: &Window, x: Point) -> Point {
        let y = self.apply_linear(x);
        w.wrap_point([y[0] + self.b[0], y[1] + self.b[1]])
    }

    /// Maps every atom; the point order is preserved.
    pub fn apply(&self, p: &PointPattern) -> PointPattern {
        let w = p.window();
        let pts = p.points().iter().map(|&x| self.apply_point(&w, x)).collect();
        // an injective map of a simple pattern stays simple up to rounding;
        // keep the unchecked constructor so round-off never turns into an error
        PointPattern { window: w, points: pts }
    }
}

fn transpose(a: [[i8; 2]; 2]) -> [[i8; 2]; 2] {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn mat_mul(a: [[i8; 2]; 2], b: [[i8; 2]; 2]) -> [[i8; 2]; 2] {
    let mut c = [[0i8; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Uniform subset of exactly `target_count` points, in original order.
pub fn random_thin(p: &PointPattern, target_count: usize, seed: u64) -> Result<PointPattern> {
    if target_count > p.len() {
        return Err(Error::invalid(format!(
            "cannot thin {} points to {target_count}",
            p.len()
        )));
    }
    let mut rng = rng_for(seed, stream::THINNING);
    let mut keep = index::sample(&mut rng, p.len(), target_count).into_vec();
    keep.sort_unstable();
    let points = keep.into_iter().map(|i| p.points[i]).collect();
    Ok(PointPattern { window: p.window, points })
}

/// Text serialization: a header line then one `x,y` pair per line.
pub fn format_pattern(p: &PointPattern) -> String {
    let mut out = String::with_capacity(48 * (p.len() + 1));
    let _ = writeln!(out, "# pointsynth v1 s={} n={}", p.window.s(), p.len());
    for q in &p.points {
        // Display on f64 prints the shortest string that round-trips
        let _ = writeln!(out, "{},{}", q[0], q[1]);
    }
    out
}

pub fn parse_pattern(text: &str, path: &Path) -> Result<PointPattern> {
    let perr = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
    let (s, n) = parse_header(header, "# pointsynth v1").map_err(|m| perr(1, m))?;
    let n = n.ok_or_else(|| perr(1, "header lacks n=".into()))?;
    let window = Window::new(s).map_err(|e| perr(1, e.to_string()))?;
    let mut points = Vec::with_capacity(n);
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let (xs, ys) = line
            .split_once(',')
            .ok_or_else(|| perr(lineno, format!("expected `x,y`, got `{line}`")))?;
        let x = parse_finite(xs).map_err(|m| perr(lineno, m))?;
        let y = parse_finite(ys).map_err(|m| perr(lineno, m))?;
        points.push([x, y]);
    }
    if points.len() != n {
        return Err(perr(1, format!("header says n={n} but file has {} points", points.len())));
    }
    PointPattern::new(window, points)
}

pub fn write_pattern(p: &PointPattern, path: &Path) -> Result<()> {
    std::fs::write(path, format_pattern(p)).map_err(|e| Error::io(path, e))
}

pub fn read_pattern(path: &Path) -> Result<PointPattern> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pattern(&text, path)
}

pub(crate) fn parse_finite(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: `{}`", s.trim()))?;
    if !v.is_finite() {
        return Err(format!("non-finite value `{}`", s.trim()));
    }
    Ok(v)
}

/// Parses `<magic> s=<float> n=<int>` (also used with `M=` by raster files).
pub(crate) fn parse_header(
    line: &str,
    magic: &str,
) -> std::result::Result<(f64, Option<usize>), String> {
    let rest = line
        .trim()
        .strip_prefix(magic)
        .ok_or_else(|| format!("expected header starting with `{magic}`"))?;
    let mut s = None;
    let mut n = None;
    for tok in rest.split_whitespace() {
        match tok.split_once('=') {
            Some(("s", v)) => s = Some(parse_finite(v)?),
            Some(("n", v)) | Some(("M", v)) => {
                n = Some(v.parse::<usize>().map_err(|_| format!("bad count `{v}`"))?)
            }
            _ => return Err(format!("unexpected header token `{tok}`")),
        }
    }
    Ok((s.ok_or("header lacks s=")?, n))
}

/// Uniform bucket grid over the torus for radius and nearest-neighbour
/// queries. Points can be moved after construction.
#[derive(Debug, Clone)]
pub(crate) struct CellGrid {
    window: Window,
    cells: usize,
    cell_size: f64,
    buckets: Vec<Vec<usize>>,
    points: Vec<Point>,
}

impl CellGrid {
    pub fn new(window: Window, points: &[Point], target_cell: f64) -> Self {
        let cells = ((window.side() / target_cell).floor() as usize).clamp(1, 1024);
        let cell_size = window.side() / cells as f64;
        let mut grid = CellGrid {
            window,
            cells,
            cell_size,
            buckets: vec![Vec::new(); cells * cells],
            points: points.to_vec(),
        };
        for (i, &p) in points.iter().enumerate() {
            let c = grid.cell_of(p);
            grid.buckets[c].push(i);
        }
        grid
    }

    /// Grid with about `per_cell` points per cell on average.
    pub fn with_density(window: Window, points: &[Point], per_cell: f64) -> Self {
        let n = points.len().max(1) as f64;
        Self::new(window, points, window.side() * (per_cell / n).sqrt())
    }

    fn cell_of(&self, p: Point) -> usize {
        let cx = (((p[0] + self.window.s()) / self.cell_size) as usize).min(self.cells - 1);
        let cy = (((p[1] + self.window.s()) / self.cell_size) as usize).min(self.cells - 1);
        cy * self.cells + cx
    }

    fn cell_xy(&self, p: Point) -> (isize, isize) {
        let c = self.cell_of(p);
        ((c % self.cells) as isize, (c / self.cells) as isize)
    }

    fn bucket(&self, cx: isize, cy: isize) -> &[usize] {
        let n = self.cells as isize;
        &self.buckets[(cy.rem_euclid(n) * n + cx.rem_euclid(n)) as usize]
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn move_point(&mut self, i: usize, to: Point) {
        let from = self.cell_of(self.points[i]);
        let dest = self.cell_of(to);
        self.points[i] = to;
        if from != dest {
            let b = &mut self.buckets[from];
            let pos = b.iter().position(|&j| j == i).expect("point missing from its cell");
            b.swap_remove(pos);
            self.buckets[dest].push(i);
        }
    }

    /// Calls `f(index, squared distance)` for every point within `r` of `p`.
    pub fn for_each_within(&self, p: Point, r: f64, mut f: impl FnMut(usize, f64)) {
        let r2 = r * r;
        let n = self.cells as isize;
        let reach = (r / self.cell_size).ceil() as isize;
        let (cx, cy) = self.cell_xy(p);
        let mut visit = |x: isize, y: isize| {
            for &i in self.bucket(x, y) {
                let d2 = self.window.dist2(p, self.points[i]);
                if d2 <= r2 {
                    f(i, d2);
                }
            }
        };
        if 2 * reach + 1 >= n {
            for y in 0..n {
                for x in 0..n {
                    visit(x, y);
                }
            }
        } else {
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    visit(cx + dx, cy + dy);
                }
            }
        }
    }

    /// Nearest stored point to `p`, skipping `exclude`.
    pub fn nearest(&self, p: Point, exclude: Option<usize>) -> Option<(usize, f64)> {
        self.k_nearest(p, 1, exclude).into_iter().next()
    }

    /// The `k` nearest stored points as `(index, squared distance)`, ascending.
    pub fn k_nearest(&self, p: Point, k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        let available = self.points.len() - usize::from(exclude.is_some());
        let k = k.min(available);
        if k == 0 {
            return Vec::new();
        }
        let (cx, cy) = self.cell_xy(p);
        let n = self.cells as isize;
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        let visit = |x: isize, y: isize, best: &mut Vec<(usize, f64)>| {
            for &i in self.bucket(x, y) {
                if Some(i) == exclude {
                    continue;
                }
                let d2 = self.window.dist2(p, self.points[i]);
                if best.len() < k || d2 < best[best.len() - 1].1 {
                    let pos = best.partition_point(|e| e.1 <= d2);
                    best.insert(pos, (i, d2));
                    best.truncate(k);
                }
            }
        };
        let mut ring = 0isize;
        while 2 * ring + 1 <= n {
            // cells on the square ring at Chebyshev distance `ring`
            if ring == 0 {
                visit(cx, cy, &mut best);
            } else {
                for dx in -ring..=ring {
                    visit(cx + dx, cy - ring, &mut best);
                    visit(cx + dx, cy + ring, &mut best);
                }
                for dy in (-ring + 1)..ring {
                    visit(cx - ring, cy + dy, &mut best);
                    visit(cx + ring, cy + dy, &mut best);
                }
            }
            // every unvisited point is at least `ring * cell_size` away
            if best.len() == k {
                let safe = ring as f64 * self.cell_size;
                if best[k - 1].1 <= safe * safe {
                    return best;
                }
            }
            ring += 1;
        }
        // rings exhausted without a certificate: scan everything
        let mut all: Vec<(usize, f64)> = (0..self.points.len())
            .filter(|&i| Some(i) != exclude)
            .map(|i| (i, self.window.dist2(p, self.points[i])))
            .collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1));
        all.truncate(k);
        all
    }
}
