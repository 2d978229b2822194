//! Uniform cell-centred grids, sampled fields and ball queries on them.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::cdf_diff;
use crate::MAX_DIM;

/// Uniform grid over `[-half_width, half_width]ⁿ` with cells of side `h`.
/// Nodes sit at cell centres `-half_width + (j + ½)h`; node indices are
/// row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub half_width: f64,
    pub h: f64,
    pub per_axis: usize,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, h: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Dimension(dim));
        }
        if !(half_width > 0.0) || !(h > 0.0) || !half_width.is_finite() {
            return Err(Error::invalid(format!("grid needs positive half-width and spacing, got {half_width}, {h}")));
        }
        let cells = 2.0 * half_width / h;
        if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) {
            return Err(Error::invalid(format!("spacing {h} does not divide the box width {}", 2.0 * half_width)));
        }
        let per_axis = cells.round() as usize;
        if per_axis.checked_pow(dim as u32).is_none_or(|t| t > 1 << 26) {
            return Err(Error::invalid(format!("grid with {per_axis}^{dim} nodes is too large")));
        }
        Ok(Grid { dim, half_width, h, per_axis })
    }

    pub fn len(&self) -> usize {
        self.per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of node `j` along any axis.
    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + (j as f64 + 0.5) * self.h
    }

    pub fn axis(&self) -> Vec<f64> {
        (0..self.per_axis).map(|j| self.coord(j)).collect()
    }

    pub fn multi_index(&self, mut node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for d in (0..self.dim).rev() {
            idx[d] = node % self.per_axis;
            node /= self.per_axis;
        }
        idx
    }

    pub fn node(&self, node: usize) -> Vec<f64> {
        self.multi_index(node).into_iter().map(|j| self.coord(j)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|c| c.abs() <= self.half_width)
    }

    /// γ-mass of each cell along one axis.
    pub fn axis_masses(&self) -> Vec<f64> {
        (0..self.per_axis)
            .map(|j| {
                let lo = -self.half_width + j as f64 * self.h;
                cdf_diff(lo, lo + self.h)
            })
            .collect()
    }

    /// γ-mass of every cell.
    pub fn cell_masses(&self) -> Vec<f64> {
        let axis = self.axis_masses();
        (0..self.len())
            .map(|node| self.multi_index(node).iter().map(|&j| axis[j]).product())
            .collect()
    }

    /// Nearest node to `x` (clamped to the box).
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut node = 0;
        for &c in x {
            let j = ((c + self.half_width) / self.h).floor().clamp(0.0, (self.per_axis - 1) as f64) as usize;
            node = node * self.per_axis + j;
        }
        node
    }

    /// Grid with spacing `h / 2^k` on the same box.
    pub fn refined(&self, k: u32) -> Result<Self> {
        Grid::new(self.dim, self.half_width, self.h / f64::from(1u32 << k))
    }
}

/// A field sampled on a grid, optionally with a time axis (values are then
/// stored time-major: `values[it * grid.len() + node]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub grid: Grid,
    pub times: Option<Vec<f64>>,
    pub values: Vec<f64>,
    pub meta: FieldMeta,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub operator: String,
    pub source: String,
    pub params: BTreeMap<String, f64>,
    /// Nodes where the operator fell back to a proxy value.
    pub flagged: usize,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>, meta: FieldMeta) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field values must be finite"));
        }
        Ok(GridField { grid, times: None, values, meta })
    }

    pub fn with_times(grid: Grid, times: Vec<f64>, values: Vec<f64>, meta: FieldMeta) -> Result<Self> {
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("time axis must be strictly increasing"));
        }
        if values.len() != grid.len() * times.len() {
            return Err(Error::invalid("values do not match grid and time axis"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field values must be finite"));
        }
        Ok(GridField { grid, times: Some(times), values, meta })
    }

    /// Samples `f` at every node.
    pub fn sample<F: Fn(&[f64]) -> f64 + Sync>(grid: Grid, meta: FieldMeta, f: F) -> Result<Self> {
        let values: Vec<f64> = (0..grid.len()).into_par_iter().map(|i| f(&grid.node(i))).collect();
        GridField::new(grid, values, meta)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Values at the nodes of one time slice (or all values without a time axis).
    pub fn slice(&self, it: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[it * n..(it + 1) * n]
    }
}

/// `γ({x: g(x) > σ})` as the γ-mass of the cells whose value exceeds `σ`.
pub fn distribution_function(g: &GridField, sigma: f64) -> f64 {
    distribution_with(&g.values, &g.grid.cell_masses(), sigma)
}

pub(crate) fn distribution_with(values: &[f64], masses: &[f64], sigma: f64) -> f64 {
    values.iter().zip(masses).filter(|(v, _)| **v > sigma).map(|(_, m)| m).sum()
}

/// Sorted view of a field for evaluating its distribution function at many
/// levels.
#[derive(Debug, Clone)]
pub struct Distribution {
    /// Values ascending.
    values: Vec<f64>,
    /// `tail[i] = γ-mass of cells with index ≥ i` in the sorted order.
    tail: Vec<f64>,
}

impl Distribution {
    pub fn new(g: &GridField) -> Self {
        Self::from_parts(&g.values, &g.grid.cell_masses())
    }

    pub fn from_parts(values: &[f64], masses: &[f64]) -> Self {
        let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(masses.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut tail = vec![0.0; pairs.len() + 1];
        for i in (0..pairs.len()).rev() {
            tail[i] = tail[i + 1] + pairs[i].1;
        }
        Distribution {
            values: pairs.iter().map(|p| p.0).collect(),
            tail,
        }
    }

    /// `γ({g > σ})`.
    pub fn at(&self, sigma: f64) -> f64 {
        let i = self.values.partition_point(|&v| v <= sigma);
        self.tail[i]
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// `‖g‖_{L¹(γ)}` as `Σ |g| · cell mass`.
pub fn l1_gamma_norm(g: &GridField) -> f64 {
    l1_with(&g.values, &g.grid.cell_masses())
}

pub(crate) fn l1_with(values: &[f64], masses: &[f64]) -> f64 {
    values.iter().zip(masses).map(|(v, m)| v.abs() * m).sum()
}

/// `∫₀^∞ γ({|g| > σ}) dσ` by the trapezoid rule on `points` levels spaced
/// geometrically from `max·1e-6` to `max`, plus the initial segment
/// `[0, max·1e-6]` bounded by `γ({g ≠ 0})`. An independent route to the
/// `L¹(γ)` norm.
pub fn layer_cake_integral(g: &GridField, points: usize) -> f64 {
    let abs: Vec<f64> = g.values.iter().map(|v| v.abs()).collect();
    let dist = Distribution::from_parts(&abs, &g.grid.cell_masses());
    let max = dist.max();
    if max <= 0.0 {
        return 0.0;
    }
    let points = points.max(2);
    let lo = max * 1e-6;
    let ratio = (max / lo).powf(1.0 / (points - 1) as f64);
    let mut total = lo * dist.at(0.0);
    let mut s_prev = lo;
    let mut d_prev = dist.at(lo);
    for i in 1..points {
        let s = if i + 1 == points { max } else { lo * ratio.powi(i as i32) };
        let d = dist.at(s);
        total += 0.5 * (s - s_prev) * (d + d_prev);
        s_prev = s;
        d_prev = d;
    }
    total
}

/// Per-line cumulative sums supporting γ-weighted ball averages of a nodal
/// field with fractional end cells.
///
/// Cell masses span many orders of magnitude along a line, so a plain prefix
/// difference loses everything far from the origin. Sums are accumulated
/// from each end of the line towards the middle and a query only ever
/// subtracts partial sums taken from the nearer end.
pub(crate) struct BallSums<'g> {
    grid: &'g Grid,
    wg: LineSums,
    w: LineSums,
    values: &'g [f64],
}

struct LineSums {
    n: usize,
    cells: Vec<f64>,
    /// `left[line*(n+1) + j] = Σ_{i<j} cells`
    left: Vec<f64>,
    /// `right[line*(n+1) + j] = Σ_{i≥j} cells`
    right: Vec<f64>,
}

impl LineSums {
    fn new(n: usize, cells: Vec<f64>) -> Self {
        let lines = cells.len() / n;
        let mut left = vec![0.0; lines * (n + 1)];
        let mut right = vec![0.0; lines * (n + 1)];
        left.par_chunks_mut(n + 1).zip(right.par_chunks_mut(n + 1)).enumerate().for_each(|(line, (l, r))| {
            let c = &cells[line * n..(line + 1) * n];
            for j in 0..n {
                l[j + 1] = l[j] + c[j];
            }
            for j in (0..n).rev() {
                r[j] = r[j + 1] + c[j];
            }
        });
        LineSums { n, cells, left, right }
    }

    /// Sum over the fractional cell range `[u_lo, u_hi]` of one line.
    fn range(&self, line: usize, u_lo: f64, u_hi: f64) -> f64 {
        let n = self.n;
        let mid = (n / 2) as f64;
        let base = line * (n + 1);
        let cells = &self.cells[line * n..(line + 1) * n];
        let left = |u: f64| {
            let j = (u.floor() as usize).min(n);
            if j == n {
                self.left[base + n]
            } else {
                self.left[base + j] + (u - j as f64) * cells[j]
            }
        };
        let right = |u: f64| {
            let j = (u.floor() as usize).min(n);
            if j == n {
                0.0
            } else {
                self.right[base + j + 1] + (1.0 - (u - j as f64)) * cells[j]
            }
        };
        if u_hi <= mid {
            left(u_hi) - left(u_lo)
        } else if u_lo >= mid {
            right(u_lo) - right(u_hi)
        } else {
            (left(mid) - left(u_lo)) + (right(mid) - right(u_hi))
        }
    }
}

impl<'g> BallSums<'g> {
    pub fn new(grid: &'g Grid, masses: &[f64], values: &'g [f64]) -> Self {
        let n = grid.per_axis;
        let wg = masses.iter().zip(values).map(|(m, v)| m * v).collect();
        BallSums {
            grid,
            wg: LineSums::new(n, wg),
            w: LineSums::new(n, masses.to_vec()),
            values,
        }
    }

    /// γ-weighted average of the field over `B(c, r)`; the nearest node value
    /// when the ball misses every line.
    pub fn average(&self, c: &[f64], r: f64) -> f64 {
        let (sg, sw) = self.sums(c, r);
        if sw > 0.0 {
            sg / sw
        } else {
            self.values[self.grid.nearest(c)]
        }
    }

    /// `(Σ w·g, Σ w)` over the part of `B(c, r)` inside the box.
    pub fn sums(&self, c: &[f64], r: f64) -> (f64, f64) {
        let g = self.grid;
        let n = g.per_axis;
        let last = c[g.dim - 1];
        let mut sg = 0.0;
        let mut sw = 0.0;
        let mut visit = |line: usize, d2: f64| {
            let half = (r * r - d2).sqrt();
            let u_lo = ((last - half + g.half_width) / g.h).clamp(0.0, n as f64);
            let u_hi = ((last + half + g.half_width) / g.h).clamp(0.0, n as f64);
            if u_hi <= u_lo {
                return;
            }
            sg += self.wg.range(line, u_lo, u_hi);
            sw += self.w.range(line, u_lo, u_hi);
        };
        for_lines(g, c, r, false, &mut visit);
        (sg, sw)
    }
}

/// Calls `visit(line, d²)` for every line along the last axis whose
/// transverse distance `d` from `c` satisfies `d < r` (or `d ≤ r` when
/// `closed`).
fn for_lines(g: &Grid, c: &[f64], r: f64, closed: bool, visit: &mut dyn FnMut(usize, f64)) {
    let n = g.per_axis;
    let inside = |d2: f64| if closed { d2 <= r * r } else { d2 < r * r };
    let range = |x: f64| -> (usize, usize) {
        let lo = (((x - r + g.half_width) / g.h - 0.5).floor().max(0.0)) as usize;
        let hi = (((x + r + g.half_width) / g.h - 0.5).ceil().max(0.0) as usize).min(n - 1);
        (lo, hi)
    };
    match g.dim {
        1 => visit(0, 0.0),
        2 => {
            let (lo, hi) = range(c[0]);
            for i in lo..=hi {
                let d2 = (g.coord(i) - c[0]).powi(2);
                if inside(d2) {
                    visit(i, d2);
                }
            }
        }
        _ => {
            let (lo0, hi0) = range(c[0]);
            let (lo1, hi1) = range(c[1]);
            for i in lo0..=hi0 {
                let d0 = (g.coord(i) - c[0]).powi(2);
                if !inside(d0) {
                    continue;
                }
                for j in lo1..=hi1 {
                    let d2 = d0 + (g.coord(j) - c[1]).powi(2);
                    if inside(d2) {
                        visit(i * n + j, d2);
                    }
                }
            }
        }
    }
}

/// Per-line sparse tables answering the maximum of a nodal field over the
/// nodes of an open ball.
pub(crate) struct BallMax<'g> {
    grid: &'g Grid,
    /// `levels[k][line * n + j] = max(values[line, j .. j + 2^k])`
    levels: Vec<Vec<f64>>,
}

impl<'g> BallMax<'g> {
    pub fn new(grid: &'g Grid, values: &[f64]) -> Self {
        let n = grid.per_axis;
        let mut levels = vec![values.to_vec()];
        let mut span = 1;
        while 2 * span <= n {
            let prev = levels.last().unwrap();
            let mut next = vec![f64::NEG_INFINITY; values.len()];
            next.par_chunks_mut(n).enumerate().for_each(|(line, row)| {
                let src = &prev[line * n..(line + 1) * n];
                for j in 0..=n - 2 * span {
                    row[j] = src[j].max(src[j + span]);
                }
            });
            levels.push(next);
            span *= 2;
        }
        BallMax { grid, levels }
    }

    /// `max{values(y): y node, |y - c| < r}`; `-∞` when no node qualifies.
    pub fn max(&self, c: &[f64], r: f64) -> f64 {
        let g = self.grid;
        let n = g.per_axis;
        let last = c[g.dim - 1];
        let mut best = f64::NEG_INFINITY;
        let mut visit = |line: usize, d2: f64| {
            let half = (r * r - d2).sqrt();
            // Nodes with |coord(j) - last| < half.
            let a = (last - half + g.half_width) / g.h - 0.5;
            let b = (last + half + g.half_width) / g.h - 0.5;
            let mut lo = a.floor() + 1.0;
            let mut hi = b.ceil() - 1.0;
            lo = lo.max(0.0);
            hi = hi.min((n - 1) as f64);
            if hi < lo {
                return;
            }
            let (lo, hi) = (lo as usize, hi as usize);
            let len = hi - lo + 1;
            let k = usize::BITS - 1 - len.leading_zeros();
            let tab = &self.levels[k as usize];
            let base = line * n;
            let m = tab[base + lo].max(tab[base + hi + 1 - (1 << k)]);
            if m > best {
                best = m;
            }
        };
        for_lines(g, c, r, false, &mut visit);
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = Grid::new(2, 2.0, 0.5).unwrap();
        assert_eq!(g.per_axis, 8);
        assert_eq!(g.len(), 64);
        assert_eq!(g.node(0), vec![-1.75, -1.75]);
        assert_eq!(g.node(9), vec![-1.25, -1.25]);
        assert_eq!(g.nearest(&[-1.3, -1.2]), 9);
        assert!(Grid::new(1, 1.0, 0.3).is_err());
        assert!(Grid::new(4, 1.0, 0.5).is_err());
        let total: f64 = g.cell_masses().iter().sum();
        assert!((total - crate::measure::gamma_box(&[-2.0, -2.0], &[2.0, 2.0])).abs() < 1e-14);
    }

    #[test]
    fn l1_and_distribution_examples() {
        let g = Grid::new(1, 16.0, 1.0 / 32.0).unwrap();
        let one = GridField::sample(g.clone(), FieldMeta::default(), |_| 1.0).unwrap();
        assert!((l1_gamma_norm(&one) - 1.0).abs() < 1e-10);
        assert_eq!(distribution_function(&one, 2.0), 0.0);
        assert!((distribution_function(&one, 1e-9) - 1.0).abs() < 1e-10);
        let half = GridField::sample(g.clone(), FieldMeta::default(), |x| if x[0] > 0.0 { 1.0 } else { 0.0 }).unwrap();
        assert!((l1_gamma_norm(&half) - 0.5).abs() < 1e-12);
        let abs = GridField::sample(g, FieldMeta::default(), |x| x[0].abs()).unwrap();
        let expected = (2.0 / std::f64::consts::PI).sqrt();
        assert!((l1_gamma_norm(&abs) - expected).abs() < 1e-3);
        let lc = layer_cake_integral(&abs, 256);
        assert!((lc / l1_gamma_norm(&abs) - 1.0).abs() < 0.01);
    }

    #[test]
    fn distribution_is_monotone_and_right_continuous() {
        let g = Grid::new(2, 4.0, 0.125).unwrap();
        let f = GridField::sample(g, FieldMeta::default(), |x| (-(x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
        let d = Distribution::new(&f);
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let s = i as f64 / 200.0;
            let v = d.at(s);
            assert!(v <= prev);
            assert!((v - distribution_function(&f, s)).abs() < 1e-13);
            prev = v;
        }
    }

    #[test]
    fn ball_average_of_constant_and_linear() {
        for dim in 1..=3 {
            let g = Grid::new(dim, 3.0, 0.125).unwrap();
            let masses = g.cell_masses();
            let ones = vec![2.5; g.len()];
            let s = BallSums::new(&g, &masses, &ones);
            for r in [0.01, 0.3, 1.0, 10.0] {
                let c = vec![0.3; dim];
                assert!((s.average(&c, r) - 2.5).abs() < 1e-12);
            }
            // Odd function about a centred ball averages to ~0.
            let lin: Vec<f64> = (0..g.len()).map(|i| g.node(i)[dim - 1]).collect();
            let s = BallSums::new(&g, &masses, &lin);
            assert!(s.average(&vec![0.0; dim], 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn ball_mass_approximates_gamma_ball() {
        let g = Grid::new(2, 6.0, 1.0 / 64.0).unwrap();
        let masses = g.cell_masses();
        let ones = vec![1.0; g.len()];
        let s = BallSums::new(&g, &masses, &ones);
        let (_, w) = s.sums(&[0.5, -0.25], 1.0);
        let exact = crate::measure::ball_quadrature(&[0.5, -0.25], 1.0, 32);
        assert!((w / exact - 1.0).abs() < 2e-3, "{w} vs {exact}");
    }

    #[test]
    fn ball_max_matches_brute_force() {
        let g = Grid::new(2, 2.0, 0.25).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 101) as f64).collect();
        let bm = BallMax::new(&g, &vals);
        for &(cx, cy, r) in &[(0.125, 0.125, 0.1), (0.125, -0.375, 0.6), (1.0, 1.0, 1.3), (-1.875, 0.0, 5.0)] {
            let c = [cx, cy];
            let brute = (0..g.len())
                .filter(|&i| crate::measure::dist(&g.node(i), &c) < r)
                .map(|i| vals[i])
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(bm.max(&c, r), brute, "ball {c:?} {r}");
        }
    }
}
