//! Whitney decompositions of `O′ = {0 < d(z,F) < 2a m(z)}` and the
//! admissible covering of `O = {0 < d(x,F) ≤ a m(x)}` built from them.
//!
//! `F` is a finite point set. Distances to `∁O′ = F ∪ {ψ ≥ 0}` with
//! `ψ = d(·,F) − 2a m` are computed by sphere tracing along rays: `ψ` is
//! `(1+2a)`-Lipschitz, so steps of `−ψ/(1+2a)` never cross the boundary.
//! Cube tests sample a regular grid in each cube and turn sample values into
//! certified bounds with the Lipschitz constant of the sampled function.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{admissibility_m, dist, gamma_ball, is_admissible, Ball, Point};
use crate::special::cdf_diff;
use crate::MAX_DIM;

/// Dyadic cube `[index·2^exp, (index+1)·2^exp)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicCube {
    pub exp: i32,
    pub index: Vec<i64>,
}

impl DyadicCube {
    pub fn side(&self) -> f64 {
        f64::from(self.exp).exp2()
    }

    pub fn diam(&self) -> f64 {
        self.side() * (self.index.len() as f64).sqrt()
    }

    pub fn lo(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&i| i as f64 * s).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&i| (i as f64 + 0.5) * s).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let s = self.side();
        self.index.iter().zip(x).all(|(&i, &c)| (c / s).floor() as i64 == i)
    }

    pub fn children(&self) -> Vec<DyadicCube> {
        let n = self.index.len();
        (0..1usize << n)
            .map(|mask| DyadicCube {
                exp: self.exp - 1,
                index: (0..n).map(|d| 2 * self.index[d] + ((mask >> (n - 1 - d)) & 1) as i64).collect(),
            })
            .collect()
    }

    pub fn gamma(&self) -> f64 {
        let s = self.side();
        self.lo().iter().map(|&l| cdf_diff(l, l + s)).product()
    }

    /// Exact disjointness of two dyadic cubes.
    pub fn disjoint(&self, other: &DyadicCube) -> bool {
        let (big, small) = if self.exp >= other.exp { (self, other) } else { (other, self) };
        let shift = (big.exp - small.exp) as u32;
        big.index.iter().zip(&small.index).any(|(&b, &s)| (s >> shift) != b)
    }
}

/// The sets `O` and `O′` determined by a finite `F` and a scale `a`.
#[derive(Debug, Clone)]
pub struct Level {
    points: Vec<Vec<f64>>,
    a: f64,
    dim: usize,
}

impl Level {
    pub fn new(points: Vec<Vec<f64>>, a: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("F must be non-empty"));
        }
        let dim = points[0].len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Dimension(dim));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("F must consist of finite points"));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::invalid(format!("a must be positive, got {a}")));
        }
        Ok(Level { points, a, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dist_f(&self, x: &[f64]) -> f64 {
        self.points.iter().map(|p| dist(p, x)).fold(f64::INFINITY, f64::min)
    }

    pub fn in_o(&self, x: &[f64]) -> bool {
        let d = self.dist_f(x);
        d > 0.0 && d <= self.a * admissibility_m(x)
    }

    pub fn in_o_prime(&self, x: &[f64]) -> bool {
        let d = self.dist_f(x);
        d > 0.0 && d < 2.0 * self.a * admissibility_m(x)
    }

    fn psi(&self, x: &[f64]) -> f64 {
        self.dist_f(x) - 2.0 * self.a * admissibility_m(x)
    }

    fn lipschitz(&self) -> f64 {
        1.0 + 2.0 * self.a
    }

    /// Half-width `2^M` of a dyadic box containing `O′`.
    pub fn box_exponent(&self) -> i32 {
        let reach = self.points.iter().flatten().fold(0.0f64, |m, c| m.max(c.abs())) + 2.0 * self.a;
        reach.log2().ceil().max(0.0) as i32 + 1
    }

    /// Distance along the unit direction `dir` from `x` to the first point of
    /// `{ψ ≥ 0}`, or `cap` when there is none closer.
    fn march(&self, x: &[f64], dir: &[f64], cap: f64) -> f64 {
        let lip = self.lipschitz();
        let at = |s: f64| -> Vec<f64> { x.iter().zip(dir).map(|(a, b)| a + s * b).collect() };
        let mut s = 0.0;
        for _ in 0..10_000 {
            if s >= cap {
                return cap;
            }
            let p = self.psi(&at(s));
            if p >= 0.0 {
                return s;
            }
            let step = -p / lip;
            if step > 1e-7 * (1.0 + s) {
                s += step;
                continue;
            }
            // Close to a grazing boundary: bracket and bisect.
            let mut lo = s;
            let mut delta = step.max(1e-15);
            let mut hi = loop {
                let cand = lo + delta;
                if cand >= cap {
                    return if self.psi(&at(cap)) >= 0.0 { self.bisect(&at, lo, cap) } else { cap };
                }
                if self.psi(&at(cand)) >= 0.0 {
                    break cand;
                }
                lo = cand;
                delta *= 2.0;
            };
            hi = self.bisect(&at, lo, hi);
            return hi;
        }
        s.min(cap)
    }

    fn bisect(&self, at: &dyn Fn(f64) -> Vec<f64>, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.psi(&at(mid)) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// `d(x, ∁O′)`.
    pub fn dist_complement(&self, x: &[f64]) -> f64 {
        let df = self.dist_f(x);
        if df == 0.0 {
            return 0.0;
        }
        let p = self.psi(x);
        if p >= 0.0 {
            return 0.0;
        }
        if df <= -p / self.lipschitz() {
            return df;
        }
        let mut best = df;
        match self.dim {
            1 => {
                for dir in [-1.0, 1.0] {
                    best = best.min(self.march(x, &[dir], best));
                }
            }
            2 => {
                const RAYS: usize = 64;
                let cap = best;
                let ray = |th: f64| self.march(x, &[th.cos(), th.sin()], cap);
                let step = std::f64::consts::TAU / RAYS as f64;
                let mut best_th = None;
                for k in 0..RAYS {
                    let th = k as f64 * step;
                    let d = ray(th);
                    if d < best {
                        best = d;
                        best_th = Some(th);
                    }
                }
                if let Some(th0) = best_th {
                    // Golden-section search around the best ray.
                    let g = 0.5 * (5f64.sqrt() - 1.0);
                    let (mut lo, mut hi) = (th0 - step, th0 + step);
                    let mut c = hi - g * (hi - lo);
                    let mut d = lo + g * (hi - lo);
                    let mut fc = ray(c);
                    let mut fd = ray(d);
                    for _ in 0..40 {
                        if fc < fd {
                            hi = d;
                            d = c;
                            fd = fc;
                            c = hi - g * (hi - lo);
                            fc = ray(c);
                        } else {
                            lo = c;
                            c = d;
                            fc = fd;
                            d = lo + g * (hi - lo);
                            fd = ray(d);
                        }
                    }
                    best = best.min(fc).min(fd);
                }
            }
            _ => {
                // Fibonacci sphere directions.
                const RAYS: usize = 256;
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                for k in 0..RAYS {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / RAYS as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    best = best.min(self.march(x, &[rho * th.cos(), rho * th.sin(), z], best));
                }
            }
        }
        best
    }
}

/// Sample values on the regular `s^n` grid of a cube.
struct CubeSamples {
    points: Vec<Vec<f64>>,
    /// Largest distance from a point of the cube to the nearest sample.
    cover_radius: f64,
}

fn cube_samples(q: &DyadicCube, per_axis: usize) -> CubeSamples {
    let n = q.index.len();
    let lo = q.lo();
    let s = q.side();
    let step = s / (per_axis - 1) as f64;
    let total = per_axis.pow(n as u32);
    let points = (0..total)
        .map(|mut k| {
            let mut p = vec![0.0; n];
            for d in (0..n).rev() {
                p[d] = lo[d] + (k % per_axis) as f64 * step;
                k /= per_axis;
            }
            p
        })
        .collect();
    CubeSamples { points, cover_radius: 0.5 * step * (n as f64).sqrt() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhitneyOptions {
    /// Subdivision depth below the root cubes.
    pub max_depth: u32,
    /// Sample points per cube axis (at least 3).
    pub samples_per_axis: usize,
    /// Largest acceptable γ-mass of cubes left unresolved at `max_depth`.
    pub residual_tol: f64,
}

impl WhitneyOptions {
    pub fn for_dim(n: usize) -> Self {
        WhitneyOptions {
            max_depth: match n {
                1 => 48,
                2 => 24,
                _ => 14,
            },
            samples_per_axis: 5,
            residual_tol: 1e-6,
        }
    }
}

/// A Whitney cube with the certified bracket of `d(Q, ∁O′)` used to accept it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhitneyCube {
    pub cube: DyadicCube,
    /// Lower bound of `d(Q, ∁O′)`.
    pub dist_lower: f64,
    /// Upper bound of `d(Q, ∁O′)`.
    pub dist_upper: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhitneyDecomposition {
    pub delta: f64,
    pub cubes: Vec<WhitneyCube>,
    /// Cubes still failing the size condition at the depth cap.
    pub residual_cubes: usize,
    pub residual_mass: f64,
    pub max_depth_reached: u32,
}

enum Verdict {
    Keep(WhitneyCube),
    Split,
    Drop,
}

fn classify(level: &Level, q: &DyadicCube, delta: f64, per_axis: usize) -> Verdict {
    let cs = cube_samples(q, per_axis);
    let a = level.a;
    // Disjoint from O when d(·,F) − a m > 0 on all of Q; that function is (1+a)-Lipschitz.
    let gap = cs
        .points
        .iter()
        .map(|p| level.dist_f(p) - a * admissibility_m(p))
        .fold(f64::INFINITY, f64::min);
    if gap > (1.0 + a) * cs.cover_radius {
        return Verdict::Drop;
    }
    let upper = cs.points.iter().map(|p| level.dist_complement(p)).fold(f64::INFINITY, f64::min);
    let lower = upper - cs.cover_radius;
    if lower > 0.0 && q.diam() <= delta * lower {
        Verdict::Keep(WhitneyCube { cube: q.clone(), dist_lower: lower, dist_upper: upper })
    } else {
        Verdict::Split
    }
}

/// Dyadic Whitney cubes of `O′` that meet `O` (up to the sampling used to
/// certify disjointness), each with `diam(Q) ≤ δ d(Q, ∁O′)`; the lower
/// bound `(δ/4) d(Q, ∁O′) ≤ diam(Q)` follows from the parent having been
/// split and is re-checked by [`check_whitney`].
pub fn whitney_decompose(level: &Level, delta: f64, opts: &WhitneyOptions) -> Result<WhitneyDecomposition> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::invalid(format!("delta must lie in (0, 1/2], got {delta}")));
    }
    if opts.samples_per_axis < 3 {
        return Err(Error::invalid("need at least 3 samples per cube axis"));
    }
    let n = level.dim;
    let m = level.box_exponent();
    let mut frontier: Vec<DyadicCube> = (0..1usize << n)
        .map(|mask| DyadicCube {
            exp: m,
            index: (0..n).map(|d| if (mask >> (n - 1 - d)) & 1 == 1 { 0 } else { -1 }).collect(),
        })
        .collect();
    let mut kept = Vec::new();
    let mut depth = 0;
    loop {
        let verdicts: Vec<Verdict> =
            frontier.par_iter().map(|q| classify(level, q, delta, opts.samples_per_axis)).collect();
        let mut next = Vec::new();
        for (q, v) in frontier.into_iter().zip(verdicts) {
            match v {
                Verdict::Keep(w) => kept.push(w),
                Verdict::Split => next.push(q),
                Verdict::Drop => {}
            }
        }
        if next.is_empty() {
            break;
        }
        if depth == opts.max_depth {
            let residual_mass: f64 = next.iter().map(DyadicCube::gamma).sum();
            if residual_mass > opts.residual_tol {
                return Err(Error::DepthExceeded(depth));
            }
            return Ok(finish(kept, delta, next.len(), residual_mass, depth));
        }
        frontier = next.iter().flat_map(DyadicCube::children).collect();
        depth += 1;
    }
    Ok(finish(kept, delta, 0, 0.0, depth))
}

fn finish(mut cubes: Vec<WhitneyCube>, delta: f64, residual_cubes: usize, residual_mass: f64, depth: u32) -> WhitneyDecomposition {
    cubes.sort_by(|a, b| b.cube.exp.cmp(&a.cube.exp).then_with(|| a.cube.index.cmp(&b.cube.index)));
    WhitneyDecomposition { delta, cubes, residual_cubes, residual_mass, max_depth_reached: depth }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WhitneyCheck {
    pub cubes: usize,
    pub overlaps: usize,
    pub upper_failures: usize,
    pub lower_failures: usize,
    /// Smallest `diam / (δ d(Q,∁O′))` and largest `(δ/4) d(Q,∁O′) / diam`,
    /// with `d(Q,∁O′)` re-bracketed on a finer sample grid.
    pub max_upper_ratio: f64,
    pub max_lower_ratio: f64,
}

/// Re-checks disjointness and both Whitney size bounds, bracketing
/// `d(Q, ∁O′)` on a `per_axis^n` sample grid independent of the one used
/// during construction.
pub fn check_whitney(level: &Level, dec: &WhitneyDecomposition, per_axis: usize) -> WhitneyCheck {
    let delta = dec.delta;
    let rows: Vec<(bool, bool, f64, f64)> = dec
        .cubes
        .par_iter()
        .map(|w| {
            let cs = cube_samples(&w.cube, per_axis.max(3));
            let upper = cs.points.iter().map(|p| level.dist_complement(p)).fold(f64::INFINITY, f64::min);
            let lower = (upper - cs.cover_radius).max(w.dist_lower);
            let diam = w.cube.diam();
            let up_ratio = diam / (delta * lower);
            let lo_ratio = 0.25 * delta * upper.min(w.dist_upper) / diam;
            (up_ratio > 1.0, lo_ratio > 1.0, up_ratio, lo_ratio)
        })
        .collect();
    let mut rep = WhitneyCheck { cubes: dec.cubes.len(), ..Default::default() };
    for r in &rows {
        rep.upper_failures += r.0 as usize;
        rep.lower_failures += r.1 as usize;
        rep.max_upper_ratio = rep.max_upper_ratio.max(r.2);
        rep.max_lower_ratio = rep.max_lower_ratio.max(r.3);
    }
    // Sorted by size then index, so a cube can only contain later ones; use
    // a hash of ancestors for the exact test.
    let mut seen: HashMap<DyadicCube, ()> = HashMap::new();
    for w in &dec.cubes {
        let mut anc = w.cube.clone();
        let top = dec.cubes.first().map(|c| c.cube.exp).unwrap_or(anc.exp);
        loop {
            if seen.contains_key(&anc) {
                rep.overlaps += 1;
                break;
            }
            if anc.exp >= top {
                break;
            }
            anc = DyadicCube { exp: anc.exp + 1, index: anc.index.iter().map(|i| i >> 1).collect() };
        }
        seen.insert(w.cube.clone(), ());
    }
    rep
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverOptions {
    pub whitney: WhitneyOptions,
    /// Points of `O` sampled to measure coverage.
    pub coverage_samples: usize,
    /// Cells per axis of the grid measuring `γ(O)` and `γ(O′)`.
    pub measure_cells: usize,
    pub seed: u64,
}

impl CoverOptions {
    pub fn for_dim(n: usize) -> Self {
        CoverOptions {
            whitney: WhitneyOptions::for_dim(n),
            coverage_samples: 10_000,
            measure_cells: match n {
                1 => 1 << 16,
                2 => 1 << 9,
                _ => 1 << 6,
            },
            seed: 0x5eed,
        }
    }

    /// Finer cube sampling and measure grid, `2^k` times per axis.
    pub fn refined(&self, k: u32) -> Self {
        CoverOptions {
            whitney: WhitneyOptions {
                samples_per_axis: (self.whitney.samples_per_axis - 1) * (1 << k) + 1,
                ..self.whitney
            },
            measure_cells: self.measure_cells << k,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuterShell {
    pub beta: f64,
    pub m_const: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringResult {
    pub centers: Vec<Point>,
    pub distances: Vec<f64>,
    pub params: CoverParams,
    /// `Σ γ(B(x_k, c d(x_k, F)))`
    pub measure_sum: f64,
    /// `γ(O)`
    pub target_measure: f64,
    /// `γ(O′)`
    pub outer_measure: f64,
    pub coverage_fraction: f64,
    pub coverage_samples: usize,
    pub delta: f64,
    pub whitney: WhitneyDecomposition,
    /// Cubes with no sample point in `O`; they are not used as centres.
    pub cubes_without_center: usize,
    /// Selection balls `B(c_k, diam Q_k)` that are not admissible at the
    /// scale `½a(1 + a/4)` forced by the construction.
    pub inadmissible_selection_balls: usize,
    /// Selection balls not admissible at scale `a`.
    pub inadmissible_at_a: usize,
    pub outer_shell: OuterShell,
}

impl CoveringResult {
    pub fn constant(&self) -> f64 {
        if self.target_measure > 0.0 {
            self.measure_sum / self.target_measure
        } else {
            0.0
        }
    }
}

/// The largest `β ∈ (0, 1/3)` with `(2/3 + β)(1 + βa) < 1` and
/// `M = 1 + 8√n/β · (1 + 2a)`.
pub fn outer_shell_constant(a: f64, n: usize) -> OuterShell {
    let ok = |b: f64| (2.0 / 3.0 + b) * (1.0 + b * a) < 1.0;
    let (mut lo, mut hi) = (0.0, 1.0 / 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    OuterShell { beta: lo, m_const: 1.0 + 8.0 * (n as f64).sqrt() / lo * (1.0 + 2.0 * a) }
}

/// `x_k`: the sample point of `Q ∩ O` nearest the centre of `Q`, trying
/// successively finer sample grids.
fn pick_center(level: &Level, q: &DyadicCube, start: usize) -> Option<Vec<f64>> {
    let c = q.center();
    let mut per_axis = start.max(3);
    let limit = match level.dim {
        1 => 1025,
        2 => 65,
        _ => 17,
    };
    while per_axis <= limit {
        let cs = cube_samples(q, per_axis);
        let best = cs
            .points
            .into_iter()
            .filter(|p| level.in_o(p) && q.contains(p))
            .min_by(|x, y| dist(x, &c).total_cmp(&dist(y, &c)));
        if best.is_some() {
            return best;
        }
        per_axis = 2 * per_axis - 1;
    }
    None
}

/// Midpoint-rule `γ(O)` and `γ(O′)` on a uniform grid over the root box.
fn level_measures(level: &Level, cells: usize) -> (f64, f64) {
    let n = level.dim;
    let half = f64::from(level.box_exponent()).exp2();
    let h = 2.0 * half / cells as f64;
    let masses: Vec<f64> = (0..cells)
        .map(|j| {
            let lo = -half + j as f64 * h;
            cdf_diff(lo, lo + h)
        })
        .collect();
    let total = cells.pow(n as u32);
    const CHUNK: usize = 1 << 14;
    // Fixed chunks summed in order keep the result independent of scheduling.
    let parts: Vec<(f64, f64)> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = (0.0, 0.0);
            let mut x = vec![0.0; n];
            for mut k in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let mut w = 1.0;
                for d in (0..n).rev() {
                    let j = k % cells;
                    k /= cells;
                    x[d] = -half + (j as f64 + 0.5) * h;
                    w *= masses[j];
                }
                if level.in_o(&x) {
                    acc.0 += w;
                }
                if level.in_o_prime(&x) {
                    acc.1 += w;
                }
            }
            acc
        })
        .collect();
    parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
}

/// Draws up to `count` points of `O` by rejection from the root box,
/// half of them from the shell `d(x,F) ≤ a` around a random point of `F`.
pub fn sample_o<R: Rng>(level: &Level, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = level.dim;
    let half = f64::from(level.box_exponent()).exp2();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < 200 * count.max(1) {
        attempts += 1;
        let x: Vec<f64> = if attempts.is_multiple_of(2) {
            (0..n).map(|_| rng.random_range(-half..half)).collect()
        } else {
            let p = &level.points[rng.random_range(0..level.points.len())];
            p.iter().map(|c| c + rng.random_range(-level.a..level.a)).collect()
        };
        if level.in_o(&x) {
            out.push(x);
        }
    }
    out
}

/// The covering of `O` by balls `B(x_k, b d(x_k, F))` from the Whitney
/// cubes of `O′` with `δ = min(½, b)`.
pub fn cover_admissible(points: &[Vec<f64>], params: CoverParams, opts: &CoverOptions) -> Result<CoveringResult> {
    for (name, v) in [("a", params.a), ("b", params.b), ("c", params.c)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    let level = Level::new(points.to_vec(), params.a)?;
    let delta = params.b.min(0.5);
    let whitney = whitney_decompose(&level, delta, &opts.whitney)?;
    let picks: Vec<Option<Vec<f64>>> = whitney
        .cubes
        .par_iter()
        .map(|w| pick_center(&level, &w.cube, opts.whitney.samples_per_axis))
        .collect();
    let a = params.a;
    let mut centers = Vec::new();
    let mut distances = Vec::new();
    let mut without = 0;
    let mut bad_sel = 0;
    let mut bad_at_a = 0;
    for (w, p) in whitney.cubes.iter().zip(picks) {
        let Some(x) = p else {
            without += 1;
            continue;
        };
        let sel = Ball::new(Point::from(w.cube.center()), w.cube.diam())?;
        if !is_admissible(&sel, 0.5 * a * (1.0 + 0.25 * a) * (1.0 + 1e-12)) {
            bad_sel += 1;
        }
        if !is_admissible(&sel, a) {
            bad_at_a += 1;
        }
        distances.push(level.dist_f(&x));
        centers.push(x);
    }
    let measure_sum: f64 = centers
        .par_iter()
        .zip(&distances)
        .map(|(x, &d)| {
            let b = Ball::new(Point::from(x.clone()), params.c * d)?;
            Ok(gamma_ball(&b, 1e-10)?.value)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum();
    let (target, outer) = level_measures(&level, opts.measure_cells);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let sample = sample_o(&level, opts.coverage_samples, &mut rng);
    let covered = sample
        .par_iter()
        .filter(|x| centers.iter().zip(&distances).any(|(c, &d)| dist(c, x) < params.b * d))
        .count();
    let coverage_fraction = if sample.is_empty() { 1.0 } else { covered as f64 / sample.len() as f64 };
    Ok(CoveringResult {
        centers: centers.into_iter().map(Point::from).collect(),
        distances,
        params,
        measure_sum,
        target_measure: target,
        outer_measure: outer,
        coverage_fraction,
        coverage_samples: sample.len(),
        delta,
        whitney,
        cubes_without_center: without,
        inadmissible_selection_balls: bad_sel,
        inadmissible_at_a: bad_at_a,
        outer_shell: outer_shell_constant(a, level.dim),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClaimReport {
    pub samples: usize,
    pub bound: f64,
    pub max_ratio: f64,
    pub violations: Vec<Vec<f64>>,
}

/// Samples `x ∈ O` and checks `d(x,F) ≤ 3 max(1,a) d(x, ∁O′)`.
pub fn check_claim_distance(points: &[Vec<f64>], a: f64, samples: usize, seed: u64) -> Result<ClaimReport> {
    let level = Level::new(points.to_vec(), a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = sample_o(&level, samples, &mut rng);
    // Approach F itself.
    for (i, p) in level.points.iter().enumerate().take(samples / 10 + 1) {
        for k in 1..=8 {
            let mut x = p.clone();
            x[i % level.dim] += (-(k as f64) * 2.0).exp2();
            if level.in_o(&x) {
                xs.push(x);
            }
        }
    }
    let bound = 3.0 * a.max(1.0);
    let ratios: Vec<f64> = xs.par_iter().map(|x| level.dist_f(x) / level.dist_complement(x)).collect();
    let mut rep = ClaimReport { samples: xs.len(), bound, max_ratio: 0.0, violations: Vec::new() };
    for (x, r) in xs.iter().zip(ratios) {
        rep.max_ratio = rep.max_ratio.max(r);
        if r > bound * (1.0 + 1e-9) {
            rep.violations.push(x.clone());
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin1() -> Vec<Vec<f64>> {
        vec![vec![0.0]]
    }

    #[test]
    fn level_sets_for_origin() {
        let l = Level::new(origin1(), 1.0).unwrap();
        assert!(l.in_o(&[0.5]) && l.in_o(&[-1.0]) && !l.in_o(&[1.01]) && !l.in_o(&[0.0]));
        assert!(l.in_o_prime(&[1.4]) && !l.in_o_prime(&[1.42]));
        // ∁O′ = {0} ∪ {|z| ≥ √2}
        assert!((l.dist_complement(&[0.5]) - 0.5).abs() < 1e-12);
        assert!((l.dist_complement(&[1.2]) - (2f64.sqrt() - 1.2)).abs() < 1e-9);
        assert!(Level::new(vec![], 1.0).is_err());
    }

    #[test]
    fn dist_complement_against_brute_force_2d() {
        let l = Level::new(vec![vec![0.3, -0.2], vec![-1.5, 1.0]], 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = [rng.random_range(-2.5..2.0), rng.random_range(-1.5..2.5)];
            if !l.in_o_prime(&x) {
                continue;
            }
            let d = l.dist_complement(&x);
            // Brute force over a polar grid.
            let mut brute = l.dist_f(&x);
            for i in 0..720 {
                let th = i as f64 * std::f64::consts::TAU / 720.0;
                for j in 1..=4000 {
                    let s = j as f64 * 1e-3;
                    if s >= brute {
                        break;
                    }
                    let z = [x[0] + s * th.cos(), x[1] + s * th.sin()];
                    if !l.in_o_prime(&z) {
                        brute = s;
                        break;
                    }
                }
            }
            assert!(d <= brute + 1e-9 && d >= brute - 2e-3, "{x:?}: {d} vs {brute}");
        }
    }

    #[test]
    fn whitney_for_origin_in_1d() {
        let l = Level::new(origin1(), 1.0).unwrap();
        let dec = whitney_decompose(&l, 0.5, &WhitneyOptions::for_dim(1)).unwrap();
        assert!(!dec.cubes.is_empty());
        let chk = check_whitney(&l, &dec, 9);
        assert_eq!(chk.overlaps, 0);
        assert_eq!(chk.upper_failures, 0);
        assert_eq!(chk.lower_failures, 0);
        // Every cube lies in O′ by the brute-force membership oracle.
        for w in &dec.cubes {
            let cs = cube_samples(&w.cube, 33);
            for p in &cs.points {
                assert!(l.in_o_prime(p), "{p:?} of {:?}", w.cube);
            }
        }
    }

    #[test]
    fn dyadic_disjointness() {
        let a = DyadicCube { exp: 0, index: vec![1, 2] };
        let b = DyadicCube { exp: -2, index: vec![5, 9] };
        let c = DyadicCube { exp: -2, index: vec![8, 9] };
        assert!(!a.disjoint(&b));
        assert!(a.disjoint(&c));
        assert_eq!(a.children().len(), 4);
    }

    #[test]
    fn cover_origin_1d() {
        let r = cover_admissible(&origin1(), CoverParams { a: 1.0, b: 1.0, c: 1.0 }, &CoverOptions::for_dim(1)).unwrap();
        assert_eq!(r.coverage_fraction, 1.0);
        assert!(r.coverage_samples >= 10_000);
        // γ(O) = γ([-1,1]).
        assert!((r.target_measure - 0.682_689_492_137_086).abs() < 1e-4);
        assert!(r.constant().is_finite() && r.constant() > 1.0);
        assert_eq!(r.inadmissible_selection_balls, 0);
        for x in &r.centers {
            assert!(Level::new(origin1(), 1.0).unwrap().in_o(x.as_slice()));
        }
    }

    #[test]
    fn two_far_points_give_two_clusters() {
        let f = vec![vec![-5.0], vec![5.0]];
        let r = cover_admissible(&f, CoverParams { a: 1.0, b: 1.0, c: 1.0 }, &CoverOptions::for_dim(1)).unwrap();
        let level = Level::new(f, 1.0).unwrap();
        assert!(r.centers.iter().all(|x| level.in_o(x.as_slice())));
        assert!(r.centers.iter().any(|x| x.as_slice()[0] < 0.0));
        assert!(r.centers.iter().any(|x| x.as_slice()[0] > 0.0));
        assert!(r.centers.iter().all(|x| (x.as_slice()[0].abs() - 5.0).abs() <= 1.0 / 4.8 + 1e-12));
    }

    #[test]
    fn claim_holds_for_origin() {
        let rep = check_claim_distance(&origin1(), 1.0, 2000, 1).unwrap();
        assert!(rep.violations.is_empty());
        assert!(rep.max_ratio <= 3.0);
        let l = Level::new(origin1(), 1.0).unwrap();
        assert!((l.dist_f(&[0.5]) / l.dist_complement(&[0.5]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outer_shell_beta() {
        let s = outer_shell_constant(1.0, 1);
        assert!((2.0 / 3.0 + s.beta) * (1.0 + s.beta) < 1.0);
        assert!((2.0 / 3.0 + s.beta + 1e-9) * (1.0 + s.beta + 1e-9) >= 1.0 - 1e-8);
    }
}
