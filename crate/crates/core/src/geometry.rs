//! Gaussian dyadic cubes, layers, admissibility transfer constants and
//! admissible cones.
//!
//! Cubes are stored by integer indices so coverage and disjointness can be
//! checked exactly. A cube of `Δ^γ_{k,l}` is `2^{-(k+l)}·(lattice + [0,1)ⁿ)`
//! and lies inside the layer `L_l`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{admissibility_m, dist, gamma_box, norm};
use crate::MAX_DIM;

/// Index of the layer `L_l` containing `x`:
/// `L_0 = [-1,1)ⁿ`, `L_l = [-2^l,2^l)ⁿ \ [-2^{l-1},2^{l-1})ⁿ`.
pub fn layer_index(x: &[f64]) -> u32 {
    let mut l = 0u32;
    let mut half = 1.0f64;
    while !x.iter().all(|&c| c >= -half && c < half) {
        l += 1;
        half *= 2.0;
        if l > 1100 {
            break;
        }
    }
    l
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "CubeRecord", from = "CubeRecord")]
pub struct GaussianCube {
    pub k: u32,
    pub l: u32,
    pub lattice: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct CubeRecord(u32, u32, Vec<i64>);

impl From<GaussianCube> for CubeRecord {
    fn from(q: GaussianCube) -> Self {
        CubeRecord(q.k, q.l, q.lattice)
    }
}

impl From<CubeRecord> for GaussianCube {
    fn from(r: CubeRecord) -> Self {
        GaussianCube {
            k: r.0,
            l: r.1,
            lattice: r.2,
        }
    }
}

/// Axis-aligned box `∏ [loᵢ, hiᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn gamma(&self) -> f64 {
        gamma_box(&self.lo, &self.hi)
    }
}

impl GaussianCube {
    pub fn dim(&self) -> usize {
        self.lattice.len()
    }

    pub fn side(&self) -> f64 {
        (-((self.k + self.l) as f64)).exp2()
    }

    pub fn diam(&self) -> f64 {
        self.side() * (self.dim() as f64).sqrt()
    }

    pub fn lo(&self) -> Vec<f64> {
        let s = self.side();
        self.lattice.iter().map(|&z| z as f64 * s).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        let s = self.side();
        self.lattice.iter().map(|&z| (z + 1) as f64 * s).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.lattice.iter().map(|&z| (z as f64 + 0.5) * s).collect()
    }

    pub fn as_box(&self) -> AxisBox {
        AxisBox {
            lo: self.lo(),
            hi: self.hi(),
        }
    }

    pub fn gamma(&self) -> f64 {
        gamma_box(&self.lo(), &self.hi())
    }

    /// `true` iff the cube lies inside `L_l` (exact integer test).
    pub fn in_layer(&self) -> bool {
        let scale = self.k + 2 * self.l; // layer boxes in units of the side length
        let outer = 1i64 << scale;
        let inside_outer = self.lattice.iter().all(|&z| z >= -outer && z < outer);
        if !inside_outer {
            return false;
        }
        if self.l == 0 {
            return true;
        }
        let inner = 1i64 << (scale - 1);
        !self.lattice.iter().all(|&z| z >= -inner && z < inner)
    }
}

/// Lazily enumerates `Δ^γ_{k,l}` in dimension `n`, lexicographic in the lattice.
pub struct LayerCubes {
    k: u32,
    l: u32,
    outer: i64,
    inner: Option<i64>,
    cursor: Option<Vec<i64>>,
}

impl LayerCubes {
    pub fn new(n: usize, k: u32, l: u32) -> Self {
        let scale = k + 2 * l;
        let outer = 1i64 << scale;
        let inner = if l == 0 { None } else { Some(1i64 << (scale - 1)) };
        LayerCubes {
            k,
            l,
            outer,
            inner,
            cursor: if n == 0 { None } else { Some(vec![-outer; n]) },
        }
    }

    fn advance(&mut self) {
        if let Some(cur) = self.cursor.as_mut() {
            for d in (0..cur.len()).rev() {
                cur[d] += 1;
                if cur[d] < self.outer {
                    return;
                }
                cur[d] = -self.outer;
            }
            self.cursor = None;
        }
    }

    fn in_hole(&self, z: &[i64]) -> bool {
        match self.inner {
            Some(h) => z.iter().all(|&c| c >= -h && c < h),
            None => false,
        }
    }
}

impl Iterator for LayerCubes {
    type Item = GaussianCube;

    fn next(&mut self) -> Option<GaussianCube> {
        loop {
            let cur = self.cursor.clone()?;
            if self.in_hole(&cur) {
                // Jump to the far side of the hole on the last axis.
                let h = self.inner.unwrap_or(0);
                let last = cur.len() - 1;
                let c = self.cursor.as_mut()?;
                c[last] = h - 1;
                self.advance();
                continue;
            }
            self.advance();
            return Some(GaussianCube {
                k: self.k,
                l: self.l,
                lattice: cur,
            });
        }
    }
}

/// Default cap on the number of cubes `cube_partition` may materialise.
pub const DEFAULT_CUBE_CAP: usize = 4_000_000;

/// All cubes of `Δ^γ_{k,l}` for `l ≤ max_layer`; they partition
/// `[-2^{max_layer}, 2^{max_layer})ⁿ`.
pub fn cube_partition(n: usize, k: u32, max_layer: u32) -> Result<Vec<GaussianCube>> {
    cube_partition_capped(n, k, max_layer, DEFAULT_CUBE_CAP)
}

pub fn cube_partition_capped(n: usize, k: u32, max_layer: u32, cap: usize) -> Result<Vec<GaussianCube>> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::Dimension(n));
    }
    let per_axis = 1u128 << (k + 2 * max_layer + 1);
    let total = per_axis.saturating_pow(n as u32);
    if total > cap as u128 {
        return Err(Error::invalid(format!(
            "partition with k={k}, max_layer={max_layer}, n={n} has {total} cubes (cap {cap})"
        )));
    }
    let mut out = Vec::with_capacity(total as usize);
    for l in 0..=max_layer {
        out.extend(LayerCubes::new(n, k, l));
    }
    Ok(out)
}

/// The box with the same centre as `q` and `alpha` times its side length.
pub fn scale_cube(q: &GaussianCube, alpha: f64) -> Result<AxisBox> {
    if !(alpha > 0.0) {
        return Err(Error::invalid("scale factor must be positive"));
    }
    let half = 0.5 * alpha * q.side();
    let c = q.center();
    Ok(AxisBox {
        lo: c.iter().map(|x| x - half).collect(),
        hi: c.iter().map(|x| x + half).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferConstant {
    pub a: f64,
    pub b: f64,
    pub value: f64,
}

/// `c_{a,b} = a(1 + ab)`: if `r ≤ a m(x)` and `|x - y| ≤ b r` then `r ≤ c_{a,b} m(y)`.
pub fn transfer_constant(a: f64, b: f64) -> Result<TransferConstant> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::invalid("transfer constant needs a, b > 0"));
    }
    Ok(TransferConstant {
        a,
        b,
        value: a * (1.0 + a * b),
    })
}

#[inline]
pub(crate) fn c_ab(a: f64, b: f64) -> f64 {
    a * (1.0 + a * b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeFlavor {
    /// Height bounded through the vertex: `t < a m(x)`.
    #[default]
    Standard,
    /// Height bounded through the point: `t < a m(y)`.
    Tilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    pub aperture: f64,
    pub scale: f64,
    #[serde(default)]
    pub flavor: ConeFlavor,
}

impl ConeParams {
    pub fn new(aperture: f64, scale: f64, flavor: ConeFlavor) -> Result<Self> {
        if !(aperture > 0.0 && scale > 0.0) {
            return Err(Error::invalid("cone parameters must be positive"));
        }
        Ok(ConeParams {
            aperture,
            scale,
            flavor,
        })
    }
}

/// Membership of `(y, t)` in the admissible cone with vertex `x`.
/// Both inequalities are strict.
pub fn cone_contains(x: &[f64], params: &ConeParams, y: &[f64], t: f64) -> bool {
    if !(t > 0.0) {
        return false;
    }
    let height_ref = match params.flavor {
        ConeFlavor::Standard => admissibility_m(x),
        ConeFlavor::Tilde => admissibility_m(y),
    };
    dist(x, y) < params.aperture * t && t < params.scale * height_ref
}

/// A sampled triple that broke an inequality that should hold exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub r: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmsymReport {
    pub a: f64,
    pub b: f64,
    pub samples: usize,
    pub c_ab: f64,
    /// max of `r / m(y)` over part (i) samples; must stay `≤ c_ab`.
    pub max_ratio_i: f64,
    /// max of `m(x) / ((1+b) m(y))` over part (ii) samples; must stay `≤ 1`.
    pub max_ratio_ii_lower: f64,
    /// max of `m(y) / ((2+2b) m(x))` over part (ii) samples; must stay `≤ 1`.
    pub max_ratio_ii_upper: f64,
    pub violations: Vec<Violation>,
}

/// Relative slack for comparisons that are sharp at boundary samples.
const ROUNDING_SLACK: f64 = 1e-12;

fn random_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let r = norm(&v);
        if r > 1e-3 && r <= 1.0 {
            return v.into_iter().map(|c| c / r).collect();
        }
    }
}

/// Points with log-uniform norm in `[1e-3, 100]`, plus the origin occasionally.
pub(crate) fn random_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    if rng.random::<f64>() < 0.02 {
        return vec![0.0; n];
    }
    let radius = 10f64.powf(-3.0 + 5.0 * rng.random::<f64>());
    random_direction(rng, n).into_iter().map(|c| c * radius).collect()
}

/// Draws a value in `(0, max]`, hitting `max` exactly a quarter of the time.
fn up_to<R: Rng>(rng: &mut R, max: f64) -> f64 {
    if rng.random::<f64>() < 0.25 {
        max
    } else {
        max * (1.0 - rng.random::<f64>())
    }
}

/// Samples both parts of the admissibility transfer lemma.
pub fn check_admsym(n: usize, a: f64, b: f64, samples: usize, seed: u64) -> Result<AdmsymReport> {
    if samples == 0 {
        return Err(Error::invalid("samples must be ≥ 1"));
    }
    let c = transfer_constant(a, b)?.value;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AdmsymReport {
        a,
        b,
        samples,
        c_ab: c,
        max_ratio_i: 0.0,
        max_ratio_ii_lower: 0.0,
        max_ratio_ii_upper: 0.0,
        violations: Vec::new(),
    };
    for _ in 0..samples {
        let x = random_point(&mut rng, n);
        let mx = admissibility_m(&x);
        // Part (i).
        let r = up_to(&mut rng, a * mx);
        let step = up_to(&mut rng, b * r);
        let dir = random_direction(&mut rng, n);
        let y: Vec<f64> = x.iter().zip(&dir).map(|(xi, d)| xi + step * d).collect();
        let my = admissibility_m(&y);
        let ratio = r / my;
        report.max_ratio_i = report.max_ratio_i.max(ratio);
        if ratio > c * (1.0 + ROUNDING_SLACK) {
            report.violations.push(Violation {
                x: x.clone(),
                y,
                r,
                bound: c * my,
            });
        }
        // Part (ii).
        let step = up_to(&mut rng, b * mx);
        let dir = random_direction(&mut rng, n);
        let y: Vec<f64> = x.iter().zip(&dir).map(|(xi, d)| xi + step * d).collect();
        let my = admissibility_m(&y);
        let lower = mx / ((1.0 + b) * my);
        let upper = my / ((2.0 + 2.0 * b) * mx);
        report.max_ratio_ii_lower = report.max_ratio_ii_lower.max(lower);
        report.max_ratio_ii_upper = report.max_ratio_ii_upper.max(upper);
        if lower > 1.0 + ROUNDING_SLACK || upper > 1.0 + ROUNDING_SLACK {
            report.violations.push(Violation {
                x,
                y,
                r: step,
                bound: (1.0 + b) * my,
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeBallReport {
    pub a: f64,
    pub samples: usize,
    /// max of `r / (2a(a+n) m(c_Q))`; must stay `≤ 1`.
    pub max_ratio: f64,
    pub violations: Vec<Violation>,
}

/// Random admissible balls meeting random cubes of `Δ^γ_0` (layers up to
/// `max_layer`) against `r ≤ 2a(a+n) m(c_Q)`.
pub fn check_cube_ball(n: usize, a: f64, max_layer: u32, samples: usize, seed: u64) -> Result<CubeBallReport> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::Dimension(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound_factor = 2.0 * a * (a + n as f64);
    let mut report = CubeBallReport {
        a,
        samples,
        max_ratio: 0.0,
        violations: Vec::new(),
    };
    let mut drawn = 0;
    while drawn < samples {
        let q = random_layer_cube(&mut rng, n, 0, max_layer);
        let lo = q.lo();
        let s = q.side();
        let p: Vec<f64> = lo.iter().map(|l| l + s * rng.random::<f64>()).collect();
        // Ball centre within a few admissible radii of p.
        let reach = a * admissibility_m(&p) * (1.0 + a);
        let dir = random_direction(&mut rng, n);
        let off = reach * rng.random::<f64>();
        let x: Vec<f64> = p.iter().zip(&dir).map(|(pi, d)| pi + off * d).collect();
        let rmax = a * admissibility_m(&x);
        let need = dist(&x, &p);
        if need > rmax {
            continue;
        }
        drawn += 1;
        let r = need + (rmax - need) * if rng.random::<f64>() < 0.25 { 1.0 } else { rng.random::<f64>() };
        let cq = q.center();
        let bound = bound_factor * admissibility_m(&cq);
        let ratio = r / bound;
        report.max_ratio = report.max_ratio.max(ratio);
        if ratio > 1.0 + ROUNDING_SLACK {
            report.violations.push(Violation { x, y: cq, r, bound });
        }
    }
    Ok(report)
}

/// Uniformly random layer in `0..=max_layer`, then a uniformly random cube
/// of `Δ^γ_{k,l}` by rejection from the outer box.
pub(crate) fn random_layer_cube<R: Rng>(rng: &mut R, n: usize, k: u32, max_layer: u32) -> GaussianCube {
    let l = rng.random_range(0..=max_layer);
    let outer = 1i64 << (k + 2 * l);
    loop {
        let lattice: Vec<i64> = (0..n).map(|_| rng.random_range(-outer..outer)).collect();
        let q = GaussianCube { k, l, lattice };
        if q.in_layer() {
            return q;
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiamReport {
    pub cubes: usize,
    pub formula_failures: usize,
    pub bound_failures: usize,
    pub center_bracket_failures: usize,
}

/// Checks `diam(Q) = 2^{-k-l}√n ≤ 2^{-k} n m(c_Q)` and, for `l ≥ 1`,
/// `2^{l-1} ≤ |c_Q| ≤ 2^l √n` on every given cube.
pub fn check_diam<'a>(cubes: impl IntoIterator<Item = &'a GaussianCube>) -> DiamReport {
    let mut rep = DiamReport {
        cubes: 0,
        formula_failures: 0,
        bound_failures: 0,
        center_bracket_failures: 0,
    };
    for q in cubes {
        rep.cubes += 1;
        let n = q.dim() as f64;
        let expected = (-((q.k + q.l) as f64)).exp2() * n.sqrt();
        let lo = q.lo();
        let hi = q.hi();
        let measured = dist(&lo, &hi);
        if (measured - expected).abs() > 4.0 * f64::EPSILON * expected || q.diam() != expected {
            rep.formula_failures += 1;
        }
        let c = q.center();
        if expected > (-(q.k as f64)).exp2() * n * admissibility_m(&c) * (1.0 + ROUNDING_SLACK) {
            rep.bound_failures += 1;
        }
        if q.l >= 1 {
            let cn = norm(&c);
            let lo_b = (q.l as f64 - 1.0).exp2();
            let hi_b = (q.l as f64).exp2() * n.sqrt();
            if cn < lo_b || cn > hi_b {
                rep.center_bracket_failures += 1;
            }
        }
    }
    rep
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeInclusionReport {
    pub aperture: f64,
    pub scale: f64,
    pub samples: usize,
    /// standard cone ⊄ tilde cone at scale `c_{a,A}`.
    pub standard_in_tilde_failures: usize,
    /// tilde cone ⊄ standard cone at scale `c_{a,A}`.
    pub tilde_in_standard_failures: usize,
}

/// Samples points of each cone flavour and tests membership in the other
/// flavour at the transferred scale `c_{a,A}`.
pub fn check_cone_inclusion(n: usize, aperture: f64, scale: f64, samples: usize, seed: u64) -> Result<ConeInclusionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let big = c_ab(scale, aperture);
    let std_cone = ConeParams::new(aperture, scale, ConeFlavor::Standard)?;
    let tilde_cone = ConeParams::new(aperture, scale, ConeFlavor::Tilde)?;
    let std_big = ConeParams::new(aperture, big, ConeFlavor::Standard)?;
    let tilde_big = ConeParams::new(aperture, big, ConeFlavor::Tilde)?;
    let mut rep = ConeInclusionReport {
        aperture,
        scale,
        samples,
        standard_in_tilde_failures: 0,
        tilde_in_standard_failures: 0,
    };
    let mut got_std = 0;
    let mut got_tilde = 0;
    let mut attempts = 0usize;
    while (got_std < samples || got_tilde < samples) && attempts < 1000 * samples.max(1) {
        attempts += 1;
        let x = random_point(&mut rng, n);
        // t up to a little beyond either height bound, y within the aperture.
        let t = 2.0 * big * (1.0 - rng.random::<f64>());
        let dir = random_direction(&mut rng, n);
        let off = aperture * t * rng.random::<f64>();
        let y: Vec<f64> = x.iter().zip(&dir).map(|(xi, d)| xi + off * d).collect();
        if got_std < samples && cone_contains(&x, &std_cone, &y, t) {
            got_std += 1;
            if !cone_contains(&x, &tilde_big, &y, t) {
                rep.standard_in_tilde_failures += 1;
            }
        }
        if got_tilde < samples && cone_contains(&x, &tilde_cone, &y, t) {
            got_tilde += 1;
            if !cone_contains(&x, &std_big, &y, t) {
                rep.tilde_in_standard_failures += 1;
            }
        }
    }
    Ok(rep)
}

/// Largest observed `γ(α∘Q)/γ(Q)` over all cubes with `k + l ≤ max_level`.
pub fn cube_doubling_constant(n: usize, alpha: f64, max_level: u32) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..=max_level {
        for l in 0..=(max_level - k) {
            for q in LayerCubes::new(n, k, l) {
                let g = q.gamma();
                if g <= 0.0 {
                    continue;
                }
                let big = scale_cube(&q, alpha)?.gamma();
                worst = worst.max(big / g);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn in_half_open_box(x: &[f64], half: f64) -> bool {
        x.iter().all(|&c| c >= -half && c < half)
    }

    /// Direct set-membership oracle on the half-open layer boxes.
    fn layer_oracle(x: &[f64]) -> u32 {
        if in_half_open_box(x, 1.0) {
            return 0;
        }
        (1..64)
            .find(|&l| in_half_open_box(x, (l as f64).exp2()) && !in_half_open_box(x, (l as f64 - 1.0).exp2()))
            .unwrap()
    }

    #[test]
    fn layer_examples() {
        assert_eq!(layer_index(&[0.0, 0.0]), 0);
        assert_eq!(layer_index(&[1.5, 0.0]), 1);
        // Left-closed boxes: -2 ∈ [-2, 2), so (-2, 0) sits in L_1, while (2, 0) is in L_2.
        assert_eq!(layer_index(&[-2.0, 0.0]), layer_oracle(&[-2.0, 0.0]));
        assert_eq!(layer_index(&[-2.0, 0.0]), 1);
        assert_eq!(layer_index(&[2.0, 0.0]), 2);
        assert_eq!(layer_index(&[-1.0]), 0);
        assert_eq!(layer_index(&[1.0]), 1);
    }

    #[test]
    fn single_layer_example_is_two_unit_cubes() {
        let cubes = cube_partition(1, 0, 0).unwrap();
        assert_eq!(cubes.len(), 2);
        assert_eq!(cubes[0].lo(), vec![-1.0]);
        assert_eq!(cubes[1].hi(), vec![1.0]);
        assert!(cubes.iter().all(|q| q.side() == 1.0));
    }

    #[test]
    fn partition_is_exact_and_additive() {
        for n in 1..=2usize {
            for k in 0..=2u32 {
                for max_layer in 0..=2u32 {
                    let cubes = cube_partition(n, k, max_layer).unwrap();
                    // Exact disjointness and coverage on the finest lattice.
                    let finest = k + max_layer;
                    let per = 1i64 << (finest + max_layer + 1);
                    let mut seen = HashSet::new();
                    for q in &cubes {
                        assert!(q.in_layer());
                        let shift = finest - (q.k + q.l);
                        let m = 1i64 << shift;
                        let mut idx = vec![0i64; n];
                        loop {
                            let cell: Vec<i64> = q.lattice.iter().zip(&idx).map(|(z, o)| z * m + o).collect();
                            assert!(seen.insert(cell), "overlap at {q:?}");
                            let mut d = 0;
                            while d < n {
                                idx[d] += 1;
                                if idx[d] < m {
                                    break;
                                }
                                idx[d] = 0;
                                d += 1;
                            }
                            if d == n {
                                break;
                            }
                        }
                    }
                    assert_eq!(seen.len() as i64, per.pow(n as u32));
                    let total: f64 = cubes.iter().map(|q| q.gamma()).sum();
                    let half = (max_layer as f64).exp2();
                    let target = gamma_box(&vec![-half; n], &vec![half; n]);
                    assert!((total - target).abs() < 1e-10, "{total} vs {target}");
                }
            }
        }
    }

    #[test]
    fn four_dimensional_layer_has_the_stated_diameter() {
        // Enumerated lazily; the cap on materialised partitions does not apply.
        let mut count = 0;
        for q in LayerCubes::new(4, 1, 2).take(200_000) {
            assert!(q.in_layer());
            assert_eq!(q.diam(), 0.25);
            count += 1;
        }
        assert_eq!(count, 200_000);
    }

    #[test]
    fn diam_bounds_hold_on_all_generated_cubes() {
        for n in 1..=3usize {
            for k in 0..=2u32 {
                let max_layer = if n == 3 { 2 } else { 4 };
                let cubes: Vec<_> = (0..=max_layer).flat_map(|l| LayerCubes::new(n, k, l)).collect();
                let rep = check_diam(&cubes);
                assert_eq!(rep.formula_failures, 0);
                assert_eq!(rep.bound_failures, 0);
                assert_eq!(rep.center_bracket_failures, 0);
            }
        }
    }

    #[test]
    fn scale_cube_examples() {
        let q = GaussianCube { k: 0, l: 0, lattice: vec![0, 0] };
        assert_eq!(scale_cube(&q, 1.0).unwrap(), q.as_box());
        let big = scale_cube(&q, 2.0).unwrap();
        assert_eq!(big.lo, vec![-0.5, -0.5]);
        assert_eq!(big.hi, vec![1.5, 1.5]);
        assert_eq!(big.center(), q.center());
        let c = cube_doubling_constant(1, 3.0, 6).unwrap();
        assert!(c.is_finite() && c >= 1.0);
    }

    #[test]
    fn transfer_constant_examples() {
        assert_eq!(transfer_constant(1.0, 2.0).unwrap().value, 3.0);
        let k = transfer_constant(1.0, 1.0).unwrap().value;
        assert_eq!(k, 2.0);
        assert_eq!(transfer_constant(1.0 + 2.0 * k, 2.0).unwrap().value, 55.0);
        assert!(transfer_constant(0.0, 1.0).is_err());
    }

    #[test]
    fn cone_examples() {
        let p = ConeParams::new(1.0, 1.0, ConeFlavor::Standard).unwrap();
        assert!(cone_contains(&[0.3], &p, &[0.3], 0.5));
        assert!(!cone_contains(&[0.0], &p, &[0.5], 0.4));
        // Strict inequalities.
        assert!(!cone_contains(&[0.0], &p, &[0.5], 0.5));
        assert!(!cone_contains(&[0.0], &p, &[0.0], 1.0));
        let rep = check_cone_inclusion(2, 1.0, 1.0, 10_000, 7).unwrap();
        assert_eq!(rep.standard_in_tilde_failures, 0);
        assert_eq!(rep.tilde_in_standard_failures, 0);
    }

    #[test]
    fn admsym_holds_and_degenerate_displacement_is_within_a() {
        let rep = check_admsym(2, 1.0, 2.0, 20_000, 1).unwrap();
        assert!(rep.violations.is_empty(), "{:?}", &rep.violations[..1]);
        assert!(rep.max_ratio_i <= 3.0 * (1.0 + 1e-12));
        // x = y: r / m(y) = r / m(x) ≤ a.
        for x in [[0.0, 0.0], [3.0, -1.0], [0.2, 0.9]] {
            let r = admissibility_m(&x);
            assert!(r / admissibility_m(&x) <= 1.0);
        }
    }

    #[test]
    fn cube_ball_lemma_holds() {
        let rep = check_cube_ball(2, 1.0, 4, 20_000, 3).unwrap();
        assert!(rep.violations.is_empty());
        assert!(rep.max_ratio <= 1.0);
    }

    #[test]
    fn cube_json_is_compact_records() {
        let q = GaussianCube { k: 1, l: 2, lattice: vec![-3, 4] };
        let s = serde_json::to_string(&vec![q.clone()]).unwrap();
        assert_eq!(s, "[[1,2,[-3,4]]]");
        let back: Vec<GaussianCube> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0], q);
    }
}
