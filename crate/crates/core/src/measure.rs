//! Gaussian density, the admissibility function and γ-measures of balls and
//! axis-aligned boxes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::special::{self, cdf_diff, phi, INV_SQRT_2PI};
use crate::MAX_DIM;

/// A point of ℝⁿ, `1 ≤ n ≤ 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("a point needs at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        Ok(Point { coords })
    }

    pub fn origin(n: usize) -> Self {
        Point {
            coords: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point { coords }
    }
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

#[inline]
pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Closed Euclidean ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureMethod {
    Exact1d,
    ProductExact,
    Quadrature,
    MonteCarlo,
}

/// A γ-measure with an error bound and the method that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub error: f64,
    pub method: MeasureMethod,
    pub seed: Option<u64>,
}

impl MeasureEstimate {
    fn new(value: f64, error: f64, method: MeasureMethod) -> Self {
        MeasureEstimate {
            value: value.clamp(0.0, 1.0),
            error,
            method,
            seed: None,
        }
    }
}

/// Accuracy policy for measure computations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasureConfig {
    /// Largest per-panel quadrature order tried before falling back to Monte Carlo.
    pub max_quad_order: usize,
    /// Monte Carlo sample cap.
    pub max_mc_samples: usize,
    /// Root seed; each call derives its own sub-seed from the ball parameters.
    pub seed: u64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            max_quad_order: 128,
            max_mc_samples: 1 << 22,
            seed: 0x5eed,
        }
    }
}

/// Default tolerance of quadrature-based ball measures.
pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
/// Default tolerance of Monte Carlo ball measures.
pub const DEFAULT_MC_TOL: f64 = 1e-4;

/// `m(x) = min(1, 1/|x|)`.
pub fn admissibility_m(x: &[f64]) -> f64 {
    let r = norm(x);
    if r <= 1.0 {
        1.0
    } else {
        1.0 / r
    }
}

/// Standard Gaussian density in dimension `x.len()`.
pub fn gaussian_density(x: &[f64]) -> f64 {
    let n = x.len() as i32;
    let sq: f64 = x.iter().map(|c| c * c).sum();
    INV_SQRT_2PI.powi(n) * (-0.5 * sq).exp()
}

/// `true` iff `r ≤ a·m(center)`; the boundary case is admissible.
pub fn is_admissible(b: &Ball, a: f64) -> bool {
    b.radius <= a * admissibility_m(b.center.as_slice())
}

pub fn gamma_ball(b: &Ball, tol: f64) -> Result<MeasureEstimate> {
    gamma_ball_with(b, tol, &MeasureConfig::default())
}

/// γ(B(x, r)).
///
/// One dimension uses the exact CDF difference. In dimensions two and three
/// the outer coordinates are integrated by Gauss–Legendre after the
/// substitution `s = r sin θ` and the innermost coordinate exactly through the
/// CDF; the order doubles until two successive values agree to `tol`. If the
/// order cap is hit first, stratified Monte Carlo takes over.
pub fn gamma_ball_with(b: &Ball, tol: f64, cfg: &MeasureConfig) -> Result<MeasureEstimate> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let n = b.dim();
    if n == 0 || n > MAX_DIM {
        return Err(Error::Dimension(n));
    }
    let c = b.center.as_slice();
    let r = b.radius;
    if n == 1 {
        let v = cdf_diff(c[0] - r, c[0] + r);
        return Ok(MeasureEstimate::new(v, 4.0 * f64::EPSILON, MeasureMethod::Exact1d));
    }
    let mut order = 8;
    let mut prev = ball_quadrature(c, r, order);
    while order * 2 <= cfg.max_quad_order {
        order *= 2;
        let cur = ball_quadrature(c, r, order);
        let err = (cur - prev).abs();
        if err <= tol {
            return Ok(MeasureEstimate::new(cur, err, MeasureMethod::Quadrature));
        }
        prev = cur;
    }
    gamma_ball_monte_carlo(b, tol, cfg)
}

/// Fixed-order iterated quadrature for γ(B(c, r)), `n ∈ {2, 3}`; exact for `n = 1`.
pub fn ball_quadrature(c: &[f64], r: f64, order: usize) -> f64 {
    match c.len() {
        1 => cdf_diff(c[0] - r, c[0] + r),
        _ => {
            let (head, tail) = (c[0], &c[1..]);
            // Only the part of the chord where φ(head + s) is non-negligible matters.
            let s_lo = (-12.0 - head).max(-r);
            let s_hi = (12.0 - head).min(r);
            if s_hi <= s_lo {
                return 0.0;
            }
            let th_lo = (s_lo / r).clamp(-1.0, 1.0).asin();
            let th_hi = (s_hi / r).clamp(-1.0, 1.0).asin();
            let panels = ((s_hi - s_lo) / 0.75).ceil().max(1.0);
            let panel_len = (th_hi - th_lo) / panels;
            quadrature::integrate_composite(th_lo, th_hi, panel_len * 1.000_000_1, order, |th| {
                let (sin, cos) = th.sin_cos();
                let w = r * cos;
                if w <= 0.0 {
                    return 0.0;
                }
                phi(head + r * sin) * ball_quadrature(tail, w, order) * r * cos
            })
        }
    }
}

/// `∫_{B(c, r)} f dγ` by iterated Gauss–Legendre: the substitution
/// `s = r sin θ` on all but the last axis, composite panels on the last one.
/// `order` is the number of nodes per panel.
pub fn ball_integral(c: &[f64], r: f64, order: usize, f: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
    let mut x = c.to_vec();
    ball_integral_axis(c, r, order, 0, &mut x, f)
}

fn ball_integral_axis(
    c: &[f64],
    r: f64,
    order: usize,
    d: usize,
    x: &mut Vec<f64>,
    f: &mut dyn FnMut(&[f64]) -> f64,
) -> f64 {
    let lo = (-12.0 - c[d]).max(-r);
    let hi = (12.0 - c[d]).min(r);
    if hi <= lo {
        return 0.0;
    }
    if d + 1 == c.len() {
        return quadrature::integrate_composite(c[d] + lo, c[d] + hi, 0.5, order, |z| {
            x[d] = z;
            phi(z) * f(x)
        });
    }
    let th_lo = (lo / r).clamp(-1.0, 1.0).asin();
    let th_hi = (hi / r).clamp(-1.0, 1.0).asin();
    let panels = ((hi - lo) / 0.75).ceil().max(1.0);
    let panel_len = (th_hi - th_lo) / panels;
    quadrature::integrate_composite(th_lo, th_hi, panel_len * 1.000_000_1, order, |th| {
        let (sin, cos) = th.sin_cos();
        let w = r * cos;
        if w <= 0.0 {
            return 0.0;
        }
        x[d] = c[d] + r * sin;
        phi(x[d]) * ball_integral_axis(c, w, order, d + 1, x, f) * r * cos
    })
}

fn sub_seed(root: u64, parts: &[f64]) -> u64 {
    let mut h = root ^ 0x9e37_79b9_7f4a_7c15;
    for p in parts {
        h ^= p.to_bits();
        h = h.wrapping_mul(0x1000_0000_01b3).rotate_left(23);
    }
    h
}

/// Stratified Monte Carlo estimate of γ(B) with a 3σ error bound.
pub fn gamma_ball_monte_carlo(b: &Ball, tol: f64, cfg: &MeasureConfig) -> Result<MeasureEstimate> {
    let n = b.dim();
    let c = b.center.as_slice();
    let r = b.radius;
    let mut parts = c.to_vec();
    parts.push(r);
    let seed = sub_seed(cfg.seed, &parts);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strata_per_axis = 4usize;
    let strata = strata_per_axis.pow(n as u32);
    let side = 2.0 * r / strata_per_axis as f64;
    let stratum_vol = side.powi(n as i32);

    let mut per_stratum = 64usize;
    let mut sums = vec![0.0f64; strata];
    let mut sq_sums = vec![0.0f64; strata];
    let mut counts = 0usize;
    let mut point = vec![0.0; n];
    loop {
        for (s, (sum, sq)) in sums.iter_mut().zip(sq_sums.iter_mut()).enumerate() {
            let mut idx = s;
            let mut lo = vec![0.0; n];
            for (d, l) in lo.iter_mut().enumerate() {
                *l = c[d] - r + (idx % strata_per_axis) as f64 * side;
                idx /= strata_per_axis;
            }
            for _ in counts..per_stratum {
                for d in 0..n {
                    point[d] = lo[d] + side * rng.random::<f64>();
                }
                let f = if dist(&point, c) <= r {
                    gaussian_density(&point) * stratum_vol
                } else {
                    0.0
                };
                *sum += f;
                *sq += f * f;
            }
        }
        counts = per_stratum;
        let m = counts as f64;
        let mut value = 0.0;
        let mut var = 0.0;
        for (sum, sq) in sums.iter().zip(&sq_sums) {
            let mean = sum / m;
            value += mean;
            var += (sq / m - mean * mean).max(0.0) / m;
        }
        let err = 3.0 * var.sqrt();
        let mut est = MeasureEstimate::new(value, err, MeasureMethod::MonteCarlo);
        est.seed = Some(seed);
        if err <= tol {
            return Ok(est);
        }
        if per_stratum * 2 * strata > cfg.max_mc_samples {
            return Err(Error::BudgetExhausted {
                value: est.value,
                achieved: err,
                requested: tol,
            });
        }
        per_stratum *= 2;
    }
}

/// γ of the box `∏ [loᵢ, hiᵢ]` as a product of CDF differences.
pub fn gamma_cube(lo: &[f64], hi: &[f64]) -> Result<MeasureEstimate> {
    if lo.len() != hi.len() {
        return Err(Error::DimensionMismatch {
            expected: lo.len(),
            got: hi.len(),
        });
    }
    if lo.is_empty() || lo.len() > MAX_DIM {
        return Err(Error::Dimension(lo.len()));
    }
    if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
        return Err(Error::invalid("box requires lo < hi componentwise"));
    }
    let value: f64 = lo.iter().zip(hi).map(|(&l, &h)| cdf_diff(l, h)).product();
    let n = lo.len() as f64;
    // erfc is accurate to a few ulps; each factor and product adds one rounding.
    let error = (4.0 * n + n) * f64::EPSILON * value + f64::MIN_POSITIVE;
    Ok(MeasureEstimate::new(value, error, MeasureMethod::ProductExact))
}

/// γ(box) for boxes that may be degenerate (returns 0 on empty boxes).
pub fn gamma_box(lo: &[f64], hi: &[f64]) -> f64 {
    lo.iter().zip(hi).map(|(&l, &h)| cdf_diff(l, h)).product()
}

/// Plain Monte Carlo estimate of γ(box) by sampling the Gaussian itself.
/// Returns `(estimate, standard_error)`.
pub fn gamma_box_monte_carlo(lo: &[f64], hi: &[f64], samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    let n = lo.len();
    let mut x = vec![0.0; n];
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = rng.sample(rand_distr::StandardNormal);
        }
        if x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| v >= l && v < h) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    (p, (p * (1.0 - p) / samples as f64).sqrt())
}

/// Lebesgue volume of `B(·, r)` in dimension `n`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    special::unit_ball_volume(n) * r.powi(n as i32)
}
