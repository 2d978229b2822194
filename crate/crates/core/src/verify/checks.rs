//! Numerical core of each check family. The suite turns these outcomes into
//! reports; the functions here are usable on their own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::aperture_transfer;
use crate::covering::{check_whitney, cover_admissible, CoverOptions, CoverParams, Level};
use crate::error::{Error, Result};
use crate::geometry::c_ab;
use crate::measure::{admissibility_m, ball_integral, ball_quadrature, norm};
use crate::operators::grid::BallSums;
use crate::operators::{
    l1_gamma_norm, layer_cake_integral, maximal_m_field, maximal_t_field, square_field, Distribution, FieldMeta,
    FieldResolution, Grid, GridField, OperatorParams,
};
use crate::quadrature;
use crate::semigroup::{self, TestFunction};
use crate::special::cdf_diff;

/// Levels used by the layer-cake cross-check.
pub const LAYER_CAKE_POINTS: usize = 4096;

/// 64 geometric levels from `1e-4` to `1.2·max`.
pub fn sigma_grid(max: f64) -> Vec<f64> {
    if !(max > 0.0) {
        return Vec::new();
    }
    let lo = 1e-4f64.min(1.2 * max);
    let hi = 1.2 * max;
    (0..64).map(|i| lo * (hi / lo).powf(i as f64 / 63.0)).collect()
}

/// `|layer cake − Σ|g| mass| / Σ|g| mass`, or 0 for the zero field.
pub fn layer_cake_error(g: &GridField) -> f64 {
    let direct = l1_gamma_norm(g);
    if direct == 0.0 {
        return 0.0;
    }
    (layer_cake_integral(g, LAYER_CAKE_POINTS) - direct).abs() / direct
}

fn gamma_ball_rel(c: &[f64], r: f64) -> f64 {
    if c.len() == 1 {
        cdf_diff(c[0] - r, c[0] + r)
    } else {
        ball_quadrature(c, r, 16)
    }
}

fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm(&v);
        if r > 1e-9 {
            return v.into_iter().map(|c| c / r).collect();
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoublingOutcome {
    pub trials: usize,
    pub max_ratio: f64,
    pub worst: (Vec<f64>, f64, Vec<f64>, f64),
}

/// `max γ(B₂)/γ(B₁)` over random pairs with `B₁ = B(x₁,r₁)` admissible at
/// scale `a`, `r₂ ≤ τ r₁` and `B₁ ∩ B₂ ≠ ∅`. Half of the pairs sit on the
/// extreme configuration `r₁ = a m(x₁)`, `r₂ = τ r₁`, `|x₁ − x₂| ≈ r₁ + r₂`.
pub fn doubling_ratio(n: usize, a: f64, tau: f64, trials: usize, x_max: f64, seed: u64) -> Result<DoublingOutcome> {
    if trials == 0 || !(a > 0.0 && tau > 0.0 && x_max >= 0.0) {
        return Err(Error::invalid("doubling needs trials ≥ 1, a, τ > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Vec<f64>, f64, Vec<f64>, f64)> = (0..trials)
        .map(|_| {
            let x1: Vec<f64> = random_unit(&mut rng, n).into_iter().map(|c| c * x_max * rng.random::<f64>()).collect();
            let top = a * admissibility_m(&x1);
            let (r1, r2, w) = if rng.random_bool(0.5) {
                (top, tau * top, 1.0 - 1e-9)
            } else {
                let r1 = top * (-6.0 * rng.random::<f64>()).exp();
                (r1, tau * r1 * (1.0 - rng.random::<f64>()), rng.random::<f64>())
            };
            let x2: Vec<f64> = x1.iter().zip(random_unit(&mut rng, n)).map(|(c, d)| c + d * (r1 + r2) * w).collect();
            (x1, r1, x2, r2)
        })
        .collect();
    let ratios: Vec<f64> = pairs.par_iter().map(|(x1, r1, x2, r2)| gamma_ball_rel(x2, *r2) / gamma_ball_rel(x1, *r1)).collect();
    let (k, &max_ratio) = ratios
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, r)| if *r > *acc.1 { (i, r) } else { acc });
    Ok(DoublingOutcome { trials, max_ratio, worst: pairs[k].clone() })
}

/// `|f|` sampled on `grid`.
pub fn sample_abs(u: &TestFunction, grid: &Grid, source: &str) -> Result<GridField> {
    GridField::sample(grid.clone(), FieldMeta { operator: "f".into(), source: source.into(), ..Default::default() }, |x| {
        u.value(x).abs()
    })
}

/// Indicator of `B(center, radius)` sampled on `grid`.
pub fn sample_indicator(center: &[f64], radius: f64, grid: &Grid) -> Result<GridField> {
    let c = center.to_vec();
    GridField::sample(grid.clone(), FieldMeta { operator: "f".into(), source: "indicator".into(), ..Default::default() }, move |x| {
        if crate::measure::dist(x, &c) < radius {
            1.0
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Weak11Outcome {
    pub norm: f64,
    /// `sup_σ σ γ({M*f > σ})`
    pub sup: f64,
    pub argmax_sigma: f64,
    pub m_max: f64,
    pub flagged: usize,
    pub layer_cake_error: f64,
}

/// `sup_σ σ γ({M*_a f > σ})` over the σ-grid, with `‖f‖_{L¹(γ)}`.
pub fn weak11_ratio(f: &GridField, a: f64, per_octave: usize) -> Result<Weak11Outcome> {
    let m = maximal_m_field(f, a, per_octave)?;
    let dist = Distribution::new(&m);
    let mut sup = 0.0;
    let mut arg = 0.0;
    for s in sigma_grid(dist.max()) {
        let v = s * dist.at(s);
        if v > sup {
            sup = v;
            arg = s;
        }
    }
    Ok(Weak11Outcome {
        norm: l1_gamma_norm(f),
        sup,
        argmax_sigma: arg,
        m_max: dist.max(),
        flagged: m.meta.flagged,
        layer_cake_error: layer_cake_error(f).max(layer_cake_error(&m)),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApertureLevel {
    pub h: f64,
    /// Smallest `D = 2^{j/8}` with `γ({T_{A,a} > Dσ}) ≤ γ({T_{A′,a′} > σ})` on the σ-grid.
    pub d_hat: Option<f64>,
    /// `‖T_{A,a}u‖₁ / ‖T_{A′,a′}u‖₁`
    pub c_hat: f64,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    pub layer_cake_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApertureOutcome {
    pub a_prime: f64,
    pub levels: Vec<ApertureLevel>,
}

/// Largest `D` tried by the scan.
pub const D_SCAN_MAX_EXP: u32 = 160;

/// Smallest `D = 2^{j/8}` such that `γ({g₁ > Dσ}) ≤ γ({g₂ > σ})` for every σ.
pub fn scan_d(g1: &Distribution, g2: &Distribution, sigmas: &[f64]) -> Option<f64> {
    (0..=D_SCAN_MAX_EXP)
        .map(|j| (f64::from(j) / 8.0).exp2())
        .find(|&d| sigmas.iter().all(|&s| g1.at(d * s) <= g2.at(s)))
}

pub fn resolution_for(level: usize, per_octave: usize) -> FieldResolution {
    FieldResolution { per_octave: per_octave << level, ..FieldResolution::default() }
}

/// Change-of-aperture study at each grid spacing in `levels`.
#[allow(clippy::too_many_arguments)]
pub fn aperture_study(
    u: &TestFunction,
    big_a: f64,
    big_a_prime: f64,
    a: f64,
    half_width: f64,
    levels: &[f64],
    per_octave: usize,
) -> Result<ApertureOutcome> {
    let a_prime = aperture_transfer(big_a, big_a_prime, a);
    let mut out = Vec::new();
    for (k, &h) in levels.iter().enumerate() {
        let grid = Grid::new(u.dim(), half_width, h)?;
        let res = resolution_for(k, per_octave);
        let t1 = maximal_t_field(u, &grid, &OperatorParams::standard(big_a, a), &res)?;
        let t2 = maximal_t_field(u, &grid, &OperatorParams::standard(big_a_prime, a_prime), &res)?;
        let (d1, d2) = (Distribution::new(&t1), Distribution::new(&t2));
        let sigmas = sigma_grid(d2.max());
        let (n1, n2) = (l1_gamma_norm(&t1), l1_gamma_norm(&t2));
        out.push(ApertureLevel {
            h,
            d_hat: if sigmas.is_empty() { Some(1.0) } else { scan_d(&d1, &d2, &sigmas) },
            c_hat: if n2 > 0.0 { n1 / n2 } else { 0.0 },
            lhs_norm: n1,
            rhs_norm: n2,
            layer_cake_error: layer_cake_error(&t1).max(layer_cake_error(&t2)),
        });
    }
    Ok(ApertureOutcome { a_prime, levels: out })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaccioppoliOutcome {
    /// `∫_{I(x₀,t₀,r)} |∇v|² dγ dt`
    pub lhs: f64,
    /// `∫_{I(x₀,t₀,2r)} |v|² dγ dt`
    pub rhs: f64,
    /// `(1 + r|x₀|)/r²`
    pub factor: f64,
    /// `lhs / (factor · rhs)`
    pub normalized: f64,
}

/// Both sides of the parabolic Caccioppoli inequality for `v = e^{-tL}u` on
/// the cylinders `I(x₀,t₀,s) = B(x₀, cs) × [t₀ − s², t₀ + s²]`.
pub fn caccioppoli_ratio(u: &TestFunction, x0: &[f64], t0: f64, r: f64, c: f64, order: usize) -> Result<CaccioppoliOutcome> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::invalid(format!("r must lie in (0,1), got {r}")));
    }
    if !(t0 > 4.0 * r * r) {
        return Err(Error::invalid(format!("t0 must exceed 4r², got t0={t0}, r={r}")));
    }
    if !(c > 0.0) || x0.len() != u.dim() {
        return Err(Error::invalid("c must be positive and x0 must match the dimension of u"));
    }
    let rule = quadrature::legendre(order);
    let cylinder = |s: f64, grad: bool| -> f64 {
        let half = s * s;
        rule.iter()
            .map(|(node, w)| {
                let t = t0 + half * node;
                let mut f = |x: &[f64]| {
                    if grad {
                        semigroup::ou_value_grad(u, t, x, semigroup::DEFAULT_ORDER).1.iter().map(|g| g * g).sum()
                    } else {
                        semigroup::ou_value(u, t, x, semigroup::DEFAULT_ORDER).powi(2)
                    }
                };
                w * half * ball_integral(x0, c * s, order, &mut f)
            })
            .sum()
    };
    let lhs = cylinder(r, true);
    let rhs = cylinder(2.0 * r, false);
    let factor = (1.0 + r * norm(x0)) / (r * r);
    let normalized = if rhs > 0.0 { lhs / (factor * rhs) } else if lhs == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(CaccioppoliOutcome { lhs, rhs, factor, normalized })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MainLevel {
    pub h: f64,
    pub s_norm: f64,
    pub t_norm: f64,
    pub ratio: f64,
    pub layer_cake_error: f64,
    pub t_flagged: usize,
}

/// `‖S_a u‖₁` and `‖T*_{(1,a′)}u‖₁` at each grid spacing in `levels`.
pub fn main_study(u: &TestFunction, a: f64, a_prime: f64, half_width: f64, levels: &[f64], per_octave: usize) -> Result<Vec<MainLevel>> {
    let mut out = Vec::new();
    for (k, &h) in levels.iter().enumerate() {
        let grid = Grid::new(u.dim(), half_width, h)?;
        let res = resolution_for(k, per_octave);
        let s = square_field(u, &grid, &OperatorParams::standard(1.0, a), &res)?;
        let t = maximal_t_field(u, &grid, &OperatorParams::standard(1.0, a_prime), &res)?;
        let (sn, tn) = (l1_gamma_norm(&s), l1_gamma_norm(&t));
        out.push(MainLevel {
            h,
            s_norm: sn,
            t_norm: tn,
            ratio: if tn > 0.0 { sn / tn } else { 0.0 },
            layer_cake_error: layer_cake_error(&s).max(layer_cake_error(&t)),
            t_flagged: t.meta.flagged,
        });
    }
    Ok(out)
}

/// `K̃ = c_{1+2K, 2}` with `K = c_{a,1}`.
pub fn k_tilde(a: f64) -> f64 {
    c_ab(1.0 + 2.0 * c_ab(a, 1.0), 2.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FstarOutcome {
    pub k_tilde: f64,
    pub nodes: usize,
    pub in_f: usize,
    pub in_f_star: usize,
    /// Nodes outside `F*` where `M*_K̃(1_{∁F}) ≤ ½`.
    pub violations: Vec<Vec<f64>>,
}

/// Builds `F*` from the grid set `F = {mask > ½}` on the radii
/// `K̃ m(x) 2^{-j/p} > h` (and the `r → 0` limit `x ∈ F`), then checks
/// `∁F* ⊆ {M*_K̃(1_{∁F}) > ½}` at every node.
pub fn fstar_check(mask: &GridField, a: f64, per_octave: usize) -> Result<FstarOutcome> {
    if mask.times.is_some() || per_octave == 0 {
        return Err(Error::invalid("F* needs a static field and per_octave ≥ 1"));
    }
    let kt = k_tilde(a);
    let g = &mask.grid;
    let in_f: Vec<f64> = mask.values.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect();
    let masses = g.cell_masses();
    let sums = BallSums::new(g, &masses, &in_f);
    let star: Vec<bool> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            if in_f[i] == 0.0 {
                return false;
            }
            let x = g.node(i);
            let top = kt * admissibility_m(&x);
            let mut j = 0u32;
            loop {
                let r = top * (-(f64::from(j)) / per_octave as f64).exp2();
                if r <= g.h {
                    return true;
                }
                if sums.average(&x, r) < 0.5 {
                    return false;
                }
                j += 1;
            }
        })
        .collect();
    let complement = GridField::new(g.clone(), in_f.iter().map(|v| 1.0 - v).collect(), FieldMeta::default())?;
    let m = maximal_m_field(&complement, kt, per_octave)?;
    let violations = (0..g.len())
        .filter(|&i| !star[i] && m.values[i] <= 0.5 - 1e-12)
        .map(|i| g.node(i))
        .collect();
    Ok(FstarOutcome {
        k_tilde: kt,
        nodes: g.len(),
        in_f: in_f.iter().filter(|&&v| v > 0.0).count(),
        in_f_star: star.iter().filter(|&&s| s).count(),
        violations,
    })
}

/// `{T*_{(1,a)}u ≤ θ max}` as a 0/1 field.
pub fn level_set_mask(u: &TestFunction, grid: &Grid, a: f64, theta: f64, per_octave: usize) -> Result<GridField> {
    let t = maximal_t_field(u, grid, &OperatorParams::standard(1.0, a), &resolution_for(0, per_octave))?;
    let level = theta * t.max_abs();
    let values = t.values.iter().map(|&v| if v <= level { 1.0 } else { 0.0 }).collect();
    GridField::new(grid.clone(), values, FieldMeta { operator: "F".into(), source: t.meta.source, ..Default::default() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringLevel {
    pub constant: f64,
    pub measure_sum: f64,
    pub target_measure: f64,
    pub outer_measure: f64,
    pub coverage_fraction: f64,
    pub coverage_samples: usize,
    pub cubes: usize,
    pub whitney_failures: usize,
    pub overlaps: usize,
    pub inadmissible_selection_balls: usize,
    pub cubes_without_center: usize,
}

/// Random finite `F` with 1..=`max_points` points in `[-spread, spread]ⁿ`.
pub fn random_finite_set(n: usize, max_points: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..=max_points.max(1));
    (0..k).map(|_| (0..n).map(|_| rng.random_range(-spread..=spread)).collect()).collect()
}

/// Covering of `O` at `refinements` nested resolutions.
pub fn covering_study(points: &[Vec<f64>], params: CoverParams, refinements: u32, samples: usize, seed: u64) -> Result<Vec<CoveringLevel>> {
    let n = points.first().map(Vec::len).unwrap_or(0);
    let level = Level::new(points.to_vec(), params.a)?;
    let mut base = CoverOptions::for_dim(n);
    base.coverage_samples = samples;
    base.seed = seed;
    (0..refinements)
        .map(|k| {
            let opts = base.refined(k);
            let r = cover_admissible(points, params, &opts)?;
            let chk = check_whitney(&level, &r.whitney, 2 * opts.whitney.samples_per_axis - 1);
            Ok(CoveringLevel {
                constant: r.constant(),
                measure_sum: r.measure_sum,
                target_measure: r.target_measure,
                outer_measure: r.outer_measure,
                coverage_fraction: r.coverage_fraction,
                coverage_samples: r.coverage_samples,
                cubes: r.whitney.cubes.len(),
                whitney_failures: chk.upper_failures + chk.lower_failures,
                overlaps: chk.overlaps,
                inadmissible_selection_balls: r.inadmissible_selection_balls,
                cubes_without_center: r.cubes_without_center,
            })
        })
        .collect()
}

/// Largest relative change between consecutive values.
pub fn max_consecutive_change(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| if w[0] == 0.0 && w[1] == 0.0 { 0.0 } else { (w[1] - w[0]).abs() / w[0].abs().max(w[1].abs()) })
        .fold(0.0, f64::max)
}
