//! The maximal function `M*_a`, the non-tangential maximal function
//! `T*_{(A,a)}` and the conical square function `S^ε_a`, on grids and at
//! single points.
//!
//! Grid versions share one log-spaced `t` lattice across all nodes and
//! evaluate ball averages with per-line prefix sums, so a whole field costs
//! about as much as a few hundred pointwise evaluations. Pointwise versions
//! integrate over balls with Gauss–Legendre and are used for spot checks.

pub(crate) mod grid;
mod pointwise;

pub use grid::{distribution_function, l1_gamma_norm, layer_cake_integral, Distribution, FieldMeta, Grid, GridField};
pub use pointwise::{maximal_T, square_S, tilde_variants, ConeValue, PointResolution, TildeValues};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{c_ab, ConeFlavor};
use crate::measure::{admissibility_m, ball_quadrature};
use crate::semigroup::{self, TestFunction};
use crate::special::cdf_diff;
use grid::{BallMax, BallSums};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    /// Aperture `A`.
    pub aperture: f64,
    /// Admissibility scale `a`.
    pub scale: f64,
    /// Truncation `ε` of the square function; zero means none.
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub flavor: ConeFlavor,
}

impl OperatorParams {
    pub fn new(aperture: f64, scale: f64, epsilon: f64, flavor: ConeFlavor) -> Result<Self> {
        let p = OperatorParams { aperture, scale, epsilon, flavor };
        p.validate()?;
        Ok(p)
    }

    pub fn standard(aperture: f64, scale: f64) -> Self {
        OperatorParams { aperture, scale, epsilon: 0.0, flavor: ConeFlavor::Standard }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aperture > 0.0 && self.scale > 0.0 && self.aperture.is_finite() && self.scale.is_finite()) {
            return Err(Error::invalid(format!(
                "aperture and scale must be positive, got A={} a={}",
                self.aperture, self.scale
            )));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Discretisation of the cone on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldResolution {
    /// Points of the `t` lattice per octave.
    pub per_octave: usize,
    /// Bottom of the `t` lattice; `h/4` when absent.
    pub t_floor: Option<f64>,
    /// Gauss–Hermite order for the semigroup.
    pub quad_order: usize,
    /// Gauss–Legendre order for `γ(B(y,t))` in dimensions ≥ 2.
    pub ball_order: usize,
}

impl Default for FieldResolution {
    fn default() -> Self {
        FieldResolution { per_octave: 4, t_floor: None, quad_order: semigroup::DEFAULT_ORDER, ball_order: 8 }
    }
}

impl FieldResolution {
    fn floor(&self, grid: &Grid) -> f64 {
        self.t_floor.unwrap_or(grid.h / 4.0)
    }

    fn check(&self) -> Result<()> {
        if self.per_octave == 0 || self.quad_order < 2 || self.ball_order == 0 {
            return Err(Error::invalid("resolution needs per_octave ≥ 1, quad_order ≥ 2, ball_order ≥ 1"));
        }
        if let Some(t) = self.t_floor {
            if !(t > 0.0) {
                return Err(Error::invalid("t_floor must be positive"));
            }
        }
        Ok(())
    }
}

/// `t_floor · 2^{j/p}` for `j = 0, 1, …` while below `top`.
pub fn t_lattice(t_floor: f64, per_octave: usize, top: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut j = 0u32;
    loop {
        let t = t_floor * (f64::from(j) / per_octave as f64).exp2();
        if t >= top {
            return out;
        }
        out.push(t);
        j += 1;
    }
}

/// Length of `[lo, hi] ∩ (from, to)` in `log t`.
#[inline]
fn log_overlap(lo: f64, hi: f64, from: f64, to: f64) -> f64 {
    let a = lo.max(from);
    let b = hi.min(to);
    if b > a {
        (b / a).ln()
    } else {
        0.0
    }
}

fn gamma_ball_fast(y: &[f64], r: f64, order: usize) -> f64 {
    if y.len() == 1 {
        cdf_diff(y[0] - r, y[0] + r)
    } else {
        ball_quadrature(y, r, order)
    }
}

fn check_dims(u: &TestFunction, grid: &Grid) -> Result<()> {
    if u.dim() != grid.dim {
        return Err(Error::DimensionMismatch { expected: grid.dim, got: u.dim() });
    }
    Ok(())
}

fn meta(operator: &str, source: &str, params: &[(&str, f64)]) -> FieldMeta {
    FieldMeta {
        operator: operator.to_string(),
        source: source.to_string(),
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        flagged: 0,
    }
}

/// Snapshots `e^{-t²L}u` on the grid at each of `times`.
pub fn semigroup_field(u: &TestFunction, grid: &Grid, times: &[f64], quad_order: usize) -> Result<GridField> {
    check_dims(u, grid)?;
    let axes = vec![grid.axis(); grid.dim];
    let mut values = Vec::with_capacity(grid.len() * times.len());
    for &t in times {
        if !(t > 0.0) {
            return Err(Error::invalid("snapshot times must be positive"));
        }
        values.extend(semigroup::grid_values(u, t * t, &axes, quad_order).0);
    }
    GridField::with_times(grid.clone(), times.to_vec(), values, meta("semigroup", "", &[]))
}

/// `S^ε_a u` with aperture `params.aperture` at every node.
///
/// `S²(x) = Σ_k w_k(x) · avg_{B(x,A t_k)}(g_k) · γ(B(x, A t_k))` with
/// `g_k(y) = |t_k ∇e^{-t_k²L}u(y)|² / γ(B(y, t_k))` and `w_k(x)` the
/// `log t`-length of the k-th lattice cell inside `(ε, a m(x))`. For the
/// tilde flavour the weight moves inside the average and uses `m(y)`.
pub fn square_field(u: &TestFunction, grid: &Grid, params: &OperatorParams, res: &FieldResolution) -> Result<GridField> {
    params.validate()?;
    res.check()?;
    check_dims(u, grid)?;
    let a = params.scale;
    let big_a = params.aperture;
    let n_nodes = grid.len();
    let nodes: Vec<Vec<f64>> = (0..n_nodes).map(|i| grid.node(i)).collect();
    let m: Vec<f64> = nodes.iter().map(|x| admissibility_m(x)).collect();
    let masses = grid.cell_masses();
    let axes = vec![grid.axis(); grid.dim];
    let bounds = t_lattice(res.floor(grid), res.per_octave, a);
    let ratio = (1.0 / res.per_octave as f64).exp2();
    // Nodes whose balls can matter at scale t: t ≤ mask·m(y).
    let mask = 2.0 * c_ab(a, 2.0 * big_a.max(1.0));
    let mut s2 = vec![0.0; n_nodes];
    for &lo in &bounds {
        let hi = lo * ratio;
        if lo.max(params.epsilon) >= hi.min(a) {
            continue;
        }
        // The sample scale ignores ε so that truncation only shrinks weights.
        let t = (lo * hi.min(a)).sqrt();
        let (_, grads) = semigroup::grid_values(u, t * t, &axes, res.quad_order);
        let gamma_t: Vec<f64> = (0..n_nodes)
            .into_par_iter()
            .map(|i| if t <= mask * m[i] { gamma_ball_fast(&nodes[i], t, res.ball_order) } else { 0.0 })
            .collect();
        let gamma_at: Vec<f64> = if big_a == 1.0 {
            gamma_t.clone()
        } else {
            (0..n_nodes)
                .into_par_iter()
                .map(|i| if t <= mask * m[i] { gamma_ball_fast(&nodes[i], big_a * t, res.ball_order) } else { 0.0 })
                .collect()
        };
        let g: Vec<f64> = (0..n_nodes)
            .map(|i| {
                if gamma_t[i] <= 0.0 {
                    return 0.0;
                }
                let sq: f64 = grads[i].iter().map(|d| d * d).sum::<f64>() * t * t / gamma_t[i];
                match params.flavor {
                    ConeFlavor::Standard => sq,
                    ConeFlavor::Tilde => sq * log_overlap(lo, hi, params.epsilon, a * m[i]),
                }
            })
            .collect();
        if g.iter().all(|&v| v == 0.0) {
            continue;
        }
        let sums = BallSums::new(grid, &masses, &g);
        s2.par_iter_mut().enumerate().for_each(|(i, acc)| {
            let w = match params.flavor {
                ConeFlavor::Standard => log_overlap(lo, hi, params.epsilon, a * m[i]),
                ConeFlavor::Tilde => 1.0,
            };
            if w > 0.0 && gamma_at[i] > 0.0 {
                *acc += w * sums.average(&nodes[i], big_a * t) * gamma_at[i];
            }
        });
    }
    let values = s2.into_iter().map(f64::sqrt).collect();
    let mut out = GridField::new(
        grid.clone(),
        values,
        meta(
            "S",
            "",
            &[("aperture", big_a), ("scale", a), ("epsilon", params.epsilon), ("per_octave", res.per_octave as f64)],
        ),
    )?;
    if params.flavor == ConeFlavor::Tilde {
        out.meta.operator = "S~".into();
    }
    Ok(out)
}

/// `T*_{(A,a)}u` at every node.
///
/// `T*²(x) = max(u(x)², max_{k, y} avg_{B(y, A t_k)} |e^{-t_k²L}u|²)` over
/// lattice scales `t_k < a m(x)` (tilde: `t_k < a m(y)`) and grid nodes `y`
/// with `|y - x| < A t_k`. The `u(x)²` term is the `t → 0` limit of the
/// cone supremum.
pub fn maximal_t_field(u: &TestFunction, grid: &Grid, params: &OperatorParams, res: &FieldResolution) -> Result<GridField> {
    params.validate()?;
    res.check()?;
    check_dims(u, grid)?;
    let a = params.scale;
    let big_a = params.aperture;
    let n_nodes = grid.len();
    let nodes: Vec<Vec<f64>> = (0..n_nodes).map(|i| grid.node(i)).collect();
    let m: Vec<f64> = nodes.iter().map(|x| admissibility_m(x)).collect();
    let masses = grid.cell_masses();
    let axes = vec![grid.axis(); grid.dim];
    let mut best: Vec<f64> = nodes.iter().map(|x| u.value(x).powi(2)).collect();
    for t in t_lattice(res.floor(grid), res.per_octave, a) {
        let (v, _) = semigroup::grid_values(u, t * t, &axes, res.quad_order);
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        let sums = BallSums::new(grid, &masses, &sq);
        let w: Vec<f64> = (0..n_nodes)
            .into_par_iter()
            .map(|i| match params.flavor {
                ConeFlavor::Tilde if t >= a * m[i] => 0.0,
                _ => sums.average(&nodes[i], big_a * t),
            })
            .collect();
        let bm = BallMax::new(grid, &w);
        best.par_iter_mut().enumerate().for_each(|(i, b)| {
            if params.flavor == ConeFlavor::Standard && t >= a * m[i] {
                return;
            }
            let v = bm.max(&nodes[i], big_a * t);
            if v > *b {
                *b = v;
            }
        });
    }
    let values = best.into_iter().map(f64::sqrt).collect();
    let op = if params.flavor == ConeFlavor::Tilde { "T~" } else { "T" };
    GridField::new(
        grid.clone(),
        values,
        meta(op, "", &[("aperture", big_a), ("scale", a), ("per_octave", res.per_octave as f64)]),
    )
}

/// Value of `M*_a f` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximalValue {
    pub value: f64,
    /// `a·m(x) ≤ h`: no admissible radius is resolved and `|f(x)|` is returned.
    pub flagged: bool,
}

fn m_star_at(sums: &BallSums<'_>, f_at: f64, x: &[f64], a: f64, h: f64, per_octave: usize) -> MaximalValue {
    let top = a * admissibility_m(x);
    if top <= h {
        return MaximalValue { value: f_at, flagged: true };
    }
    let mut best = f_at;
    let mut j = 0u32;
    loop {
        let r = top * (-(f64::from(j)) / per_octave as f64).exp2();
        if r <= h {
            break;
        }
        best = best.max(sums.average(x, r));
        j += 1;
    }
    MaximalValue { value: best, flagged: false }
}

/// `M*_a f(x)`: supremum of γ-averages of `|f|` over radii
/// `a m(x) 2^{-j/p} > h`, together with the `r → 0` limit `|f(x)|`.
#[allow(non_snake_case)]
pub fn maximal_M(f: &GridField, a: f64, x: &[f64], per_octave: usize) -> Result<MaximalValue> {
    if !(a > 0.0) || per_octave == 0 {
        return Err(Error::invalid("maximal_M needs a > 0 and per_octave ≥ 1"));
    }
    if !f.grid.contains(x) {
        return Err(Error::OutsideGrid(x.to_vec()));
    }
    let abs: Vec<f64> = f.values.iter().map(|v| v.abs()).collect();
    let masses = f.grid.cell_masses();
    let sums = BallSums::new(&f.grid, &masses, &abs);
    let at = abs[f.grid.nearest(x)];
    Ok(m_star_at(&sums, at, x, a, f.grid.h, per_octave))
}

/// `M*_a f` at every node of `f`'s grid.
pub fn maximal_m_field(f: &GridField, a: f64, per_octave: usize) -> Result<GridField> {
    if !(a > 0.0) || per_octave == 0 {
        return Err(Error::invalid("maximal_m_field needs a > 0 and per_octave ≥ 1"));
    }
    if f.times.is_some() {
        return Err(Error::invalid("M* takes a field without time axis"));
    }
    let g = &f.grid;
    let abs: Vec<f64> = f.values.iter().map(|v| v.abs()).collect();
    let masses = g.cell_masses();
    let sums = BallSums::new(g, &masses, &abs);
    let out: Vec<MaximalValue> = (0..g.len())
        .into_par_iter()
        .map(|i| m_star_at(&sums, abs[i], &g.node(i), a, g.h, per_octave))
        .collect();
    let mut field = GridField::new(
        g.clone(),
        out.iter().map(|v| v.value).collect(),
        meta("M", &f.meta.source, &[("scale", a), ("per_octave", per_octave as f64)]),
    )?;
    field.meta.flagged = out.iter().filter(|v| v.flagged).count();
    Ok(field)
}
