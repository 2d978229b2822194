//! Single-point evaluation of `T*` and `S` by direct quadrature over the cone.

use serde::{Deserialize, Serialize};

use super::{gamma_ball_fast, log_overlap, t_lattice, OperatorParams};
use crate::error::{Error, Result};
use crate::geometry::ConeFlavor;
use crate::measure::{admissibility_m, ball_integral};
use crate::semigroup::{self, TestFunction};

/// Discretisation of a single cone.
///
/// Scales run over `t_min · 2^{j/per_octave}` and cone centres over the
/// lattice `x + h ℤⁿ`. [`PointResolution::refined`] halves `h` and doubles
/// `per_octave` with `t_min` fixed, so each refinement evaluates a superset
/// of the previous (scale, centre) pairs with identical per-pair values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointResolution {
    pub h: f64,
    pub t_min: f64,
    pub per_octave: usize,
    /// Gauss–Legendre nodes per panel for ball integrals.
    pub ball_order: usize,
    /// Gauss–Hermite order for the semigroup.
    pub quad_order: usize,
}

impl Default for PointResolution {
    fn default() -> Self {
        PointResolution {
            h: 1.0 / 16.0,
            t_min: 1.0 / 64.0,
            per_octave: 4,
            ball_order: 8,
            quad_order: semigroup::DEFAULT_ORDER,
        }
    }
}

impl PointResolution {
    pub fn refined(&self, k: u32) -> Self {
        let f = 1usize << k;
        PointResolution { h: self.h / f as f64, per_octave: self.per_octave * f, ..*self }
    }

    fn check(&self) -> Result<()> {
        if !(self.h > 0.0 && self.t_min > 0.0) || self.per_octave == 0 || self.ball_order == 0 || self.quad_order < 2 {
            return Err(Error::invalid("invalid point resolution"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeValue {
    pub value: f64,
    /// No lattice point of the cone was resolvable; `value` is `|u(x)|`.
    pub flagged: bool,
    /// Number of (scale, centre) pairs evaluated.
    pub pairs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TildeValues {
    pub square: ConeValue,
    pub maximal: ConeValue,
}

fn check_point(u: &TestFunction, x: &[f64]) -> Result<()> {
    if x.len() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: x.len() });
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("point must be finite"));
    }
    Ok(())
}

/// Offsets `h·j`, `j ∈ ℤⁿ`, with `|h j| < radius`.
fn lattice_ball(n: usize, h: f64, radius: f64) -> Vec<Vec<f64>> {
    let k = (radius / h).ceil() as i64;
    let mut out = Vec::new();
    let mut idx = vec![-k; n];
    loop {
        let off: Vec<f64> = idx.iter().map(|&j| j as f64 * h).collect();
        if off.iter().map(|c| c * c).sum::<f64>() < radius * radius {
            out.push(off);
        }
        let mut d = 0;
        while d < n {
            idx[d] += 1;
            if idx[d] <= k {
                break;
            }
            idx[d] = -k;
            d += 1;
        }
        if d == n {
            return out;
        }
    }
}

/// `T*_{(A,a)}u(x)` over the discretised cone.
#[allow(non_snake_case)]
pub fn maximal_T(u: &TestFunction, params: &OperatorParams, x: &[f64], res: &PointResolution) -> Result<ConeValue> {
    params.validate()?;
    res.check()?;
    check_point(u, x)?;
    let n = x.len();
    let a = params.scale;
    let top = match params.flavor {
        ConeFlavor::Standard => a * admissibility_m(x),
        ConeFlavor::Tilde => a,
    };
    let mut best = f64::NEG_INFINITY;
    let mut pairs = 0;
    for t in t_lattice(res.t_min, res.per_octave, top) {
        let r = params.aperture * t;
        for off in lattice_ball(n, res.h, r) {
            let y: Vec<f64> = x.iter().zip(&off).map(|(a, b)| a + b).collect();
            if params.flavor == ConeFlavor::Tilde && t >= a * admissibility_m(&y) {
                continue;
            }
            pairs += 1;
            let mass = gamma_ball_fast(&y, r, res.ball_order);
            if mass <= 0.0 {
                continue;
            }
            let mut f = |z: &[f64]| semigroup::ou_value(u, t * t, z, res.quad_order).powi(2);
            let w = ball_integral(&y, r, res.ball_order, &mut f) / mass;
            best = best.max(w);
        }
    }
    if pairs == 0 {
        return Ok(ConeValue { value: u.value(x).abs(), flagged: true, pairs });
    }
    Ok(ConeValue { value: best.max(0.0).sqrt(), flagged: false, pairs })
}

fn square_impl(u: &TestFunction, params: &OperatorParams, x: &[f64], res: &PointResolution) -> Result<ConeValue> {
    params.validate()?;
    res.check()?;
    check_point(u, x)?;
    let a = params.scale;
    let eps = params.epsilon;
    let top = match params.flavor {
        ConeFlavor::Standard => a * admissibility_m(x),
        ConeFlavor::Tilde => a,
    };
    let ratio = (1.0 / res.per_octave as f64).exp2();
    let mut total = 0.0;
    let mut pairs = 0;
    for lo in t_lattice(res.t_min, res.per_octave, top) {
        let hi = lo * ratio;
        let lo_eff = lo.max(eps);
        let hi_eff = hi.min(top);
        if lo_eff >= hi_eff {
            continue;
        }
        let t = (lo * hi_eff).sqrt();
        pairs += 1;
        let mut f = |y: &[f64]| {
            let weight = match params.flavor {
                ConeFlavor::Standard => 1.0,
                ConeFlavor::Tilde => log_overlap(lo, hi, eps, a * admissibility_m(y)),
            };
            if weight == 0.0 {
                return 0.0;
            }
            let (_, g) = semigroup::ou_value_grad(u, t * t, y, res.quad_order);
            let sq: f64 = g.iter().map(|d| d * d).sum();
            let mass = gamma_ball_fast(y, t, res.ball_order);
            if mass <= 0.0 {
                return 0.0;
            }
            weight * t * t * sq / mass
        };
        let inner = ball_integral(x, params.aperture * t, res.ball_order, &mut f);
        let outer = match params.flavor {
            ConeFlavor::Standard => (hi_eff / lo_eff).ln(),
            ConeFlavor::Tilde => 1.0,
        };
        total += outer * inner;
    }
    Ok(ConeValue { value: total.sqrt(), flagged: false, pairs })
}

/// `S^ε_a u(x)` (aperture one, standard cone).
#[allow(non_snake_case)]
pub fn square_S(u: &TestFunction, a: f64, epsilon: f64, x: &[f64], res: &PointResolution) -> Result<ConeValue> {
    let params = OperatorParams::new(1.0, a, epsilon, ConeFlavor::Standard)?;
    square_impl(u, &params, x, res)
}

/// `S` and `T*` for the cone flavour in `params`; the standard flavour with
/// aperture one reproduces [`square_S`] and [`maximal_T`].
pub fn tilde_variants(u: &TestFunction, params: &OperatorParams, x: &[f64], res: &PointResolution) -> Result<TildeValues> {
    Ok(TildeValues {
        square: square_impl(u, params, x, res)?,
        maximal: maximal_T(u, params, x, res)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_ball_counts() {
        assert_eq!(lattice_ball(1, 0.5, 1.0).len(), 3);
        assert_eq!(lattice_ball(2, 1.0, 1.0).len(), 1);
        assert_eq!(lattice_ball(2, 1.0, 1.5).len(), 9);
    }

    #[test]
    fn constants() {
        let c = TestFunction::constant(1, 2.0).unwrap();
        let res = PointResolution::default();
        let p = OperatorParams::standard(1.0, 1.0);
        let t = maximal_T(&c, &p, &[0.3], &res).unwrap();
        assert!((t.value - 2.0).abs() < 1e-10);
        assert_eq!(square_S(&c, 1.0, 0.0, &[0.3], &res).unwrap().value, 0.0);
        let tp = OperatorParams::new(1.0, 1.0, 0.0, ConeFlavor::Tilde).unwrap();
        let tv = tilde_variants(&c, &tp, &[0.3], &res).unwrap();
        assert!((tv.maximal.value - 2.0).abs() < 1e-10);
        assert_eq!(tv.square.value, 0.0);
    }

    #[test]
    fn epsilon_beyond_top_is_zero() {
        let u = TestFunction::bump(vec![0.0], 1.0, 1.0).unwrap();
        let res = PointResolution::default();
        assert_eq!(square_S(&u, 1.0, 0.5, &[4.0], &res).unwrap().value, 0.0);
        let s0 = square_S(&u, 1.0, 0.0, &[0.5], &res).unwrap().value;
        let s1 = square_S(&u, 1.0, 0.1, &[0.5], &res).unwrap().value;
        assert!(s0 >= s1 && s1 > 0.0);
    }

    #[test]
    fn standard_flavor_is_square_s() {
        let u = TestFunction::bump(vec![0.2], 0.8, 1.0).unwrap();
        let res = PointResolution::default();
        let p = OperatorParams::standard(1.0, 1.0);
        let a = square_S(&u, 1.0, 0.0, &[0.4], &res).unwrap();
        let b = tilde_variants(&u, &p, &[0.4], &res).unwrap();
        assert_eq!(a.value.to_bits(), b.square.value.to_bits());
        let t = maximal_T(&u, &p, &[0.4], &res).unwrap();
        assert_eq!(t.value.to_bits(), b.maximal.value.to_bits());
    }

    #[test]
    fn far_cone_flags() {
        let u = TestFunction::bump(vec![0.0], 1.0, 1.0).unwrap();
        let res = PointResolution { t_min: 0.5, ..PointResolution::default() };
        let v = maximal_T(&u, &OperatorParams::standard(1.0, 1.0), &[10.0], &res).unwrap();
        assert!(v.flagged);
        assert_eq!(v.value, 0.0);
    }
}
