//! The Ornstein–Uhlenbeck operator `L = -Δ + x·∇` and its semigroup.
//!
//! `e^{-tL}u(x) = ∫ u(e^{-t}x + √(1-e^{-2t}) ξ) dγ(ξ)`. Test functions are
//! sums of separable products, so the integral factorises into
//! one-dimensional Gaussian expectations. Whole-line polynomial factors use
//! Gauss–Hermite (exact once the order covers the degree); factors supported
//! on an interval are integrated over that interval with composite
//! Gauss–Legendre against the normal density, which stays accurate when
//! the support is narrow compared with the Gaussian spread and vice versa.

mod testfn;

pub use testfn::{hermite_coeffs, Factor, Monomial, Product, TestFunction, TestFunctionSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, integrate_composite};
use crate::special::phi;

/// Default Gauss–Hermite order per axis.
pub const DEFAULT_ORDER: usize = 40;
/// Hard cap for order escalation.
pub const MAX_ORDER: usize = 160;
/// Gaussian integrals are truncated to `|ξ| ≤ XI_MAX` (tail mass < 1e-32).
const XI_MAX: f64 = 12.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatEvaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub t: f64,
    pub x: Vec<f64>,
    pub quad_order: usize,
    pub est_error: f64,
}

/// Mean and spread of the Mehler representation at time `t`.
#[inline]
fn mehler(t: f64) -> (f64, f64) {
    let contraction = (-t).exp();
    let spread = (-(-2.0 * t).exp_m1()).max(0.0).sqrt();
    (contraction, spread)
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    /// `E[f(μ + σξ)]`
    plain: f64,
    /// `E[f(μ + σξ) ξ]`
    first: f64,
}

/// One-dimensional Gaussian expectation of a factor.
fn factor_moments(f: &Factor, mu: f64, sigma: f64, order: usize, want_first: bool) -> Moments {
    if sigma <= 0.0 {
        return Moments {
            plain: f.eval(mu),
            first: 0.0,
        };
    }
    match f.support {
        None => {
            let order = order.max(f.degree() / 2 + 2);
            let rule = quadrature::hermite(order);
            let mut m = Moments::default();
            for (xi, w) in rule.iter() {
                let v = w * f.eval(mu + sigma * xi);
                m.plain += v;
                if want_first {
                    m.first += v * xi;
                }
            }
            m
        }
        Some((lo, hi)) => {
            let a = ((lo - mu) / sigma).max(-XI_MAX);
            let b = ((hi - mu) / sigma).min(XI_MAX);
            if b <= a {
                return Moments::default();
            }
            let per_panel = (order / 4).clamp(4, 40);
            let plain = integrate_composite(a, b, 1.0, per_panel, |xi| phi(xi) * f.eval(mu + sigma * xi));
            let first = if want_first {
                integrate_composite(a, b, 1.0, per_panel, |xi| xi * phi(xi) * f.eval(mu + sigma * xi))
            } else {
                0.0
            };
            Moments { plain, first }
        }
    }
}

fn check_point(u: &TestFunction, x: &[f64]) -> Result<()> {
    if x.len() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("semigroup time must be positive, got {t}")));
    }
    Ok(())
}

/// `e^{-tL}u(x)` at a fixed order. `t = 0` returns `u(x)`.
pub fn ou_value(u: &TestFunction, t: f64, x: &[f64], order: usize) -> f64 {
    let (c, s) = mehler(t);
    u.products()
        .iter()
        .map(|p| {
            let mut v = p.coef;
            for (f, &xi) in p.factors.iter().zip(x) {
                if v == 0.0 {
                    break;
                }
                v *= factor_moments(f, c * xi, s, order, false).plain;
            }
            v
        })
        .sum()
}

/// `(e^{-tL}u(x), ∇e^{-tL}u(x))`; the gradient uses `∇e^{-tL} = e^{-t} e^{-tL}∇`.
pub fn ou_value_grad(u: &TestFunction, t: f64, x: &[f64], order: usize) -> (f64, Vec<f64>) {
    let n = u.dim();
    let (c, s) = mehler(t);
    let mut value = 0.0;
    let mut grad = vec![0.0; n];
    let mut plain = vec![0.0; n];
    let mut deriv = vec![0.0; n];
    for p in u.products() {
        for i in 0..n {
            plain[i] = factor_moments(&p.factors[i], c * x[i], s, order, false).plain;
            deriv[i] = factor_moments(&p.factors[i].derivative(), c * x[i], s, order, false).plain;
        }
        value += p.coef * plain.iter().product::<f64>();
        for i in 0..n {
            let others: f64 = (0..n).filter(|&j| j != i).map(|j| plain[j]).product();
            grad[i] += c * p.coef * deriv[i] * others;
        }
    }
    (value, grad)
}

/// `e^{-tL}u(x)` with gradient and an order-doubling error estimate.
pub fn ou_apply(u: &TestFunction, t: f64, x: &[f64], quad_order: usize) -> Result<HeatEvaluation> {
    check_time(t)?;
    check_point(u, x)?;
    if quad_order < 2 {
        return Err(Error::invalid("quadrature order must be at least 2"));
    }
    let (value, gradient) = ou_value_grad(u, t, x, quad_order);
    let finer = ou_value(u, t, x, (2 * quad_order).min(MAX_ORDER.max(quad_order)));
    Ok(HeatEvaluation {
        value,
        gradient,
        t,
        x: x.to_vec(),
        quad_order,
        est_error: (finer - value).abs(),
    })
}

/// Escalates the order from [`DEFAULT_ORDER`] until the estimated error is
/// below `tol`; fails with the best estimate when [`MAX_ORDER`] is reached.
pub fn ou_apply_tol(u: &TestFunction, t: f64, x: &[f64], tol: f64) -> Result<HeatEvaluation> {
    let mut order = DEFAULT_ORDER;
    loop {
        let ev = ou_apply(u, t, x, order)?;
        if ev.est_error <= tol {
            return Ok(ev);
        }
        if order * 2 > MAX_ORDER {
            return Err(Error::BudgetExhausted {
                value: ev.value,
                achieved: ev.est_error,
                requested: tol,
            });
        }
        order *= 2;
    }
}

/// `∇e^{-tL}u(x)` through the commutation rule.
pub fn ou_gradient(u: &TestFunction, t: f64, x: &[f64], quad_order: usize) -> Result<Vec<f64>> {
    check_time(t)?;
    check_point(u, x)?;
    Ok(ou_value_grad(u, t, x, quad_order).1)
}

/// `∇e^{-tL}u(x)` by differentiating the Mehler kernel instead of `u`:
/// `∂ᵢ e^{-tL}u(x) = (e^{-t}/σ) E[u(e^{-t}x + σξ) ξᵢ]`, `σ = √(1-e^{-2t})`.
pub fn ou_gradient_kernel(u: &TestFunction, t: f64, x: &[f64], quad_order: usize) -> Result<Vec<f64>> {
    check_time(t)?;
    check_point(u, x)?;
    let n = u.dim();
    let (c, s) = mehler(t);
    let mut grad = vec![0.0; n];
    let mut m = vec![Moments::default(); n];
    for p in u.products() {
        for i in 0..n {
            m[i] = factor_moments(&p.factors[i], c * x[i], s, quad_order, true);
        }
        for i in 0..n {
            let others: f64 = (0..n).filter(|&j| j != i).map(|j| m[j].plain).product();
            grad[i] += p.coef * m[i].first * others * c / s;
        }
    }
    Ok(grad)
}

/// Row-major Hessian of `e^{-tL}u` at `x`, `e^{-2t} e^{-tL}∂ᵢ∂ⱼu`.
pub fn ou_hessian(u: &TestFunction, t: f64, x: &[f64], order: usize) -> Vec<f64> {
    let n = u.dim();
    let (c, s) = mehler(t);
    let mut h = vec![0.0; n * n];
    for p in u.products() {
        let d1: Vec<Factor> = p.factors.iter().map(Factor::derivative).collect();
        let m0: Vec<f64> = (0..n).map(|i| factor_moments(&p.factors[i], c * x[i], s, order, false).plain).collect();
        let m1: Vec<f64> = (0..n).map(|i| factor_moments(&d1[i], c * x[i], s, order, false).plain).collect();
        let m2: Vec<f64> = (0..n)
            .map(|i| factor_moments(&d1[i].derivative(), c * x[i], s, order, false).plain)
            .collect();
        for i in 0..n {
            for j in 0..n {
                let mut v = p.coef * c * c;
                for k in 0..n {
                    v *= if i == j && k == i {
                        m2[k]
                    } else if k == i || k == j {
                        m1[k]
                    } else {
                        m0[k]
                    };
                }
                h[i * n + j] += v;
            }
        }
    }
    h
}

/// `Lu(x) = -Δu(x) + x·∇u(x)` from the closed forms.
#[allow(non_snake_case)]
pub fn apply_L(u: &TestFunction, x: &[f64]) -> Result<f64> {
    check_point(u, x)?;
    let g = u.gradient(x);
    let drift: f64 = x.iter().zip(&g).map(|(a, b)| a * b).sum();
    Ok(-u.laplacian(x) + drift)
}

/// `|∂ₜv + Lv|` at `(x, t)` for `v(·, t) = e^{-tL}u`; `∂ₜ` by a symmetric
/// difference with step `1e-4·max(t, 0.01)`.
pub fn heat_residual(u: &TestFunction, x: &[f64], t: f64) -> Result<f64> {
    check_time(t)?;
    check_point(u, x)?;
    let order = DEFAULT_ORDER;
    let h = 1e-4 * t.max(0.01);
    let dt = (ou_value(u, t + h, x, order) - ou_value(u, (t - h).max(0.0), x, order)) / (t + h - (t - h).max(0.0));
    let (_, grad) = ou_value_grad(u, t, x, order);
    let hess = ou_hessian(u, t, x, order);
    let n = u.dim();
    let lap: f64 = (0..n).map(|i| hess[i * n + i]).sum();
    let drift: f64 = x.iter().zip(&grad).map(|(a, b)| a * b).sum();
    Ok((dt - lap + drift).abs())
}

/// Value of a Gaussian integral with its estimated error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianIntegral {
    pub value: f64,
    pub error: f64,
    pub order: usize,
}

/// `∫ f dγ` over ℝⁿ by tensor Gauss–Hermite, doubling the order from 8 until
/// two successive values agree to `tol` (cap [`MAX_ORDER`], lower in 3-D).
pub fn integrate_gamma<F: Fn(&[f64]) -> f64>(f: F, n: usize, tol: f64) -> Result<GaussianIntegral> {
    if n == 0 || n > crate::MAX_DIM {
        return Err(Error::Dimension(n));
    }
    let cap = if n == 3 { 64 } else { MAX_ORDER };
    let tensor = |order: usize| -> f64 {
        let rule = quadrature::hermite(order);
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        let mut total = 0.0;
        loop {
            let mut w = 1.0;
            for d in 0..n {
                x[d] = rule.nodes[idx[d]];
                w *= rule.weights[idx[d]];
            }
            total += w * f(&x);
            let mut d = 0;
            while d < n {
                idx[d] += 1;
                if idx[d] < order {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == n {
                return total;
            }
        }
    };
    let mut order = 8;
    let mut prev = tensor(order);
    while order * 2 <= cap {
        order *= 2;
        let cur = tensor(order);
        let err = (cur - prev).abs();
        if err <= tol {
            return Ok(GaussianIntegral { value: cur, error: err, order });
        }
        prev = cur;
    }
    Err(Error::BudgetExhausted {
        value: prev,
        achieved: f64::NAN,
        requested: tol,
    })
}

/// `∫_{box} f dγ` by tensor composite Gauss–Legendre (unit panels), doubling
/// the per-panel order until successive values agree to `tol`. Suited to
/// integrands with compact support inside the box.
pub fn integrate_gamma_box<F: Fn(&[f64]) -> f64>(f: F, lo: &[f64], hi: &[f64], tol: f64) -> Result<GaussianIntegral> {
    let n = lo.len();
    if n == 0 || n > crate::MAX_DIM || hi.len() != n {
        return Err(Error::Dimension(n));
    }
    let eval = |order: usize| -> f64 {
        // Nodes per axis on the composite rule.
        let axes: Vec<Vec<(f64, f64)>> = (0..n)
            .map(|d| {
                let mut pts = Vec::new();
                let panels = (hi[d] - lo[d]).ceil().max(1.0) as usize;
                let width = (hi[d] - lo[d]) / panels as f64;
                let rule = quadrature::legendre(order);
                for p in 0..panels {
                    let mid = lo[d] + (p as f64 + 0.5) * width;
                    for (x, w) in rule.iter() {
                        let z = mid + 0.5 * width * x;
                        pts.push((z, 0.5 * width * w * phi(z)));
                    }
                }
                pts
            })
            .collect();
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        let mut total = 0.0;
        loop {
            let mut w = 1.0;
            for d in 0..n {
                let (z, wz) = axes[d][idx[d]];
                x[d] = z;
                w *= wz;
            }
            total += w * f(&x);
            let mut d = 0;
            while d < n {
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == n {
                return total;
            }
        }
    };
    let mut order = 8;
    let mut prev = eval(order);
    while order * 2 <= 64 {
        order *= 2;
        let cur = eval(order);
        let err = (cur - prev).abs();
        if err <= tol {
            return Ok(GaussianIntegral { value: cur, error: err, order });
        }
        prev = cur;
    }
    Err(Error::BudgetExhausted {
        value: prev,
        achieved: f64::NAN,
        requested: tol,
    })
}

/// Per-axis Gaussian expectations of each product's factors on a tensor grid.
///
/// Returns values and gradients of `e^{-tL}u` at every node of the grid
/// spanned by `axes` (row-major, last axis fastest). Costs `O(Σ axes)`
/// one-dimensional quadratures per product instead of one per node.
pub fn grid_values(u: &TestFunction, t: f64, axes: &[Vec<f64>], order: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = u.dim();
    assert_eq!(axes.len(), n);
    let (c, s) = mehler(t);
    let total: usize = axes.iter().map(Vec::len).product();
    let mut values = vec![0.0; total];
    let mut grads = vec![vec![0.0; n]; total];
    for p in u.products() {
        let plain: Vec<Vec<f64>> = (0..n)
            .map(|d| axes[d].iter().map(|&x| factor_moments(&p.factors[d], c * x, s, order, false).plain).collect())
            .collect();
        let deriv: Vec<Vec<f64>> = (0..n)
            .map(|d| {
                let df = p.factors[d].derivative();
                axes[d].iter().map(|&x| factor_moments(&df, c * x, s, order, false).plain).collect()
            })
            .collect();
        let mut idx = vec![0usize; n];
        for node in 0..total {
            let mut rem = node;
            for d in (0..n).rev() {
                idx[d] = rem % axes[d].len();
                rem /= axes[d].len();
            }
            let mut v = p.coef;
            for d in 0..n {
                v *= plain[d][idx[d]];
            }
            values[node] += v;
            for i in 0..n {
                let mut g = p.coef * c * deriv[i][idx[i]];
                for d in 0..n {
                    if d != i {
                        g *= plain[d][idx[d]];
                    }
                }
                grads[node][i] += g;
            }
        }
    }
    (values, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h2() -> TestFunction {
        TestFunction::hermite(vec![2]).unwrap()
    }

    #[test]
    fn l_examples() {
        let one = TestFunction::constant(2, 1.0).unwrap();
        assert_eq!(apply_L(&one, &[0.3, -2.0]).unwrap(), 0.0);
        let xi = TestFunction::polynomial(vec![Monomial { coef: 1.0, powers: vec![0, 1] }]).unwrap();
        // L x₂ = x₂
        assert!((apply_L(&xi, &[0.7, -1.3]).unwrap() + 1.3).abs() < 1e-15);
        for x in [-1.5, 0.0, 0.4, 2.0] {
            let expected = 2.0 * (x * x - 1.0);
            assert!((apply_L(&h2(), &[x]).unwrap() - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn ou_examples() {
        let one = TestFunction::constant(1, 1.0).unwrap();
        let e = ou_apply(&one, 0.7, &[3.0], 40).unwrap();
        assert!((e.value - 1.0).abs() < 1e-14);
        let x = TestFunction::polynomial(vec![Monomial { coef: 1.0, powers: vec![1] }]).unwrap();
        for t in [0.05, 0.5, 2.0] {
            let e = ou_apply(&x, t, &[1.7], 40).unwrap();
            assert!((e.value - (-t).exp() * 1.7).abs() < 1e-12);
            assert!((e.gradient[0] - (-t).exp()).abs() < 1e-12);
        }
        let e = ou_apply(&h2(), 0.3, &[1.2], 40).unwrap();
        assert!((e.value - (-0.6f64).exp() * (1.44 - 1.0)).abs() < 1e-12);
        assert!(ou_apply(&h2(), 0.0, &[1.0], 40).is_err());
        assert!(ou_apply(&h2(), 0.1, &[1.0, 2.0], 40).is_err());
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let one = TestFunction::constant(2, 3.0).unwrap();
        assert_eq!(ou_gradient(&one, 0.4, &[0.1, 0.2], 40).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn heat_residual_examples() {
        let one = TestFunction::constant(1, 1.0).unwrap();
        assert_eq!(heat_residual(&one, &[0.5], 0.3).unwrap(), 0.0);
        for (x, t) in [(0.0, 0.1), (1.3, 0.5), (-2.0, 1.0)] {
            assert!(heat_residual(&h2(), &[x], t).unwrap() < 1e-6);
        }
    }

    #[test]
    fn integrate_gamma_examples() {
        let one = integrate_gamma(|_| 1.0, 2, 1e-12).unwrap();
        assert!((one.value - 1.0).abs() < 1e-14);
        let second = integrate_gamma(|x| x[0] * x[0], 1, 1e-12).unwrap();
        assert!((second.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bump_semigroup_is_positive_and_conservative() {
        let u = TestFunction::bump(vec![0.5, -0.2], 0.8, 1.0).unwrap();
        for t in [1e-3, 0.1, 1.0, 5.0] {
            for x in [[0.5, -0.2], [3.0, 3.0], [-4.0, 0.0]] {
                assert!(ou_value(&u, t, &x, 40) >= 0.0);
            }
        }
        // ∫ e^{-tL}u dγ = ∫ u dγ (γ is invariant).
        let lo = [-0.3, -1.0];
        let hi = [1.3, 0.6];
        let mass = integrate_gamma_box(|x| u.value(x), &lo, &hi, 1e-12).unwrap().value;
        let evolved = integrate_gamma(|x| ou_value(&u, 0.8, x, 40), 2, 1e-9).unwrap().value;
        assert!((mass - evolved).abs() < 1e-8, "{mass} vs {evolved}");
    }

    #[test]
    fn grid_values_match_pointwise() {
        let u = TestFunction::sum(vec![
            TestFunctionSpec::Bump { center: vec![0.5, 0.0], radius: 1.0, height: 1.0 },
            TestFunctionSpec::Hermite { beta: vec![1, 2], coef: 0.1 },
        ])
        .unwrap();
        let axes = vec![vec![-1.0, 0.0, 0.75], vec![-0.5, 0.25]];
        let (vals, grads) = grid_values(&u, 0.2, &axes, 40);
        let mut k = 0;
        for &x0 in &axes[0] {
            for &x1 in &axes[1] {
                let (v, g) = ou_value_grad(&u, 0.2, &[x0, x1], 40);
                assert!((vals[k] - v).abs() < 1e-14);
                assert!((grads[k][0] - g[0]).abs() < 1e-14 && (grads[k][1] - g[1]).abs() < 1e-14);
                k += 1;
            }
        }
    }
}
