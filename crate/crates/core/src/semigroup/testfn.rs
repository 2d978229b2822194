//! Closed-form test functions with exact derivatives.
//!
//! Every kind expands into a finite sum of separable products
//! `coef · ∏ᵢ fᵢ(xᵢ)`, where each factor is a polynomial, optionally
//! restricted to an interval. The Ornstein–Uhlenbeck semigroup is a tensor
//! product of one-dimensional semigroups, so this form lets every evaluation
//! reduce to one-dimensional Gaussian integrals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::MAX_DIM;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// Serializable description of a test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestFunctionSpec {
    /// `height · ∏ᵢ (1 - ((xᵢ - cᵢ)/radius)²)³` on the cube `|xᵢ - cᵢ| < radius`.
    /// C² with compact support.
    Bump {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// `Σ coef · x^powers`.
    Polynomial { terms: Vec<Monomial> },
    /// `coef · ∏ᵢ He_{βᵢ}(xᵢ)` with probabilists' Hermite polynomials.
    Hermite {
        beta: Vec<u32>,
        #[serde(default = "one")]
        coef: f64,
    },
    Sum { terms: Vec<TestFunctionSpec> },
}

fn one() -> f64 {
    1.0
}

/// Polynomial in `y = (x - shift) / scale`, optionally supported on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub shift: f64,
    pub scale: f64,
    /// Coefficients in ascending powers of `y`.
    pub coeffs: Vec<f64>,
    pub support: Option<(f64, f64)>,
}

impl Factor {
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Factor {
            shift: 0.0,
            scale: 1.0,
            coeffs,
            support: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Factor::polynomial(vec![c])
    }

    /// `(1 - y²)³` on `[c - ρ, c + ρ]`.
    pub fn bump(center: f64, radius: f64) -> Self {
        Factor {
            shift: center,
            scale: radius,
            coeffs: vec![1.0, 0.0, -3.0, 0.0, 3.0, 0.0, -1.0],
            support: Some((center - radius, center + radius)),
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if let Some((lo, hi)) = self.support {
            if x <= lo || x >= hi {
                return 0.0;
            }
        }
        let y = (x - self.shift) / self.scale;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    pub fn derivative(&self) -> Factor {
        let coeffs: Vec<f64> = if self.coeffs.len() <= 1 {
            vec![0.0]
        } else {
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c / self.scale)
                .collect()
        };
        Factor {
            shift: self.shift,
            scale: self.scale,
            coeffs,
            support: self.support,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

/// `coef · ∏ᵢ factors[i](xᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Product {
    pub coef: f64,
    pub factors: Vec<Factor>,
}

impl Product {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.coef;
        for (f, &xi) in self.factors.iter().zip(x) {
            if v == 0.0 {
                break;
            }
            v *= f.eval(xi);
        }
        v
    }
}

/// Probabilists' Hermite polynomial `He_k` in ascending coefficients.
pub fn hermite_coeffs(k: u32) -> Vec<f64> {
    let mut prev = vec![1.0];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for j in 1..k {
        // He_{j+1} = x He_j - j He_{j-1}
        let mut next = vec![0.0; cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= j as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// A closed-form test function on ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    spec: TestFunctionSpec,
    dim: usize,
    products: Vec<Product>,
}

impl TestFunction {
    pub fn new(spec: TestFunctionSpec) -> Result<Self> {
        let dim = spec_dim(&spec)?;
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Dimension(dim));
        }
        let mut products = Vec::new();
        expand(&spec, dim, &mut products)?;
        Ok(TestFunction { spec, dim, products })
    }

    pub fn bump(center: Vec<f64>, radius: f64, height: f64) -> Result<Self> {
        Self::new(TestFunctionSpec::Bump { center, radius, height })
    }

    pub fn hermite(beta: Vec<u32>) -> Result<Self> {
        Self::new(TestFunctionSpec::Hermite { beta, coef: 1.0 })
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Self::new(TestFunctionSpec::Polynomial {
            terms: vec![Monomial {
                coef: value,
                powers: vec![0; dim],
            }],
        })
    }

    pub fn polynomial(terms: Vec<Monomial>) -> Result<Self> {
        Self::new(TestFunctionSpec::Polynomial { terms })
    }

    pub fn sum(terms: Vec<TestFunctionSpec>) -> Result<Self> {
        Self::new(TestFunctionSpec::Sum { terms })
    }

    /// `self + other`.
    pub fn plus(&self, other: &TestFunction) -> Result<Self> {
        Self::sum(vec![self.spec.clone(), other.spec.clone()])
    }

    /// `c · self`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.products {
            p.coef *= c;
        }
        out.spec = TestFunctionSpec::Sum {
            terms: vec![scale_spec(&self.spec, c)],
        };
        out
    }

    pub fn spec(&self) -> &TestFunctionSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    /// Bounding box of the support, if compact.
    pub fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in &self.products {
            for (i, f) in p.factors.iter().enumerate() {
                let (a, b) = f.support?;
                lo[i] = lo[i].min(a);
                hi[i] = hi[i].max(b);
            }
        }
        if self.products.is_empty() {
            return None;
        }
        Some((lo, hi))
    }

    pub fn is_identically_zero(&self) -> bool {
        self.products.iter().all(|p| p.coef == 0.0 || p.factors.iter().any(Factor::is_zero))
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.products.iter().map(|p| p.eval(x)).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for p in &self.products {
            let vals: Vec<f64> = p.factors.iter().zip(x).map(|(f, &xi)| f.eval(xi)).collect();
            for (i, gi) in g.iter_mut().enumerate() {
                let d = p.factors[i].derivative().eval(x[i]);
                let others: f64 = vals.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).product();
                *gi += p.coef * d * others;
            }
        }
        g
    }

    /// Row-major `n × n` Hessian.
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut h = vec![0.0; n * n];
        for p in &self.products {
            let f0: Vec<f64> = p.factors.iter().zip(x).map(|(f, &xi)| f.eval(xi)).collect();
            let d1: Vec<Factor> = p.factors.iter().map(Factor::derivative).collect();
            let f1: Vec<f64> = d1.iter().zip(x).map(|(f, &xi)| f.eval(xi)).collect();
            let f2: Vec<f64> = d1.iter().zip(x).map(|(f, &xi)| f.derivative().eval(xi)).collect();
            for i in 0..n {
                for j in 0..n {
                    let mut v = p.coef;
                    for k in 0..n {
                        v *= if i == j && k == i {
                            f2[k]
                        } else if k == i || k == j {
                            f1[k]
                        } else {
                            f0[k]
                        };
                    }
                    h[i * n + j] += v;
                }
            }
        }
        h
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        let h = self.hessian(x);
        (0..n).map(|i| h[i * n + i]).sum()
    }
}

fn scale_spec(spec: &TestFunctionSpec, c: f64) -> TestFunctionSpec {
    match spec {
        TestFunctionSpec::Bump { center, radius, height } => TestFunctionSpec::Bump {
            center: center.clone(),
            radius: *radius,
            height: height * c,
        },
        TestFunctionSpec::Polynomial { terms } => TestFunctionSpec::Polynomial {
            terms: terms
                .iter()
                .map(|m| Monomial {
                    coef: m.coef * c,
                    powers: m.powers.clone(),
                })
                .collect(),
        },
        TestFunctionSpec::Hermite { beta, coef } => TestFunctionSpec::Hermite {
            beta: beta.clone(),
            coef: coef * c,
        },
        TestFunctionSpec::Sum { terms } => TestFunctionSpec::Sum {
            terms: terms.iter().map(|t| scale_spec(t, c)).collect(),
        },
    }
}

fn spec_dim(spec: &TestFunctionSpec) -> Result<usize> {
    match spec {
        TestFunctionSpec::Bump { center, .. } => Ok(center.len()),
        TestFunctionSpec::Polynomial { terms } => terms
            .first()
            .map(|m| m.powers.len())
            .ok_or_else(|| Error::invalid("polynomial needs at least one term")),
        TestFunctionSpec::Hermite { beta, .. } => Ok(beta.len()),
        TestFunctionSpec::Sum { terms } => terms
            .first()
            .map(spec_dim)
            .unwrap_or_else(|| Err(Error::invalid("sum needs at least one term"))),
    }
}

fn expand(spec: &TestFunctionSpec, dim: usize, out: &mut Vec<Product>) -> Result<()> {
    match spec {
        TestFunctionSpec::Bump { center, radius, height } => {
            if center.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: center.len() });
            }
            if !(*radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid("bump needs a finite centre and positive radius"));
            }
            out.push(Product {
                coef: *height,
                factors: center.iter().map(|&c| Factor::bump(c, *radius)).collect(),
            });
        }
        TestFunctionSpec::Polynomial { terms } => {
            for m in terms {
                if m.powers.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: m.powers.len() });
                }
                out.push(Product {
                    coef: m.coef,
                    factors: m
                        .powers
                        .iter()
                        .map(|&p| {
                            let mut c = vec![0.0; p as usize + 1];
                            c[p as usize] = 1.0;
                            Factor::polynomial(c)
                        })
                        .collect(),
                });
            }
        }
        TestFunctionSpec::Hermite { beta, coef } => {
            if beta.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: beta.len() });
            }
            out.push(Product {
                coef: *coef,
                factors: beta.iter().map(|&k| Factor::polynomial(hermite_coeffs(k))).collect(),
            });
        }
        TestFunctionSpec::Sum { terms } => {
            if terms.is_empty() {
                return Err(Error::invalid("sum needs at least one term"));
            }
            for t in terms {
                expand(t, dim, out)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_coefficients() {
        assert_eq!(hermite_coeffs(2), vec![-1.0, 0.0, 1.0]);
        assert_eq!(hermite_coeffs(3), vec![0.0, -3.0, 0.0, 1.0]);
        assert_eq!(hermite_coeffs(4), vec![3.0, 0.0, -6.0, 0.0, 1.0]);
    }

    #[test]
    fn bump_is_compact_and_c2_at_the_edge() {
        let u = TestFunction::bump(vec![0.5], 1.0, 2.0).unwrap();
        assert_eq!(u.value(&[0.5]), 2.0);
        assert_eq!(u.value(&[1.5]), 0.0);
        assert_eq!(u.value(&[-0.6]), 0.0);
        let eps = 1e-6;
        assert!(u.value(&[1.5 - eps]).abs() < 1e-15);
        assert!(u.gradient(&[1.5 - eps])[0].abs() < 1e-10);
        assert!(u.laplacian(&[1.5 - eps]).abs() < 1e-3);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let u = TestFunction::sum(vec![
            TestFunctionSpec::Bump { center: vec![0.2, -0.3], radius: 1.1, height: 1.5 },
            TestFunctionSpec::Hermite { beta: vec![2, 1], coef: 0.3 },
        ])
        .unwrap();
        let h = 1e-5;
        for x in [[0.1, 0.2], [-0.4, -0.9], [0.9, 0.0]] {
            let g = u.gradient(&x);
            for i in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let fd = (u.value(&xp) - u.value(&xm)) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0), "{fd} vs {}", g[i]);
                let gp = u.gradient(&xp);
                let gm = u.gradient(&xm);
                let hess = u.hessian(&x);
                for j in 0..2 {
                    let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                    assert!((fd2 - hess[i * 2 + j]).abs() <= 1e-5 * hess[i * 2 + j].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let json = r#"{"kind":"sum","terms":[{"kind":"bump","center":[0.0],"radius":1.0},{"kind":"hermite","beta":[2]}]}"#;
        let spec: TestFunctionSpec = serde_json::from_str(json).unwrap();
        let u = TestFunction::new(spec).unwrap();
        assert_eq!(u.dim(), 1);
        assert_eq!(u.products().len(), 2);
        assert!((u.value(&[0.0]) - 0.0).abs() < 1e-15); // 1 + He_2(0) = 1 - 1
    }

    #[test]
    fn rejects_mixed_dimensions() {
        let r = TestFunction::sum(vec![
            TestFunctionSpec::Bump { center: vec![0.0], radius: 1.0, height: 1.0 },
            TestFunctionSpec::Hermite { beta: vec![1, 1], coef: 1.0 },
        ]);
        assert!(r.is_err());
    }
}
