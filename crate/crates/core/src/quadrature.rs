//! Gauss–Legendre and Gauss–Hermite rules.
//!
//! Rules are computed once per order and shared read-only through a global
//! cache. The Hermite rule is normalised to the standard normal measure:
//! `Σ wᵢ f(ξᵢ) ≈ ∫ f dγ₁`, so the weights sum to one.

use std::collections::HashMap;
use std::f64::consts::SQRT_2;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::{GaussHermite, GaussLegendre};

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

type Cache = Mutex<HashMap<usize, Arc<Rule>>>;

fn cached(cache: &'static OnceLock<Cache>, order: usize, build: fn(usize) -> Rule) -> Arc<Rule> {
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().expect("quadrature cache poisoned");
    guard
        .entry(order)
        .or_insert_with(|| Arc::new(build(order)))
        .clone()
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn legendre(order: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    cached(&CACHE, order.max(1), build_legendre)
}

/// Gauss–Hermite rule for the standard normal measure.
pub fn hermite(order: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    cached(&CACHE, order.max(1), build_hermite)
}

fn build_legendre(n: usize) -> Rule {
    let q = GaussLegendre::new(NonZeroUsize::new(n).expect("order ≥ 1"));
    sorted(q.iter().map(|(x, w)| (*x, *w)).collect())
}

/// Physicists' rule (weight `e^{-x²}`) rescaled to the standard normal measure.
fn build_hermite(n: usize) -> Rule {
    let q = GaussHermite::new(NonZeroUsize::new(n).expect("order ≥ 1"));
    let mut rule = sorted(q.iter().map(|(x, w)| (x * SQRT_2, *w)).collect());
    // Normalise so that constants integrate exactly.
    let total: f64 = rule.weights.iter().sum();
    for w in &mut rule.weights {
        *w /= total;
    }
    rule
}

fn sorted(mut pairs: Vec<(f64, f64)>) -> Rule {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    Rule { nodes, weights }
}

/// Composite Gauss–Legendre integral of `f` over `[lo, hi]` using panels no
/// wider than `max_panel` and `order` nodes per panel.
pub fn integrate_composite<F: FnMut(f64) -> f64>(
    lo: f64,
    hi: f64,
    max_panel: f64,
    order: usize,
    mut f: F,
) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let panels = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    let rule = legendre(order);
    let mut total = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * width;
        let mid = a + 0.5 * width;
        let half = 0.5 * width;
        let mut s = 0.0;
        for (x, w) in rule.iter() {
            s += w * f(mid + half * x);
        }
        total += s * half;
    }
    total
}
