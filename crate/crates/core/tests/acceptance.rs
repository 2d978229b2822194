//! Acceptance criteria 1–10. Runs without the libtest harness so every
//! criterion prints one line regardless of output capture.
//!
//! Criteria listed in `KNOWN_FAILURES` fail on the current construction; see
//! the README. The target fails if the set of failing criteria differs from
//! that list in either direction.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use gaussharm::measure::{gamma_box_monte_carlo, gamma_cube};
use gaussharm::operators::{maximal_t_field, square_field, FieldResolution, Grid, OperatorParams};
use gaussharm::semigroup::{heat_residual, hermite_coeffs, ou_apply, ou_gradient, DEFAULT_ORDER};
use gaussharm::verify::checks::{layer_cake_error, main_study, max_consecutive_change, sample_abs};
use gaussharm::verify::{
    aperture_reports, caccioppoli_reports, covering_reports, geometry_reports, main_reports, weak11_reports,
    VerificationReport, VerifyConfig,
};
use gaussharm::TestFunction;

const KNOWN_FAILURES: &[u32] = &[3, 5, 8];

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    summary: String,
}

fn run(id: u32, name: &str, limit_s: u64, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = took <= Duration::from_secs(limit_s);
    let pass = o.pass && in_time;
    println!(
        "criterion {id:>2} {:4} {name}: {} [{:.1} s, limit {limit_s} s]",
        if pass { "PASS" } else { "FAIL" },
        o.summary,
        took.as_secs_f64()
    );
    pass
}

fn hermite_value(beta: &[u32], x: &[f64]) -> f64 {
    beta.iter()
        .zip(x)
        .map(|(&k, &xi)| hermite_coeffs(k).iter().rev().fold(0.0, |acc, c| acc * xi + c))
        .product()
}

fn multi_indices(n: usize, max_deg: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|b: Vec<u32>| {
                let used: u32 = b.iter().sum();
                (0..=max_deg - used).map(move |k| {
                    let mut c = b.clone();
                    c.push(k);
                    c
                })
            })
            .collect();
    }
    out
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// `e^{-tL}H_β = e^{-|β|t}H_β`, error relative to `max(|exact|, 1)`.
fn semigroup_exactness() -> Outcome {
    const TOL: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=3 {
        for beta in multi_indices(n, 4) {
            let u = TestFunction::hermite(beta.clone()).unwrap();
            let deg: u32 = beta.iter().sum();
            for t in [0.1, 0.5, 1.0] {
                for _ in 0..5 {
                    let x = uniform(&mut rng, n, -3.0, 3.0);
                    let exact = (-(f64::from(deg)) * t).exp() * hermite_value(&beta, &x);
                    let v = ou_apply(&u, t, &x, DEFAULT_ORDER).unwrap().value;
                    worst = worst.max((v - exact).abs() / exact.abs().max(1.0));
                    cases += 1;
                }
            }
        }
    }
    Outcome { pass: worst < TOL, summary: format!("max rel err {worst:.2e} over {cases} cases (tol {TOL:.0e})") }
}

fn gradient_integrity() -> Outcome {
    const GRAD_TOL: f64 = 1e-5;
    const GRAD_FLOOR: f64 = 1e-6;
    const FD_STEP: f64 = 1e-5;
    const HEAT_TOL: f64 = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let fns = [
        TestFunction::bump(vec![0.0], 1.0, 1.0).unwrap(),
        TestFunction::bump(vec![1.0, -0.5], 0.8, 1.0).unwrap(),
        TestFunction::hermite(vec![3]).unwrap(),
        TestFunction::hermite(vec![1, 2]).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let u = &fns[i % fns.len()];
        let n = u.dim();
        let x = uniform(&mut rng, n, -3.0, 3.0);
        let t = rng.random_range(0.05..2.0);
        let g = ou_gradient(u, t, &x, DEFAULT_ORDER).unwrap();
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(GRAD_FLOOR);
        for k in 0..n {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += FD_STEP;
            xm[k] -= FD_STEP;
            let fd = (ou_apply(u, t, &xp, DEFAULT_ORDER).unwrap().value - ou_apply(u, t, &xm, DEFAULT_ORDER).unwrap().value)
                / (2.0 * FD_STEP);
            worst = worst.max((g[k] - fd).abs() / gmax);
        }
    }
    let bump = TestFunction::bump(vec![0.5], 1.0, 1.0).unwrap();
    let mut heat: f64 = 0.0;
    for i in 0..20 {
        let x = -3.0 + 6.0 * f64::from(i) / 19.0;
        for j in 0..10 {
            let t = 0.1 + 0.9 * f64::from(j) / 9.0;
            heat = heat.max(heat_residual(&bump, &[x], t).unwrap());
        }
    }
    Outcome {
        pass: worst < GRAD_TOL && heat < HEAT_TOL,
        summary: format!("gradient rel err {worst:.2e} (tol {GRAD_TOL:.0e}), heat residual {heat:.2e} (tol {HEAT_TOL:.0e})"),
    }
}

fn measure_integrity() -> Outcome {
    const SIGMAS: f64 = 3.0;
    const MC_SAMPLES: usize = 200_000;
    const LAYER_CAKE_TOL: f64 = 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    let mut worst_z: f64 = 0.0;
    let mut worst_box = (vec![], vec![], 0.0);
    for i in 0..50 {
        let n = 1 + i % 2;
        let lo = uniform(&mut rng, n, -2.5, 1.5);
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.1..2.5)).collect();
        let exact = gamma_cube(&lo, &hi).unwrap().value;
        let (p, se) = gamma_box_monte_carlo(&lo, &hi, MC_SAMPLES, SEED + i as u64);
        let z = (p - exact).abs() / se.max(f64::MIN_POSITIVE);
        if z > worst_z {
            worst_z = z;
            worst_box = (lo, hi, exact);
        }
    }
    // Diagnostic only: the worst box again with 10x the samples on fresh seeds,
    // separating a biased exact value from an ordinary tail event.
    let (lo, hi, exact) = &worst_box;
    let recheck = (0..6u64)
        .map(|k| {
            let (p, se) = gamma_box_monte_carlo(lo, hi, 10 * MC_SAMPLES, SEED ^ (0x5eed + k));
            (p - exact).abs() / se.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    let grid = Grid::new(1, 8.0, 1.0 / 32.0).unwrap();
    let u = TestFunction::bump(vec![1.0], 0.75, 1.0).unwrap();
    let params = OperatorParams::standard(1.0, 1.0);
    let res = FieldResolution::default();
    let fields = [
        sample_abs(&u, &grid, "bump").unwrap(),
        maximal_t_field(&u, &grid, &params, &res).unwrap(),
        square_field(&u, &grid, &params, &res).unwrap(),
    ];
    let lc = fields.iter().map(layer_cake_error).fold(0.0, f64::max);
    Outcome {
        pass: worst_z <= SIGMAS && lc <= LAYER_CAKE_TOL,
        summary: format!(
            "max |MC − exact|/σ {worst_z:.2} (tol {SIGMAS}; worst box at 10x samples {recheck:.2}), layer-cake err {lc:.2e} (tol {LAYER_CAKE_TOL})"
        ),
    }
}

fn all_pass(reports: &[VerificationReport]) -> bool {
    !reports.is_empty() && reports.iter().all(|r| r.pass)
}

fn geometry_lemmas() -> Outcome {
    let cfg = VerifyConfig::for_dim(1);
    let reports = geometry_reports(&cfg).unwrap();
    let viol: Vec<String> = reports
        .iter()
        .map(|r| {
            let v = r.details.get("violations").and_then(Value::as_u64).unwrap_or(r.lhs as u64);
            format!("{} {}", r.case, v)
        })
        .collect();
    Outcome { pass: all_pass(&reports), summary: format!("violations: {}", viol.join(", ")) }
}

fn covering() -> Outcome {
    const BUDGET: f64 = 50.0;
    const STABILITY: f64 = 0.2;
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [1, 2] {
        let cfg = VerifyConfig::for_dim(n);
        assert_eq!(cfg.budgets.covering, BUDGET);
        assert_eq!(cfg.budgets.covering_stability, STABILITY);
        let reports = covering_reports(&cfg).unwrap();
        let cmax = reports.iter().map(|r| r.estimated_constant).fold(0.0, f64::max);
        let failed = reports.iter().filter(|r| !r.pass).count();
        pass &= all_pass(&reports);
        parts.push(format!("n={n}: {} sets, max C {cmax:.1}, {failed} failing", reports.len()));
    }
    Outcome { pass, summary: format!("{} (budget {BUDGET}, stability {STABILITY})", parts.join("; ")) }
}

fn weak11() -> Outcome {
    const BUDGET: f64 = 100.0;
    let cfg = VerifyConfig::for_dim(1);
    assert_eq!(cfg.budgets.weak11, BUDGET);
    let reports = weak11_reports(&cfg).unwrap();
    let worst = reports.iter().map(|r| r.estimated_constant).fold(0.0, f64::max);
    Outcome { pass: all_pass(&reports), summary: format!("{} functions, max ratio {worst:.3} (budget {BUDGET})", reports.len()) }
}

fn aperture() -> Outcome {
    const D_BUDGET: f64 = 100.0;
    const STABILITY: f64 = 0.25;
    const A_PRIME_UNIT: f64 = 12.0;
    let cfg = VerifyConfig::for_dim(1);
    assert_eq!(cfg.budgets.aperture_d, D_BUDGET);
    assert_eq!(cfg.budgets.aperture_stability, STABILITY);
    let reports = aperture_reports(&cfg).unwrap();
    let unit_ok = reports
        .iter()
        .filter(|r| r.params["A"] == 1.0 && r.params["A_prime"] == 1.0 && r.params["a"] == 1.0)
        .all(|r| r.params["a_prime"] == A_PRIME_UNIT);
    let dmax = reports.iter().map(|r| r.lhs).fold(0.0, f64::max);
    Outcome {
        pass: unit_ok && all_pass(&reports),
        summary: format!("{} cases, max D̂ {dmax:.3} (budget {D_BUDGET}, stability {STABILITY}), a′(1,1,1) = {A_PRIME_UNIT}", reports.len()),
    }
}

fn caccioppoli() -> Outcome {
    const BUDGET: f64 = 50.0;
    const OUTLIER_FACTOR: f64 = 2.0;
    let cfg = VerifyConfig::for_dim(1);
    assert_eq!(cfg.budgets.caccioppoli, BUDGET);
    assert_eq!(cfg.budgets.caccioppoli_outlier, OUTLIER_FACTOR);
    let reports = caccioppoli_reports(&cfg).unwrap();
    let mut pass = all_pass(&reports);
    let mut parts = Vec::new();
    for r in &reports {
        let outliers = r.details["outliers"].as_array().map_or(0, Vec::len);
        let total = r.details["cylinders"].as_array().map_or(0, Vec::len);
        pass &= outliers == 0;
        parts.push(format!("{}: max {:.2e}, median {:.2e}, outliers {outliers}/{total}", r.case, r.lhs, r.details["median"].as_f64().unwrap_or(f64::NAN)));
    }
    Outcome { pass, summary: format!("{} (budget {BUDGET}, outlier factor {OUTLIER_FACTOR})", parts.join("; ")) }
}

fn main_theorem() -> Outcome {
    const BUDGET: f64 = 100.0;
    const STABILITY: f64 = 0.3;
    let cfg = VerifyConfig::for_dim(1);
    assert_eq!(cfg.budgets.main, BUDGET);
    assert_eq!(cfg.budgets.main_stability, STABILITY);
    let reports = main_reports(&cfg).unwrap();
    let worst = reports.iter().map(|r| r.estimated_constant).fold(0.0, f64::max);
    let mut pass = all_pass(&reports);

    let c2 = VerifyConfig::for_dim(2);
    let u = TestFunction::new(c2.corpus[0].function.clone()).unwrap();
    let levels = main_study(&u, c2.main.a, c2.main_a_prime(), c2.grid.half_width, &c2.grid.levels, c2.grid.per_octave).unwrap();
    let ratios: Vec<f64> = levels.iter().map(|l| l.ratio).collect();
    let change = max_consecutive_change(&ratios);
    pass &= ratios.iter().all(|r| r.is_finite() && *r < BUDGET) && change < STABILITY;
    Outcome {
        pass,
        summary: format!(
            "n=1 {} functions max ratio {worst:.3}; n=2 {} ratios {:?} change {change:.3} (budget {BUDGET}, stability {STABILITY})",
            reports.len(),
            c2.corpus[0].id,
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut bundles = Vec::new();
    let mut codes = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let st = Command::new(env!("CARGO_BIN_EXE_gaussharm"))
            .args(["verify", "--dim", "1", "--seed", &SEED.to_string(), "--out"])
            .arg(&out)
            .output()
            .unwrap();
        codes.push(st.status.code());
        bundles.push(std::fs::read(out.join("bundle.json")).unwrap_or_default());
    }
    let same = !bundles[0].is_empty() && bundles[0] == bundles[1];
    Outcome {
        pass: same,
        summary: format!("bundles {} ({} bytes), exit codes {codes:?}", if same { "byte-identical" } else { "differ" }, bundles[0].len()),
    }
}

fn main() {
    // libtest flags (e.g. --nocapture) are accepted and ignored.
    let mut failed = Vec::new();
    let mut check = |id: u32, name: &str, limit: u64, f: fn() -> Outcome| {
        if !run(id, name, limit, f) {
            failed.push(id);
        }
    };
    check(1, "semigroup exactness", 5, semigroup_exactness);
    check(2, "gradient integrity", 30, gradient_integrity);
    check(3, "measure integrity", 60, measure_integrity);
    check(4, "geometry lemmas", 60, geometry_lemmas);
    check(5, "covering", 180, covering);
    check(6, "weak (1,1)", 120, weak11);
    check(7, "change of aperture", 300, aperture);
    check(8, "caccioppoli", 300, caccioppoli);
    check(9, "main theorem", 600, main_theorem);
    check(10, "determinism", 600, determinism);

    let unexpected: Vec<u32> = failed.iter().copied().filter(|c| !KNOWN_FAILURES.contains(c)).collect();
    let fixed: Vec<u32> = KNOWN_FAILURES.iter().copied().filter(|c| !failed.contains(c)).collect();
    println!("failing criteria: {failed:?} (documented known failures: {KNOWN_FAILURES:?})");
    if !unexpected.is_empty() || !fixed.is_empty() {
        eprintln!("unexpected failures {unexpected:?}; known failures now passing {fixed:?}");
        std::process::exit(1);
    }
}
