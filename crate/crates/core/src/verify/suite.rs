//! Runs the enabled check families over a config and assembles reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::checks::*;
use super::config::{CorpusEntry, VerifyConfig};
use super::report::{Bundle, ReportMeta, VerificationReport};
use crate::covering::CoverParams;
use crate::error::Result;
use crate::geometry::{check_admsym, check_cone_inclusion, check_cube_ball, check_diam, LayerCubes};
use crate::operators::Grid;
use crate::semigroup::TestFunction;

/// Seed of case `index` within `family`, independent of execution order.
pub fn derive_seed(root: u64, family: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ root;
    for b in family.bytes().chain(index.to_le_bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn meta(entry: Option<&str>, seed: u64) -> ReportMeta {
    ReportMeta { corpus_entry: entry.map(str::to_string), seed }
}

fn function(e: &CorpusEntry) -> Result<TestFunction> {
    TestFunction::new(e.function.clone())
}

/// Executes every enabled family. An empty corpus yields an empty bundle.
pub fn run_suite(config: &VerifyConfig) -> Result<Bundle> {
    config.validate()?;
    let mut reports = Vec::new();
    if !config.corpus.is_empty() {
        for family in super::config::CHECK_FAMILIES.iter().chain(&super::config::EXTRA_FAMILIES) {
            if !config.checks.iter().any(|c| c == family) {
                continue;
            }
            let mut r = match *family {
                "doubling" => doubling_reports(config)?,
                "weak11" => weak11_reports(config)?,
                "aperture" => aperture_reports(config)?,
                "caccioppoli" => caccioppoli_reports(config)?,
                "main" => main_reports(config)?,
                "fstar" => fstar_reports(config)?,
                "covering" => covering_reports(config)?,
                "geometry" => geometry_reports(config)?,
                _ => unreachable!("validated check family"),
            };
            reports.append(&mut r);
        }
    }
    Ok(Bundle::new(config.clone(), reports))
}

pub fn doubling_reports(cfg: &VerifyConfig) -> Result<Vec<VerificationReport>> {
    let d = &cfg.doubling;
    let b = &cfg.budgets;
    d.taus
        .iter()
        .enumerate()
        .map(|(i, &tau)| {
            let seed = derive_seed(cfg.seed, "doubling", i as u64);
            let full = doubling_ratio(cfg.dim, d.a, tau, d.trials, d.x_max, seed)?;
            let half = doubling_ratio(cfg.dim, d.a, tau, d.trials / 2, d.x_max, derive_seed(seed, "half", 0))?;
            let change = max_consecutive_change(&[half.max_ratio, full.max_ratio]);
            Ok(VerificationReport::measured(
                "doubling",
                &format!("tau={tau}"),
                full.max_ratio,
                1.0,
                b.doubling,
                change <= b.doubling_stability,
                &[("a", d.a), ("tau", tau), ("trials", d.trials as f64), ("dim", cfg.dim as f64)],
                vec![],
                meta(None, seed),
                json!({ "half_trials_ratio": half.max_ratio, "relative_change": change, "worst_pair": full.worst }),
            ))
        })
        .collect()
}

pub fn weak11_reports(cfg: &VerifyConfig) -> Result<Vec<VerificationReport>> {
    let w = &cfg.weak11;
    let b = &cfg.budgets;
    let grid = Grid::new(cfg.dim, cfg.grid.half_width, cfg.grid.h)?;
    let mut fields = Vec::new();
    for e in &cfg.corpus {
        fields.push((e.id.clone(), sample_abs(&function(e)?, &grid, &e.id)?));
    }
    for (i, ind) in w.indicators.iter().enumerate() {
        fields.push((format!("indicator-{i}"), sample_indicator(&ind.center, ind.radius, &grid)?));
    }
    fields
        .par_iter()
        .map(|(id, f)| {
            let o = weak11_ratio(f, w.a, w.per_octave)?;
            Ok(VerificationReport::measured(
                "weak11",
                id,
                o.sup,
                o.norm,
                b.weak11,
                o.layer_cake_error <= b.layer_cake,
                &[("a", w.a), ("per_octave", w.per_octave as f64)],
                vec![cfg.grid.h],
                meta(Some(id), cfg.seed),
                json!({ "argmax_sigma": o.argmax_sigma, "m_max": o.m_max, "flagged": o.flagged, "layer_cake_error": o.layer_cake_error }),
            ))
        })
        .collect()
}

pub fn aperture_reports(cfg: &VerifyConfig) -> Result<Vec<VerificationReport>> {
    let b = &cfg.budgets;
    let cases: Vec<(&CorpusEntry, [f64; 3])> =
        cfg.corpus.iter().flat_map(|e| cfg.aperture.triples.iter().map(move |t| (e, *t))).collect();
    cases
        .par_iter()
        .map(|(e, [big_a, big_ap, a])| {
            let u = function(e)?;
            let o = aperture_study(&u, *big_a, *big_ap, *a, cfg.grid.half_width, &cfg.grid.levels, cfg.grid.per_octave)?;
            let params = [("A", *big_a), ("A_prime", *big_ap), ("a", *a), ("a_prime", o.a_prime)];
            let resolutions: Vec<f64> = o.levels.iter().map(|l| l.h).collect();
            let details = json!({ "levels": o.levels });
            let case = format!("{}:A={big_a},A'={big_ap},a={a}", e.id);
            if o.levels.iter().all(|l| l.lhs_norm == 0.0 && l.rhs_norm == 0.0) {
                return Ok(VerificationReport::measured(
                    "aperture", &case, 0.0, 0.0, b.aperture_d, true, &params, resolutions, meta(Some(&e.id), cfg.seed), details,
                ));
            }
            let ds: Vec<f64> = o.levels.iter().map(|l| l.d_hat.unwrap_or(f64::INFINITY)).collect();
            let d_max = ds.iter().copied().fold(0.0, f64::max);
            let stable = max_consecutive_change(&ds) <= b.aperture_stability;
            let c_ok = o.levels.iter().all(|l| l.c_hat <= b.aperture_c);
            let lc_ok = o.levels.iter().all(|l| l.layer_cake_error <= b.layer_cake);
            Ok(VerificationReport::measured(
                "aperture",
                &case,
                d_max,
                1.0,
                b.aperture_d,
                stable && c_ok && lc_ok,
                &params,
                resolutions,
                meta(Some(&e.id), cfg.seed),
                details,
            ))
        })
        .collect()
}

/// Random cylinders of the Caccioppoli suite: `(x₀, t₀, r, c)`.
pub fn caccioppoli_cylinders(cfg: &VerifyConfig) -> Vec<(Vec<f64>, f64, f64, f64)> {
    let c = &cfg.caccioppoli;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "caccioppoli", 0));
    (0..c.cylinders)
        .map(|_| {
            let r = rng.random_range(c.r_range[0]..=c.r_range[1]);
            let t0 = rng.random_range(4.0 * r * r + c.t0_margin..=c.t0_max);
            let x0: Vec<f64> = loop {
                let x: Vec<f64> = (0..cfg.dim).map(|_| rng.random_range(-c.x0_max..=c.x0_max)).collect();
                if crate::measure::norm(&x) <= c.x0_max {
                    break x;
                }
            };
            let cc = rng.random_range(c.c_range[0]..=c.c_range[1]);
            (x0, t0, r, cc)
        })
        .collect()
}

/// Cylinders whose normalized ratio exceeds `factor` times the median over
/// the cylinders of the same function.
pub fn caccioppoli_outliers(values: &[f64], factor: f64) -> (f64, Vec<usize>) {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.is_empty() {
        0.0
    } else if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let out = values.iter().enumerate().filter(|(_, &v)| v > factor * median).map(|(i, _)| i).collect();
    (median, out)
}

pub fn caccioppoli_reports(cfg: &VerifyConfig) -> Result<Vec<VerificationReport>> {
    let c = &cfg.caccioppoli;
    let b = &cfg.budgets;
    let cyl = caccioppoli_cylinders(cfg);
    c.functions
        .iter()
        .map(|e| {
            let u = function(e)?;
            let rows: Vec<CaccioppoliOutcome> =
                cyl.par_iter().map(|(x0, t0, r, cc)| caccioppoli_ratio(&u, x0, *t0, *r, *cc, c.order)).collect::<Result<_>>()?;
            let values: Vec<f64> = rows.iter().map(|o| o.normalized).collect();
            let max = values.iter().copied().fold(0.0, f64::max);
            let (median, outliers) = caccioppoli_outliers(&values, b.caccioppoli_outlier);
            let table: Vec<_> = cyl
                .iter()
                .zip(&rows)
                .map(|((x0, t0, r, cc), o)| json!({ "x0": x0, "t0": t0, "r": r, "c": cc, "lhs": o.lhs, "rhs": o.rhs, "normalized": o.normalized }))
                .collect();
            Ok(VerificationReport::measured(
                "caccioppoli",
                &e.id,
                max,
                1.0,
                b.caccioppoli,
                true,
                &[("cylinders", c.cylinders as f64)],
                vec![],
                meta(Some(&e.id), derive_seed(cfg.seed, "caccioppoli", 0)),
                json!({ "median": median, "outliers": outliers, "outlier_factor": b.caccioppoli_outlier, "cylinders": table }),
            ))
        })
        .collect()
}

pub fn main_reports(cfg: &VerifyConfig) -> Result<Vec<VerificationReport>> {
    let b = &cfg.budgets;
    let a_prime = cfg.main_a_prime();
    cfg.corpus
        .par_iter()
        .map(|e| {
            let u = function(e)?;
            let levels = main_study(&u, cfg.main.a, a_prime, cfg.grid.half_width, &cfg.grid.levels, cfg.grid.per_octave)?;
            let last = levels.last().expect("validated non-empty levels");
            let ratios: Vec<f64> = levels.iter().map(|l| l.ratio).collect();
            let change = max_consecutive_change(&ratios);
            let ok = ratios.iter().all(|&r| r <= b.main)
                && change <= b.main_stability
                && levels.iter().all(|l| l.layer_cake_error <= b.layer_cake);
            Ok(VerificationReport::measured(
                "main",
                &e.id,
                last.s_norm,
                last.t_norm,
                b.main,
                ok,
                &[("a", cfg.main.a), ("a_prime", a_prime)],
                levels.iter().map(|l| l.h).collect(),
                meta(Some(&e.id), cfg.seed),
                json!({ "levels": levels, "relative_change": change }),
            ))
        })
        .collect()
}

pub fn fstar_reports(cfg: &VerifyConfig) -> Result<Vec<VerificationReport>> {
    let f = &cfg.fstar;
    let grid = Grid::new(cfg.dim, cfg.grid.half_width, cfg.grid.h)?;
    let cases: Vec<(&CorpusEntry, f64)> = cfg.corpus.iter().flat_map(|e| f.levels.iter().map(move |&t| (e, t))).collect();
    cases
        .par_iter()
        .map(|(e, theta)| {
            let u = function(e)?;
            let mask = level_set_mask(&u, &grid, f.a, *theta, cfg.grid.per_octave)?;
            let o = fstar_check(&mask, f.a, f.per_octave)?;
            Ok(VerificationReport::measured(
                "fstar",
                &format!("{}:theta={theta}", e.id),
                o.violations.len() as f64,
                1.0,
                0.0,
                true,
                &[("a", f.a), ("theta", *theta), ("k_tilde", o.k_tilde)],
                vec![cfg.grid.h],
                meta(Some(&e.id), cfg.seed),
                json!({ "nodes": o.nodes, "in_f": o.in_f, "in_f_star": o.in_f_star, "violations": o.violations }),
            ))
        })
        .collect()
}

pub fn covering_reports(cfg: &VerifyConfig) -> Result<Vec<VerificationReport>> {
    let c = &cfg.covering;
    let b = &cfg.budgets;
    let params = CoverParams { a: c.a, b: c.b, c: c.c };
    (0..c.sets)
        .map(|i| {
            let seed = derive_seed(cfg.seed, "covering", i as u64);
            let points = random_finite_set(cfg.dim, c.max_points, c.spread, seed);
            let levels = covering_study(&points, params, c.refinements, c.samples, seed)?;
            let last = levels.last().expect("refinements ≥ 1");
            let consts: Vec<f64> = levels.iter().map(|l| l.constant).collect();
            let change = max_consecutive_change(&consts);
            let ok = levels.iter().all(|l| {
                l.coverage_fraction == 1.0
                    && l.whitney_failures == 0
                    && l.overlaps == 0
                    && l.inadmissible_selection_balls == 0
                    && l.constant <= b.covering
            }) && change <= b.covering_stability;
            Ok(VerificationReport::measured(
                "covering",
                &format!("set-{i}"),
                last.measure_sum,
                last.target_measure,
                b.covering,
                ok,
                &[("a", c.a), ("b", c.b), ("c", c.c), ("points", points.len() as f64)],
                vec![],
                meta(None, seed),
                json!({ "points": points, "levels": levels, "relative_change": change }),
            ))
        })
        .collect()
}

/// Exact geometric lemmas: each report's `lhs` is the largest observed
/// ratio to the lemma's bound, so the budget is the bound itself.
pub fn geometry_reports(cfg: &VerifyConfig) -> Result<Vec<VerificationReport>> {
    let g = &cfg.geometry;
    let n = cfg.dim;
    let seed = |i| derive_seed(cfg.seed, "geometry", i);
    let adm = check_admsym(n, g.a, g.b, g.admsym_samples, seed(0))?;
    let cb = check_cube_ball(n, g.a, g.max_layer, g.cube_ball_samples, seed(1))?;
    let cubes: Vec<_> = (0..=g.max_level).flat_map(|k| (0..=g.max_layer).flat_map(move |l| LayerCubes::new(n, k, l))).collect();
    let diam = check_diam(cubes.iter());
    let cone = check_cone_inclusion(n, 1.0, g.a, g.cone_samples, seed(2))?;
    let adm_max = (adm.max_ratio_i / adm.c_ab).max(adm.max_ratio_ii_lower).max(adm.max_ratio_ii_upper);
    let diam_fail = diam.formula_failures + diam.bound_failures + diam.center_bracket_failures;
    let cone_fail = cone.standard_in_tilde_failures + cone.tilde_in_standard_failures;
    Ok(vec![
        VerificationReport::measured(
            "geometry", "admsym", adm_max, 1.0, 1.0, adm.violations.is_empty(),
            &[("a", g.a), ("b", g.b), ("samples", g.admsym_samples as f64)], vec![], meta(None, seed(0)),
            json!({ "violations": adm.violations.len() }),
        ),
        VerificationReport::measured(
            "geometry", "cube-ball", cb.max_ratio, 1.0, 1.0, cb.violations.is_empty(),
            &[("a", g.a), ("samples", g.cube_ball_samples as f64)], vec![], meta(None, seed(1)),
            json!({ "violations": cb.violations.len() }),
        ),
        VerificationReport::measured(
            "geometry", "diam", diam_fail as f64, 1.0, 0.0, true,
            &[("cubes", diam.cubes as f64)], vec![], meta(None, cfg.seed), json!(diam),
        ),
        VerificationReport::measured(
            "geometry", "cone-inclusion", cone_fail as f64, 1.0, 0.0, true,
            &[("a", g.a), ("samples", g.cone_samples as f64)], vec![], meta(None, seed(2)), json!(cone),
        ),
    ])
}

