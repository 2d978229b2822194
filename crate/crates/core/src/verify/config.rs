//! Suite configuration. Every pass/fail budget lives here.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::semigroup::TestFunctionSpec;
use crate::MAX_DIM;

pub const CHECK_FAMILIES: [&str; 7] = ["doubling", "weak11", "aperture", "caccioppoli", "main", "fstar", "covering"];
/// Families that may be enabled in addition to the default seven.
pub const EXTRA_FAMILIES: [&str; 1] = ["geometry"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub id: String,
    pub function: TestFunctionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    /// Spacing of single-resolution checks.
    pub h: f64,
    /// Spacings of refinement studies, coarse to fine.
    pub levels: Vec<f64>,
    /// `t` lattice points per octave at the coarsest level; doubled per level.
    pub per_octave: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub doubling: f64,
    pub doubling_stability: f64,
    pub weak11: f64,
    pub aperture_d: f64,
    pub aperture_c: f64,
    pub aperture_stability: f64,
    pub caccioppoli: f64,
    /// Largest allowed ratio of a cylinder's value to the median trend.
    pub caccioppoli_outlier: f64,
    pub main: f64,
    pub main_stability: f64,
    pub covering: f64,
    pub covering_stability: f64,
    pub layer_cake: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoublingConfig {
    pub a: f64,
    pub taus: Vec<f64>,
    pub trials: usize,
    /// Centres of the small balls are drawn with `|x| ≤ x_max`.
    pub x_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weak11Config {
    pub a: f64,
    pub per_octave: usize,
    /// Ball indicators added to the corpus for this check.
    pub indicators: Vec<IndicatorBall>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApertureConfig {
    /// `(A, A′, a)` triples; `a′` follows from the transfer formula.
    pub triples: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaccioppoliConfig {
    pub cylinders: usize,
    pub functions: Vec<CorpusEntry>,
    pub r_range: [f64; 2],
    pub t0_max: f64,
    /// Margin added to `4r²` for the lower end of `t₀`.
    pub t0_margin: f64,
    pub x0_max: f64,
    pub c_range: [f64; 2],
    /// Gauss–Legendre order in space and time.
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MainConfig {
    pub a: f64,
    /// Scale of the maximal function; the aperture transfer of `(1, 1, a)`
    /// when absent.
    pub a_prime: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FstarConfig {
    pub a: f64,
    /// Level sets `{T*u ≤ θ·max T*u}` for each `θ`.
    pub levels: Vec<f64>,
    pub per_octave: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringConfig {
    pub sets: usize,
    pub max_points: usize,
    /// Points of `F` are drawn uniformly from `[-spread, spread]ⁿ`.
    pub spread: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Number of nested resolutions of the stability study.
    pub refinements: u32,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub a: f64,
    pub b: f64,
    pub admsym_samples: usize,
    pub cube_ball_samples: usize,
    pub cone_samples: usize,
    pub max_layer: u32,
    pub max_level: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub schema: u32,
    pub dim: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub checks: Vec<String>,
    pub corpus: Vec<CorpusEntry>,
    pub grid: GridConfig,
    pub budgets: Budgets,
    pub doubling: DoublingConfig,
    pub weak11: Weak11Config,
    pub aperture: ApertureConfig,
    pub caccioppoli: CaccioppoliConfig,
    pub main: MainConfig,
    pub fstar: FstarConfig,
    pub covering: CoveringConfig,
    pub geometry: GeometryConfig,
}

fn bump(id: &str, center: Vec<f64>, radius: f64) -> CorpusEntry {
    CorpusEntry { id: id.into(), function: TestFunctionSpec::Bump { center, radius, height: 1.0 } }
}

/// Six bumps with centres between 0 and 4 along the first axis.
pub fn default_corpus(n: usize) -> Vec<CorpusEntry> {
    let at = |c: f64| {
        let mut v = vec![0.0; n];
        v[0] = c;
        v
    };
    if n == 1 {
        vec![
            bump("bump-0", at(0.0), 1.0),
            bump("bump-1", at(1.0), 0.5),
            bump("bump-2", at(2.0), 0.75),
            bump("bump-2.5", at(2.5), 0.9),
            bump("bump-3", at(3.0), 0.6),
            bump("bump-4", at(4.0), 1.0),
        ]
    } else {
        vec![bump("bump-0", at(0.0), 1.0), bump("bump-1.5", at(1.5), 0.75)]
    }
}

impl VerifyConfig {
    pub fn for_dim(n: usize) -> Self {
        let (half_width, h, levels) = match n {
            1 => (8.0, 1.0 / 32.0, vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]),
            2 => (4.0, 1.0 / 16.0, vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]),
            _ => (2.0, 1.0 / 4.0, vec![1.0 / 2.0, 1.0 / 4.0, 1.0 / 8.0]),
        };
        let origin = vec![0.0; n];
        let mut cacc_fns = vec![
            bump("bump-0", origin.clone(), 1.0),
            bump("bump-off", {
                let mut v = origin.clone();
                v[0] = 2.0;
                v
            }, 0.75),
        ];
        let mut beta = vec![0u32; n];
        beta[0] = 2;
        cacc_fns.push(CorpusEntry { id: "hermite-2".into(), function: TestFunctionSpec::Hermite { beta, coef: 1.0 } });
        VerifyConfig {
            schema: 1,
            dim: n,
            seed: 20_240_601,
            output_dir: None,
            checks: CHECK_FAMILIES.iter().map(|s| s.to_string()).collect(),
            corpus: default_corpus(n),
            grid: GridConfig { half_width, h, levels, per_octave: 4 },
            budgets: Budgets {
                doubling: 1e6,
                doubling_stability: 0.2,
                weak11: 100.0,
                aperture_d: 100.0,
                aperture_c: 100.0,
                aperture_stability: 0.25,
                caccioppoli: 50.0,
                caccioppoli_outlier: 2.0,
                main: 100.0,
                main_stability: 0.3,
                covering: 50.0,
                covering_stability: 0.2,
                layer_cake: 0.01,
            },
            doubling: DoublingConfig { a: 1.0, taus: vec![1.0, 2.0, 4.0], trials: 10_000, x_max: 6.0 },
            weak11: Weak11Config {
                a: 1.0,
                per_octave: 8,
                indicators: vec![IndicatorBall { center: origin.clone(), radius: 1.0 }],
            },
            aperture: ApertureConfig { triples: vec![[1.0, 1.0, 1.0], [2.0, 1.0, 1.0]] },
            caccioppoli: CaccioppoliConfig {
                cylinders: 30,
                functions: cacc_fns,
                r_range: [0.1, 0.4],
                t0_max: 1.5,
                t0_margin: 0.1,
                x0_max: 4.0,
                c_range: [1.0, 2.0],
                order: 12,
            },
            main: MainConfig { a: 1.0, a_prime: None },
            fstar: FstarConfig { a: 1.0, levels: vec![0.25, 0.5], per_octave: 4 },
            covering: CoveringConfig {
                sets: if n == 1 { 20 } else { 5 },
                max_points: 5,
                spread: 4.0,
                a: 1.0,
                b: 1.0,
                c: 1.0,
                refinements: 3,
                samples: 10_000,
            },
            geometry: GeometryConfig {
                a: 1.0,
                b: 1.0,
                admsym_samples: 1_000_000,
                cube_ball_samples: 100_000,
                cone_samples: 10_000,
                max_layer: 4,
                max_level: 2,
            },
        }
    }

    /// Parses a JSON config. Missing keys take the defaults for the
    /// configured dimension (1 when absent).
    pub fn from_json(text: &str) -> Result<Self> {
        let user: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let Value::Object(_) = &user else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        let dim = match user.get("dim") {
            None => 1,
            Some(v) => v.as_u64().ok_or_else(|| Error::Config("dim must be a positive integer".into()))? as usize,
        };
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Config(format!("dim must be 1..={MAX_DIM}, got {dim}")));
        }
        let mut base = serde_json::to_value(Self::for_dim(dim))?;
        merge(&mut base, user);
        let cfg: VerifyConfig = serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema != 1 {
            return bad(format!("unsupported schema {}", self.schema));
        }
        if self.dim == 0 || self.dim > MAX_DIM {
            return bad(format!("dim must be 1..={MAX_DIM}"));
        }
        for c in &self.checks {
            if !CHECK_FAMILIES.contains(&c.as_str()) && !EXTRA_FAMILIES.contains(&c.as_str()) {
                return bad(format!("unknown check `{c}`"));
            }
        }
        let g = &self.grid;
        if !(g.half_width > 0.0 && g.h > 0.0) || g.levels.iter().any(|h| !(*h > 0.0)) || g.per_octave == 0 {
            return bad("grid spacing and half width must be positive".into());
        }
        if g.levels.is_empty() {
            return bad("grid.levels must not be empty".into());
        }
        let mut ids = std::collections::BTreeSet::new();
        for e in self.corpus.iter().chain(&self.caccioppoli.functions) {
            let f = crate::semigroup::TestFunction::new(e.function.clone()).map_err(|err| Error::Config(format!("corpus entry `{}`: {err}", e.id)))?;
            if f.dim() != self.dim {
                return bad(format!("corpus entry `{}` has dimension {}, config has {}", e.id, f.dim(), self.dim));
            }
        }
        for e in &self.corpus {
            if !ids.insert(e.id.as_str()) {
                return bad(format!("duplicate corpus id `{}`", e.id));
            }
        }
        for i in &self.weak11.indicators {
            if i.center.len() != self.dim || !(i.radius > 0.0) {
                return bad("weak11 indicator balls need the config dimension and a positive radius".into());
            }
        }
        let b = &self.budgets;
        for (name, v) in [
            ("doubling", b.doubling),
            ("weak11", b.weak11),
            ("aperture_d", b.aperture_d),
            ("aperture_c", b.aperture_c),
            ("caccioppoli", b.caccioppoli),
            ("main", b.main),
            ("covering", b.covering),
        ] {
            if !(v >= 0.0) {
                return bad(format!("budget `{name}` must be non-negative"));
            }
        }
        let c = &self.caccioppoli;
        if !(c.r_range[0] > 0.0 && c.r_range[0] <= c.r_range[1] && c.r_range[1] < 1.0) {
            return bad("caccioppoli r_range must lie in (0, 1)".into());
        }
        if !(c.c_range[0] > 0.0 && c.c_range[0] <= c.c_range[1]) {
            return bad("caccioppoli c_range must be positive and ordered".into());
        }
        if !(c.t0_margin > 0.0) || 4.0 * c.r_range[1].powi(2) + c.t0_margin > c.t0_max {
            return bad("caccioppoli t0_max leaves no room above 4r²".into());
        }
        if self.doubling.trials < 2 || self.doubling.taus.iter().any(|t| !(*t > 0.0)) || !(self.doubling.a > 0.0) {
            return bad("doubling needs a > 0, τ > 0 and at least 2 trials".into());
        }
        for t in &self.aperture.triples {
            if t.iter().any(|v| !(*v > 0.0)) {
                return bad("aperture triples must be positive".into());
            }
        }
        let cv = &self.covering;
        if !(cv.a > 0.0 && cv.b > 0.0 && cv.c > 0.0) || cv.max_points == 0 || cv.refinements == 0 {
            return bad("covering needs a, b, c > 0, max_points ≥ 1 and refinements ≥ 1".into());
        }
        if let Some(ap) = self.main.a_prime {
            if !(ap > 0.0) {
                return bad("main.a_prime must be positive".into());
            }
        }
        Ok(())
    }

    /// `a′` of the main check.
    pub fn main_a_prime(&self) -> f64 {
        self.main.a_prime.unwrap_or_else(|| aperture_transfer(1.0, 1.0, self.main.a))
    }
}

/// `a′ = a(1 + 2aA)(1 + A′a(1 + 2aA))`.
pub fn aperture_transfer(big_a: f64, big_a_prime: f64, a: f64) -> f64 {
    let k = 1.0 + 2.0 * a * big_a;
    a * k * (1.0 + big_a_prime * a * k)
}

fn merge(base: &mut Value, user: Value) {
    match (base, user) {
        (Value::Object(b), Value::Object(u)) => {
            for (k, v) in u {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
