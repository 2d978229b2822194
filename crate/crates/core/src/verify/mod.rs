//! The inequality harness: one named check family per lemma or theorem,
//! each producing [`VerificationReport`]s with measured constants.

pub mod checks;
mod config;
mod report;
mod suite;

pub use config::{
    aperture_transfer, default_corpus, ApertureConfig, Budgets, CaccioppoliConfig, CorpusEntry, CoveringConfig, DoublingConfig,
    FstarConfig, GeometryConfig, GridConfig, IndicatorBall, MainConfig, VerifyConfig, Weak11Config, CHECK_FAMILIES, EXTRA_FAMILIES,
};
pub use report::{Bundle, ReportMeta, Status, Summary, VerificationReport};
pub use suite::{
    aperture_reports, caccioppoli_cylinders, caccioppoli_outliers, caccioppoli_reports, covering_reports, derive_seed,
    doubling_reports, fstar_reports, geometry_reports, main_reports, run_suite, weak11_reports,
};
