use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::VerifyConfig;
use crate::error::Result;
use crate::io::{fmt_f64, write_json, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    PassVacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub corpus_entry: Option<String>,
    pub seed: u64,
}

/// One measured inequality `lhs ≤ C · rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_id: String,
    /// Sub-case within the family (corpus entry, parameter set, …).
    pub case: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, or 0 for a vacuous check; non-finite values serialize as null.
    pub estimated_constant: f64,
    pub budget: f64,
    pub params: BTreeMap<String, f64>,
    pub resolutions: Vec<f64>,
    pub status: Status,
    pub pass: bool,
    pub metadata: ReportMeta,
    /// Check-specific tables and diagnostics.
    pub details: Value,
}

impl VerificationReport {
    /// Builds a report from `lhs ≤ budget · rhs` and any further conditions
    /// (`extra_ok`). Both sides zero is vacuous.
    #[allow(clippy::too_many_arguments)]
    pub fn measured(
        check_id: &str,
        case: &str,
        lhs: f64,
        rhs: f64,
        budget: f64,
        extra_ok: bool,
        params: &[(&str, f64)],
        resolutions: Vec<f64>,
        meta: ReportMeta,
        details: Value,
    ) -> Self {
        let (estimated_constant, status) = if lhs == 0.0 && rhs == 0.0 {
            (0.0, Status::PassVacuous)
        } else {
            let c = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
            let ok = lhs.is_finite() && rhs.is_finite() && lhs <= budget * rhs && extra_ok;
            (c, if ok { Status::Pass } else { Status::Fail })
        };
        VerificationReport {
            check_id: check_id.into(),
            case: case.into(),
            lhs,
            rhs,
            estimated_constant,
            budget,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            resolutions,
            status,
            pass: status != Status::Fail,
            metadata: meta,
            details,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub vacuous: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub schema: u32,
    pub seed: u64,
    pub dim: usize,
    pub config: VerifyConfig,
    pub summary: Summary,
    pub reports: Vec<VerificationReport>,
}

impl Bundle {
    pub fn new(config: VerifyConfig, reports: Vec<VerificationReport>) -> Self {
        let mut summary = Summary { total: reports.len(), ..Default::default() };
        for r in &reports {
            match r.status {
                Status::Pass => summary.passed += 1,
                Status::Fail => summary.failed += 1,
                Status::PassVacuous => summary.vacuous += 1,
            }
        }
        Bundle { schema: SCHEMA_VERSION, seed: config.seed, dim: config.dim, config, summary, reports }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> Result<String> {
        crate::io::to_json_string(self)
    }

    /// Writes `bundle.json` and one `<check_id>.csv` table per family.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("bundle.json"), self)?;
        let mut tables: BTreeMap<&str, String> = BTreeMap::new();
        for r in &self.reports {
            let t = tables
                .entry(r.check_id.as_str())
                .or_insert_with(|| "case,lhs,rhs,estimated_constant,budget,status\n".to_string());
            let status = match r.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::PassVacuous => "pass-vacuous",
            };
            let _ = writeln!(
                t,
                "{},{},{},{},{},{}",
                r.case,
                fmt_f64(r.lhs),
                fmt_f64(r.rhs),
                fmt_f64(r.estimated_constant),
                fmt_f64(r.budget),
                status
            );
        }
        for (id, body) in tables {
            std::fs::write(dir.join(format!("{id}.csv")), body)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ReportMeta {
        ReportMeta { corpus_entry: None, seed: 1 }
    }

    #[test]
    fn budget_rule() {
        let r = VerificationReport::measured("x", "c", 2.0, 1.0, 3.0, true, &[], vec![], meta(), Value::Null);
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.estimated_constant, 2.0);
        let r = VerificationReport::measured("x", "c", 2.0, 1.0, 0.0, true, &[], vec![], meta(), Value::Null);
        assert_eq!(r.status, Status::Fail);
        let r = VerificationReport::measured("x", "c", 0.0, 0.0, 0.0, true, &[], vec![], meta(), Value::Null);
        assert_eq!(r.status, Status::PassVacuous);
        assert!(r.pass);
        let r = VerificationReport::measured("x", "c", 1.0, 1.0, 3.0, false, &[], vec![], meta(), Value::Null);
        assert_eq!(r.status, Status::Fail);
    }
}
