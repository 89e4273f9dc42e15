//! The JSON cost report written for every run and sweep.
//!
//! Reports carry no timestamps or host details, so the same workload and
//! seed always serialise to the same bytes.

use serde::{Deserialize, Serialize};

use crate::cross::EfficiencyReport;
use crate::ledger::{
    estimate_bsp_time, estimate_bspmr_on_mr_time, estimate_mr_time, BspCostLedger, BspTotals,
    MrCostLedger, MrTotals, RoundRecord, SuperstepRecord,
};
use crate::workload::WorkloadSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigReport {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub g: f64,
    pub l: f64,
    pub seed: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BspLedgerReport {
    pub totals: BspTotals,
    pub supersteps: Vec<SuperstepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrLedgerReport {
    pub totals: MrTotals,
    pub rounds: Vec<RoundRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub bsp: Option<BspLedgerReport>,
    pub mr: Option<MrLedgerReport>,
}

impl LedgerReport {
    pub fn new(bsp: Option<&BspCostLedger>, mr: Option<&MrCostLedger>) -> Self {
        LedgerReport {
            bsp: bsp.map(|l| BspLedgerReport {
                totals: l.totals(),
                supersteps: l.records().to_vec(),
            }),
            mr: mr.map(|l| MrLedgerReport {
                totals: l.totals(),
                rounds: l.rounds().to_vec(),
            }),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimators {
    pub bsp_time: Option<f64>,
    pub mr_time: Option<f64>,
    pub bspmr_on_mr_time: Option<f64>,
}

impl Estimators {
    pub fn new(bsp: Option<&BspCostLedger>, mr: Option<&MrCostLedger>, g: f64, l: f64) -> Self {
        Estimators {
            bsp_time: bsp.map(|b| estimate_bsp_time(b, g, l)),
            mr_time: mr.map(|m| estimate_mr_time(m, g, l)),
            bspmr_on_mr_time: bsp.map(|b| estimate_bspmr_on_mr_time(b, g, l)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(default)]
    pub skipped: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            skipped: false,
            detail: detail.into(),
        }
    }

    pub fn skipped(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed: true,
            skipped: true,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    /// `"ok"` or `"failed"`.
    pub status: String,
    pub checks_passed: usize,
    pub checks_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub workload: WorkloadSpec,
    /// Problem size actually run.
    pub n: usize,
    pub config: ConfigReport,
    pub ledger: LedgerReport,
    pub estimators: Estimators,
    pub checks: Vec<Check>,
    pub verdicts: Verdicts,
    pub error: Option<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdicts.status == "ok"
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

pub fn verdicts(checks: &[Check], error: Option<&str>) -> Verdicts {
    let failed = checks.iter().filter(|c| !c.passed).count();
    Verdicts {
        status: if failed == 0 && error.is_none() { "ok" } else { "failed" }.to_string(),
        checks_passed: checks.len() - failed,
        checks_failed: failed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema: u32,
    pub sizes: Vec<usize>,
    pub runs: Vec<Report>,
    pub efficiency: Option<EfficiencyReport>,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_ledgers_estimate_zero() {
        let b = BspCostLedger::default();
        let m = MrCostLedger::default();
        let e = Estimators::new(Some(&b), Some(&m), 3.0, 7.0);
        assert_eq!(e.bsp_time, Some(0.0));
        assert_eq!(e.mr_time, Some(0.0));
        assert_eq!(e.bspmr_on_mr_time, Some(0.0));
        let l = LedgerReport::new(Some(&b), None);
        assert_eq!(l.bsp.unwrap().totals, BspTotals::default());
    }

    #[test]
    fn verdict_counts() {
        let checks = vec![Check::new("a", true, ""), Check::new("b", false, "")];
        let v = verdicts(&checks, None);
        assert_eq!((v.status.as_str(), v.checks_passed, v.checks_failed), ("failed", 1, 1));
        assert_eq!(verdicts(&[], None).status, "ok");
        assert_eq!(verdicts(&[], Some("boom")).status, "failed");
    }
}
