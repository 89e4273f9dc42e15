//! Empirical check of the four growth conditions a BSP algorithm must meet
//! to run efficiently on MapReduce with as many workers as processors:
//! `T ~ W·p`, `C ~ H·p`, `D ~ S` and `F ~ H_n`.
//!
//! Each side is measured over a sweep of input sizes and fitted to `a·n^e`
//! on a log-log scale. A condition is satisfied when the left side grows no
//! faster than the right (within `tolerance` in the exponent) and the ratio
//! left/right at the largest size is at most `ratio_bound`. These thresholds
//! are conventions. The conditions are necessary, so "satisfied" is not a
//! proof of efficiency.

use serde::Serialize;

use crate::error::{Result, SimError};
use crate::ledger::{BspCostLedger, MrCostLedger};

pub const MIN_RUNS: usize = 4;

#[derive(Debug, Clone)]
pub struct EfficiencyRun {
    pub n: u64,
    pub bsp: BspCostLedger,
    /// Ledger of the same program under the BSP-on-MapReduce simulation.
    pub mr: MrCostLedger,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub tolerance: f64,
    pub ratio_bound: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tolerance: 0.25,
            ratio_bound: 16.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub name: &'static str,
    pub left: &'static str,
    pub right: &'static str,
    pub left_values: Vec<f64>,
    pub right_values: Vec<f64>,
    pub left_exponent: f64,
    pub right_exponent: f64,
    /// `left_exponent − right_exponent`.
    pub gap: f64,
    /// left/right at the largest size; infinite if the right side is zero.
    pub ratio: f64,
    pub satisfied: bool,
    pub degenerate: bool,
    pub note: Option<String>,
}

impl ConditionReport {
    pub fn verdict(&self) -> &'static str {
        if self.satisfied {
            "satisfied"
        } else {
            "violated"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub p: usize,
    pub sizes: Vec<u64>,
    pub thresholds: Thresholds,
    pub conditions: Vec<ConditionReport>,
    pub all_satisfied: bool,
    pub verdict: &'static str,
}

impl EfficiencyReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// Least-squares slope of `ln y` against `ln x`. Zeros are clamped to one
/// unit, the smallest nonzero cost.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(1.0).ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

fn condition(
    name: &'static str,
    left: &'static str,
    right: &'static str,
    xs: &[f64],
    lv: Vec<f64>,
    rv: Vec<f64>,
    th: Thresholds,
) -> ConditionReport {
    let left_exponent = fit_exponent(xs, &lv);
    let right_exponent = fit_exponent(xs, &rv);
    let gap = left_exponent - right_exponent;
    let (l_last, r_last) = (*lv.last().unwrap(), *rv.last().unwrap());
    let ratio = if r_last == 0.0 {
        if l_last == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        l_last / r_last
    };

    let left_zero = lv.iter().all(|&v| v == 0.0);
    let right_zero = rv.iter().any(|&v| v == 0.0);
    let (satisfied, degenerate, note) = if left_zero {
        (true, true, Some(format!("{left} is zero at every size")))
    } else if right_zero {
        (false, true, Some(format!("{right} vanishes while {left} does not")))
    } else {
        let ok = gap <= th.tolerance && ratio <= th.ratio_bound;
        let constant = is_constant(&lv) && is_constant(&rv);
        (ok, constant, constant.then(|| "both sides constant across sizes".to_string()))
    };
    ConditionReport {
        name,
        left,
        right,
        left_values: lv,
        right_values: rv,
        left_exponent,
        right_exponent,
        gap,
        ratio,
        satisfied,
        degenerate,
        note,
    }
}

pub fn check_efficiency(runs: &[EfficiencyRun], p: usize) -> Result<EfficiencyReport> {
    check_efficiency_with(runs, p, Thresholds::default())
}

pub fn check_efficiency_with(runs: &[EfficiencyRun], p: usize, th: Thresholds) -> Result<EfficiencyReport> {
    if runs.len() < MIN_RUNS {
        return Err(SimError::InsufficientRuns(format!(
            "need at least {MIN_RUNS} runs, got {}",
            runs.len()
        )));
    }
    if runs.windows(2).any(|w| w[1].n <= w[0].n) || runs[0].n == 0 {
        return Err(SimError::InsufficientRuns(
            "input sizes must be positive and strictly increasing".into(),
        ));
    }
    if p == 0 {
        return Err(SimError::InvalidConfig("p must be at least 1".into()));
    }
    let xs: Vec<f64> = runs.iter().map(|r| r.n as f64).collect();
    let col = |f: &dyn Fn(&EfficiencyRun) -> u64| -> Vec<f64> { runs.iter().map(|r| f(r) as f64).collect() };
    let pf = p as u64;
    let conditions = vec![
        condition("i", "T", "W*p", &xs, col(&|r| r.mr.t()), col(&|r| r.bsp.w() * pf), th),
        condition("ii", "C", "H*p", &xs, col(&|r| r.mr.c()), col(&|r| r.bsp.h() * pf), th),
        condition("iii", "D", "S", &xs, col(&|r| r.mr.d()), col(&|r| r.bsp.s()), th),
        condition("iv", "F", "H_n", &xs, col(&|r| r.bsp.f()), col(&|r| r.bsp.h_n()), th),
    ];
    let all_satisfied = conditions.iter().all(|c| c.satisfied);
    Ok(EfficiencyReport {
        p,
        sizes: runs.iter().map(|r| r.n).collect(),
        thresholds: th,
        conditions,
        all_satisfied,
        verdict: if all_satisfied { "satisfied" } else { "violated" },
    })
}
