//! The two cross-model simulations and the growth-condition check built on
//! them.

mod bsp_on_mr;
mod efficiency;
mod mr_on_bsp;

pub use bsp_on_mr::{simulate_bsp_on_mr, BspOnMrRun};
pub use efficiency::{
    check_efficiency, check_efficiency_with, fit_exponent, ConditionReport, EfficiencyReport,
    EfficiencyRun, Thresholds, MIN_RUNS,
};
pub use mr_on_bsp::{simulate_mr_on_bsp, MrOnBspRun};
