//! Deterministic simulation of BSP and MapReduce computations with exact
//! cost accounting.
//!
//! The [`bsp`] engine runs programs in barrier-synchronised supersteps and
//! records `W`, `H`, `S`, `F` and `H_n`. The [`mr`] engine runs programs in
//! map/shuffle/reduce rounds with greedy task scheduling and records `T`,
//! `C` and `D`. [`cross`] runs each model on top of the other and checks
//! whether a BSP algorithm keeps its costs when moved to MapReduce.
//! [`algorithms`] provides sorting, matrix multiplication and BFS in both
//! models.

pub mod algorithms;
pub mod bsp;
pub mod codec;
pub mod config;
pub mod cross;
pub mod error;
pub mod exec;
pub mod inputs;
pub mod kv;
pub mod ledger;
pub mod mr;
pub mod report;
pub mod workload;

pub use bsp::{run_bsp, BspProgram, BspRun, Context, Envelope, Message, MessageLog};
pub use config::MachineConfig;
pub use error::{Result, SimError};
pub use exec::Execution;
pub use kv::{Key, KvPair, Value};
pub use ledger::{
    estimate_bsp_time, estimate_bspmr_on_mr_time, estimate_mr_time, BspCostLedger, BspTotals,
    MrCostLedger, MrTotals, RoundRecord, SuperstepRecord, TaskKind, TaskTrace,
};
pub use mr::{run_mr, Control, GlobalMemory, MrInput, MrProgram, MrRun, TaskContext};
