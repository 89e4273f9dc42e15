//! Cost ledgers for both models and the three wall-time estimators.
//!
//! All unit counts are integers. A unit is one key comparison, one
//! arithmetic operation, or one key/value pair moved, with payloads adding
//! one unit per started 8-byte block.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Per-superstep maxima over processors.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperstepRecord {
    /// Max compute operations.
    pub w: u64,
    /// Max input units received (h').
    pub h_in: u64,
    /// Max output units sent (h'').
    pub h_out: u64,
    /// Max units kept in local memory for later supersteps.
    pub f: u64,
    pub is_input_read: bool,
    pub is_output_write: bool,
}

impl SuperstepRecord {
    pub fn h(&self) -> u64 {
        self.h_in + self.h_out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BspTotals {
    pub w: u64,
    pub h: u64,
    pub s: u64,
    pub f: u64,
    pub h_n: u64,
}

/// Append-only record of a BSP run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BspCostLedger {
    records: Vec<SuperstepRecord>,
}

impl BspCostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: SuperstepRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[SuperstepRecord] {
        &self.records
    }

    pub fn w(&self) -> u64 {
        self.records.iter().map(|r| r.w).sum()
    }

    pub fn h(&self) -> u64 {
        self.records.iter().map(SuperstepRecord::h).sum()
    }

    pub fn s(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn f(&self) -> u64 {
        self.records.iter().map(|r| r.f).sum()
    }

    /// Communication excluding the flagged input read and output write.
    pub fn h_n(&self) -> u64 {
        self.records
            .iter()
            .map(|r| {
                let mut h = r.h();
                if r.is_input_read {
                    h -= r.h_in;
                }
                if r.is_output_write {
                    h -= r.h_out;
                }
                h
            })
            .sum()
    }

    pub fn totals(&self) -> BspTotals {
        BspTotals {
            w: self.w(),
            h: self.h(),
            s: self.s(),
            f: self.f(),
            h_n: self.h_n(),
        }
    }
}

/// One MapReduce round: per-task times and I/O volumes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub map_times: Vec<u64>,
    pub reduce_times: Vec<u64>,
    pub map_io: Vec<u64>,
    pub reduce_io: Vec<u64>,
    /// Reduce tasks used this round (R_d).
    pub reduce_tasks: usize,
    pub map_makespan: u64,
    pub reduce_makespan: u64,
    /// Virtual time from round start until the last worker finishes.
    pub makespan: u64,
}

impl RoundRecord {
    pub fn t(&self) -> u64 {
        self.map_times.iter().sum::<u64>() + self.reduce_times.iter().sum::<u64>()
    }

    pub fn c(&self) -> u64 {
        self.map_io.iter().sum::<u64>() + self.reduce_io.iter().sum::<u64>()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MrTotals {
    pub t: u64,
    pub c: u64,
    pub d: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MrCostLedger {
    rounds: Vec<RoundRecord>,
}

impl MrCostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, round: RoundRecord) {
        self.rounds.push(round);
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn t(&self) -> u64 {
        self.rounds.iter().map(RoundRecord::t).sum()
    }

    pub fn c(&self) -> u64 {
        self.rounds.iter().map(RoundRecord::c).sum()
    }

    pub fn d(&self) -> u64 {
        self.rounds.len() as u64
    }

    pub fn totals(&self) -> MrTotals {
        MrTotals {
            t: self.t(),
            c: self.c(),
            d: self.d(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Map,
    Reduce,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Map => "map",
            TaskKind::Reduce => "reduce",
        }
    }
}

/// Where and when one task ran in virtual time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskTrace {
    /// Index within its phase.
    pub task_id: usize,
    pub kind: TaskKind,
    /// 1-based round.
    pub round: usize,
    pub t: u64,
    pub c: u64,
    pub worker: usize,
    pub start: u64,
    pub finish: u64,
}

pub const TRACE_CSV_HEADER: &str = "task_id,kind,round,worker,start,finish,t,c";

pub fn traces_to_csv(traces: &[TaskTrace]) -> String {
    let mut out = String::with_capacity(32 * (traces.len() + 1));
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    for tr in traces {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            tr.task_id,
            tr.kind.as_str(),
            tr.round,
            tr.worker,
            tr.start,
            tr.finish,
            tr.t,
            tr.c
        );
    }
    out
}

/// W + H·g + S·l
pub fn estimate_bsp_time(ledger: &BspCostLedger, g: f64, l: f64) -> f64 {
    ledger.w() as f64 + ledger.h() as f64 * g + ledger.s() as f64 * l
}

/// T + C·g + D·l
pub fn estimate_mr_time(ledger: &MrCostLedger, g: f64, l: f64) -> f64 {
    ledger.t() as f64 + ledger.c() as f64 * g + ledger.d() as f64 * l
}

/// W + (H + F)·g + S·l: the BSP cost once retained local data has to be
/// round-tripped through global memory.
pub fn estimate_bspmr_on_mr_time(ledger: &BspCostLedger, g: f64, l: f64) -> f64 {
    ledger.w() as f64 + (ledger.h() + ledger.f()) as f64 * g + ledger.s() as f64 * l
}
