//! Greedy list scheduling of tasks onto workers, and an exhaustive optimum
//! to check it against.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Result, SimError};
use crate::ledger::{TaskKind, TaskTrace};

pub const BRUTE_FORCE_TASK_LIMIT: usize = 14;

/// Outcome of list-scheduling one phase of tasks. Times are relative to the
/// start of the phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub assignment: Vec<usize>,
    pub start: Vec<u64>,
    pub finish: Vec<u64>,
    pub makespan: u64,
}

impl Schedule {
    pub fn traces(&self, kind: TaskKind, round: usize, io: &[u64], times: &[u64], offset: u64) -> Vec<TaskTrace> {
        (0..self.assignment.len())
            .map(|i| TaskTrace {
                task_id: i,
                kind,
                round,
                t: times[i],
                c: io[i],
                worker: self.assignment[i],
                start: offset + self.start[i],
                finish: offset + self.finish[i],
            })
            .collect()
    }

    /// Total busy time per worker.
    pub fn loads(&self, p: usize) -> Vec<u64> {
        let mut loads = vec![0; p];
        for (i, &w) in self.assignment.iter().enumerate() {
            loads[w] += self.finish[i] - self.start[i];
        }
        loads
    }
}

/// Hands tasks out in index order, each to the worker that becomes idle
/// first (lowest id on ties), the way a master assigns tasks as workers
/// finish their previous one.
pub fn greedy_schedule(times: &[u64], p: usize) -> Schedule {
    assert!(p >= 1, "need at least one worker");
    let mut idle: BinaryHeap<Reverse<(u64, usize)>> = (0..p).map(|w| Reverse((0, w))).collect();
    let mut assignment = Vec::with_capacity(times.len());
    let mut start = Vec::with_capacity(times.len());
    let mut finish = Vec::with_capacity(times.len());
    let mut makespan = 0;
    for &t in times {
        let Reverse((free_at, w)) = idle.pop().expect("heap holds p workers");
        let end = free_at + t;
        assignment.push(w);
        start.push(free_at);
        finish.push(end);
        makespan = makespan.max(end);
        idle.push(Reverse((end, w)));
    }
    Schedule {
        assignment,
        start,
        finish,
        makespan,
    }
}

pub fn optimal_makespan_bruteforce(times: &[u64], p: usize) -> Result<u64> {
    optimal_makespan_bruteforce_with_limit(times, p, BRUTE_FORCE_TASK_LIMIT)
}

/// Exact minimum makespan by exhaustive branch and bound.
pub fn optimal_makespan_bruteforce_with_limit(times: &[u64], p: usize, limit: usize) -> Result<u64> {
    assert!(p >= 1, "need at least one worker");
    if times.len() > limit {
        return Err(SimError::TooManyTasks {
            tasks: times.len(),
            limit,
        });
    }
    let mut sorted = times.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let Some(&largest) = sorted.first() else {
        return Ok(0);
    };
    let total: u64 = sorted.iter().sum();
    let lower = largest.max(total.div_ceil(p as u64));

    // longest-processing-time first gives a good starting bound
    let mut best = {
        let mut loads = vec![0u64; p];
        for &t in &sorted {
            let w = (0..p).min_by_key(|&w| loads[w]).expect("p >= 1");
            loads[w] += t;
        }
        *loads.iter().max().expect("p >= 1")
    };
    if best == lower {
        return Ok(best);
    }
    let mut loads = vec![0u64; p];
    search(&sorted, 0, &mut loads, 0, &mut best, lower);
    Ok(best)
}

fn search(times: &[u64], i: usize, loads: &mut [u64], current: u64, best: &mut u64, lower: u64) {
    if *best == lower {
        return;
    }
    if i == times.len() {
        *best = (*best).min(current);
        return;
    }
    let t = times[i];
    for w in 0..loads.len() {
        // workers with equal load are interchangeable
        if loads[..w].contains(&loads[w]) {
            continue;
        }
        let next = loads[w] + t;
        if next >= *best {
            continue;
        }
        loads[w] = next;
        search(times, i + 1, loads, current.max(next), best, lower);
        loads[w] -= t;
    }
}

/// Checks `greedy ≤ (2 − 1/p)·OPT` exactly in integers. `None` when the
/// optimum is out of brute-force reach.
pub fn graham_bound_holds(times: &[u64], p: usize) -> Option<bool> {
    let greedy = greedy_schedule(times, p).makespan;
    let opt = optimal_makespan_bruteforce(times, p).ok()?;
    let p = p as u128;
    Some(u128::from(greedy) * p <= (2 * p - 1) * u128::from(opt))
}
