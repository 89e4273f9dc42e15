//! Round-by-round MapReduce execution over `p` simulated workers.
//!
//! A round splits global memory into `q` map inputs, runs the map tasks,
//! shuffles their partitioned output to `R_d` reduce tasks, runs those, and
//! writes the reduce output back as the next round's global memory. Tasks
//! are list-scheduled on workers in virtual time; worker memory does not
//! survive a task.

mod schedule;
mod shuffle;

pub use schedule::{
    graham_bound_holds, greedy_schedule, optimal_makespan_bruteforce,
    optimal_makespan_bruteforce_with_limit, Schedule, BRUTE_FORCE_TASK_LIMIT,
};
pub use shuffle::{shuffle, ReduceInput};
pub(crate) use shuffle::group_sorted;

use serde::{Deserialize, Serialize};

use crate::config::MachineConfig;
use crate::error::{Result, SimError};
use crate::kv::{total_units, Key, KvPair, Value};
use crate::ledger::{MrCostLedger, RoundRecord, TaskKind, TaskTrace};

/// The multiset of pairs persisted between rounds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalMemory(pub Vec<KvPair>);

impl GlobalMemory {
    pub fn new(pairs: Vec<KvPair>) -> Self {
        GlobalMemory(pairs)
    }

    pub fn pairs(&self) -> &[KvPair] {
        &self.0
    }

    pub fn into_pairs(self) -> Vec<KvPair> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Canonical order, for multiset comparison.
    pub fn sorted(&self) -> Vec<KvPair> {
        let mut v = self.0.clone();
        v.sort();
        v
    }
}

/// Round-1 input: either global memory to split, or explicit per-map-task
/// splits for programs that exploit initial data placement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MrInput {
    Memory(GlobalMemory),
    Partitioned(Vec<Vec<KvPair>>),
}

impl From<GlobalMemory> for MrInput {
    fn from(m: GlobalMemory) -> Self {
        MrInput::Memory(m)
    }
}

impl From<Vec<KvPair>> for MrInput {
    fn from(pairs: Vec<KvPair>) -> Self {
        MrInput::Memory(GlobalMemory(pairs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Halt,
}

/// Handle passed to map and reduce functions.
#[derive(Debug)]
pub struct TaskContext {
    round: usize,
    task: usize,
    ops: u64,
    out: Vec<KvPair>,
}

impl TaskContext {
    fn new(round: usize, task: usize) -> Self {
        TaskContext {
            round,
            task,
            ops: 0,
            out: Vec::new(),
        }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn task(&self) -> usize {
        self.task
    }

    pub fn count_op(&mut self, units: u64) {
        self.ops += units;
    }

    pub fn emit(&mut self, key: impl Into<Key>, value: Value) {
        self.out.push(KvPair::new(key, value));
    }

    pub fn emit_pair(&mut self, pair: KvPair) {
        self.out.push(pair);
    }
}

/// A deterministic MapReduce program.
pub trait MrProgram: Sync {
    fn map(&self, ctx: &mut TaskContext, pair: &KvPair) -> Result<()>;

    fn reduce(&self, ctx: &mut TaskContext, key: &Key, values: &[Value]) -> Result<()>;

    /// Reduce task for `key`; must lie in `[0, reduce_tasks)`.
    fn partition(&self, _round: usize, key: &Key, reduce_tasks: usize) -> usize {
        default_partition(key, reduce_tasks)
    }

    /// `R_d`, the reduce tasks used this round, at most `r`.
    fn reduce_tasks(&self, _round: usize, r: usize) -> usize {
        r
    }

    /// Called after each round with its output; may update the program's
    /// configuration for the next round.
    fn next_round(&mut self, _round: usize, _output: &GlobalMemory) -> Result<Control> {
        Ok(Control::Halt)
    }
}

/// `key mod R` for integer keys, a 64-bit multiplicative hash mod `R` for
/// byte keys.
pub fn default_partition(key: &Key, reduce_tasks: usize) -> usize {
    match key {
        Key::Int(k) => k.rem_euclid(reduce_tasks as i64) as usize,
        Key::Bytes(b) => (hash_bytes(b) % reduce_tasks as u64) as usize,
    }
}

pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0;
    for &b in bytes {
        h = (h ^ u64::from(b)).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h ^= h >> 29;
    }
    h
}

/// Splits global memory into `q` contiguous parts whose pair counts differ
/// by at most one. Keys are ignored.
pub fn split_input(memory: &[KvPair], q: usize) -> Vec<Vec<KvPair>> {
    assert!(q >= 1, "q must be at least 1");
    let base = memory.len() / q;
    let extra = memory.len() % q;
    let mut out = Vec::with_capacity(q);
    let mut pos = 0;
    for i in 0..q {
        let len = base + usize::from(i < extra);
        out.push(memory[pos..pos + len].to_vec());
        pos += len;
    }
    out
}

/// `m·⌈log₂ m⌉` comparisons to sort `m` pairs on the reduce side.
pub fn sort_cost(m: usize) -> u64 {
    if m <= 1 {
        0
    } else {
        m as u64 * u64::from(usize::BITS - (m - 1).leading_zeros())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct MapOutcome {
    pub emitted: Vec<(usize, KvPair)>,
    pub t: u64,
    pub c: u64,
}

pub(crate) fn execute_map_task<P: MrProgram + ?Sized>(
    program: &P,
    round: usize,
    task: usize,
    split: &[KvPair],
    reduce_tasks: usize,
) -> Result<MapOutcome> {
    let mut ctx = TaskContext::new(round, task);
    for pair in split {
        program.map(&mut ctx, pair)?;
    }
    let c = total_units(split) + total_units(&ctx.out);
    let t = ctx.ops + c;
    let emitted = ctx
        .out
        .into_iter()
        .map(|pair| {
            let index = program.partition(round, &pair.key, reduce_tasks);
            if index >= reduce_tasks {
                return Err(SimError::PartitionOutOfRange {
                    round,
                    index,
                    reduce_tasks,
                });
            }
            Ok((index, pair))
        })
        .collect::<Result<_>>()?;
    Ok(MapOutcome { emitted, t, c })
}

#[derive(Debug, Clone)]
pub(crate) struct ReduceOutcome {
    pub output: Vec<KvPair>,
    pub t: u64,
    pub c: u64,
}

pub(crate) fn execute_reduce_task<P: MrProgram + ?Sized>(
    program: &P,
    round: usize,
    task: usize,
    input: &ReduceInput,
) -> Result<ReduceOutcome> {
    let mut ctx = TaskContext::new(round, task);
    for (key, values) in &input.groups {
        program.reduce(&mut ctx, key, values)?;
    }
    let c = input.units + total_units(&ctx.out);
    let t = ctx.ops + sort_cost(input.pairs) + c;
    Ok(ReduceOutcome {
        output: ctx.out,
        t,
        c,
    })
}

/// Everything one round produced.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub output: GlobalMemory,
    pub record: RoundRecord,
    pub traces: Vec<TaskTrace>,
    pub map_schedule: Schedule,
    pub reduce_schedule: Schedule,
}

/// Runs round `round` on explicit splits, starting at virtual time `clock`.
/// Pure in its arguments, so any round can be replayed from a snapshot.
pub fn run_round<P: MrProgram + ?Sized>(
    program: &P,
    round: usize,
    splits: Vec<Vec<KvPair>>,
    config: &MachineConfig,
    clock: u64,
) -> Result<RoundOutcome> {
    if splits.len() != config.q {
        return Err(SimError::SplitCount {
            round,
            got: splits.len(),
            q: config.q,
        });
    }
    let reduce_tasks = program.reduce_tasks(round, config.r);
    if reduce_tasks == 0 || reduce_tasks > config.r {
        return Err(SimError::ReduceTaskCount {
            round,
            requested: reduce_tasks,
            r: config.r,
        });
    }

    let maps = config.exec.try_map(splits, |task, split| {
        execute_map_task(program, round, task, &split, reduce_tasks)
    })?;
    let map_times: Vec<u64> = maps.iter().map(|m| m.t).collect();
    let map_io: Vec<u64> = maps.iter().map(|m| m.c).collect();
    let map_schedule = greedy_schedule(&map_times, config.p);

    let intermediate = maps.into_iter().map(|m| m.emitted).collect();
    let inputs = shuffle::shuffle_with(intermediate, reduce_tasks, round, config.exec)?;
    let reduces = config.exec.try_map(inputs, |task, input| {
        execute_reduce_task(program, round, task, &input)
    })?;
    let reduce_times: Vec<u64> = reduces.iter().map(|r| r.t).collect();
    let reduce_io: Vec<u64> = reduces.iter().map(|r| r.c).collect();
    let reduce_schedule = greedy_schedule(&reduce_times, config.p);

    let mut traces = map_schedule.traces(TaskKind::Map, round, &map_io, &map_times, clock);
    traces.extend(reduce_schedule.traces(
        TaskKind::Reduce,
        round,
        &reduce_io,
        &reduce_times,
        clock + map_schedule.makespan,
    ));

    let output = GlobalMemory(reduces.into_iter().flat_map(|r| r.output).collect());
    let record = RoundRecord {
        map_times,
        reduce_times,
        map_io,
        reduce_io,
        reduce_tasks,
        map_makespan: map_schedule.makespan,
        reduce_makespan: reduce_schedule.makespan,
        makespan: map_schedule.makespan + reduce_schedule.makespan,
    };
    Ok(RoundOutcome {
        output,
        record,
        traces,
        map_schedule,
        reduce_schedule,
    })
}

#[derive(Debug, Clone)]
pub struct MrRun {
    pub output: GlobalMemory,
    pub ledger: MrCostLedger,
    pub traces: Vec<TaskTrace>,
}

/// Runs `program` until its round controller halts.
pub fn run_mr<P: MrProgram + ?Sized>(
    program: &mut P,
    input: impl Into<MrInput>,
    config: &MachineConfig,
) -> Result<MrRun> {
    config.validate()?;
    let mut ledger = MrCostLedger::new();
    let mut traces = Vec::new();
    let mut clock = 0;
    let (mut memory, mut first_splits) = match input.into() {
        MrInput::Memory(m) => (m, None),
        MrInput::Partitioned(splits) => (GlobalMemory::default(), Some(splits)),
    };

    for round in 1.. {
        if round > config.max_rounds {
            return Err(SimError::MaxRoundsExceeded(config.max_rounds));
        }
        let splits = match first_splits.take() {
            Some(s) => s,
            None => split_input(memory.pairs(), config.q),
        };
        let outcome = run_round(&*program, round, splits, config, clock)?;
        clock += outcome.record.makespan;
        ledger.push(outcome.record);
        traces.extend(outcome.traces);
        memory = outcome.output;
        if program.next_round(round, &memory)? == Control::Halt {
            break;
        }
    }

    if ledger.t() < ledger.c() {
        return Err(SimError::Invariant(format!(
            "T = {} is below C = {}",
            ledger.t(),
            ledger.c()
        )));
    }
    Ok(MrRun {
        output: memory,
        ledger,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Identity;

    impl MrProgram for Identity {
        fn map(&self, ctx: &mut TaskContext, pair: &KvPair) -> Result<()> {
            ctx.emit_pair(pair.clone());
            Ok(())
        }
        fn reduce(&self, ctx: &mut TaskContext, key: &Key, values: &[Value]) -> Result<()> {
            for v in values {
                ctx.emit(key.clone(), v.clone());
            }
            Ok(())
        }
    }

    /// Halves every key each round until all keys are zero.
    struct Halving;

    impl MrProgram for Halving {
        fn map(&self, ctx: &mut TaskContext, pair: &KvPair) -> Result<()> {
            ctx.count_op(1);
            ctx.emit(pair.key.as_int().unwrap() / 2, pair.value.clone());
            Ok(())
        }
        fn reduce(&self, ctx: &mut TaskContext, key: &Key, values: &[Value]) -> Result<()> {
            for v in values {
                ctx.emit(key.clone(), v.clone());
            }
            Ok(())
        }
        fn reduce_tasks(&self, round: usize, r: usize) -> usize {
            r.min(round)
        }
        fn next_round(&mut self, _round: usize, output: &GlobalMemory) -> Result<Control> {
            Ok(if output.pairs().iter().all(|p| p.key == Key::Int(0)) {
                Control::Halt
            } else {
                Control::Continue
            })
        }
    }

    fn unit_pairs(n: i64) -> Vec<KvPair> {
        (0..n).map(|k| KvPair::new(k, Value::empty())).collect()
    }

    #[test]
    fn split_sizes() {
        let sizes = |n, q| split_input(&unit_pairs(n), q).iter().map(Vec::len).collect::<Vec<_>>();
        assert_eq!(sizes(10, 5), vec![2; 5]);
        assert_eq!(sizes(7, 3), vec![3, 2, 2]);
        assert_eq!(sizes(0, 4), vec![0; 4]);
    }

    #[test]
    fn splits_partition_the_input() {
        let input = unit_pairs(23);
        let splits = split_input(&input, 6);
        assert_eq!(splits.concat(), input);
    }

    #[test]
    fn sort_cost_values() {
        assert_eq!(sort_cost(0), 0);
        assert_eq!(sort_cost(1), 0);
        assert_eq!(sort_cost(2), 2);
        assert_eq!(sort_cost(8), 24);
        assert_eq!(sort_cost(9), 36);
    }

    #[test]
    fn default_partition_in_range() {
        assert_eq!(default_partition(&Key::Int(-1), 3), 2);
        assert_eq!(default_partition(&Key::Int(7), 3), 1);
        for w in ["a", "bb", "hello", ""] {
            assert!(default_partition(&Key::from(w), 5) < 5);
        }
    }

    #[test]
    fn identity_round_trip_and_io_accounting() {
        let n = 40;
        let cfg = MachineConfig::new(2).with_tasks(4, 3);
        let run = run_mr(&mut Identity, unit_pairs(n), &cfg).unwrap();
        assert_eq!(run.output.sorted(), unit_pairs(n));
        assert_eq!(run.ledger.d(), 1);
        // map reads and writes n units, reduce reads and writes n units
        assert_eq!(run.ledger.c(), 4 * n as u64);
        let round = &run.ledger.rounds()[0];
        assert_eq!(round.map_times.len(), 4);
        assert_eq!(round.reduce_times.len(), 3);
    }

    #[test]
    fn ledger_totals_match_traces() {
        let cfg = MachineConfig::new(3).with_tasks(5, 4);
        let run = run_mr(&mut Halving, unit_pairs(50), &cfg).unwrap();
        assert!(run.ledger.d() > 1);
        for (d, round) in run.ledger.rounds().iter().enumerate() {
            let tr: Vec<_> = run.traces.iter().filter(|t| t.round == d + 1).collect();
            assert_eq!(round.t(), tr.iter().map(|t| t.t).sum::<u64>());
            assert_eq!(round.c(), tr.iter().map(|t| t.c).sum::<u64>());
            assert_eq!(round.map_times.len(), cfg.q);
            assert!(round.reduce_tasks <= cfg.r);
            assert_eq!(round.reduce_tasks, (d + 1).min(cfg.r));
        }
        assert!(run.ledger.t() >= run.ledger.c());
    }

    #[test]
    fn empty_input_runs_one_round() {
        let run = run_mr(&mut Identity, Vec::new(), &MachineConfig::new(2)).unwrap();
        assert!(run.output.is_empty());
        assert_eq!(run.ledger.totals().d, 1);
        assert_eq!(run.ledger.t(), 0);
        assert_eq!(run.ledger.c(), 0);
    }

    #[test]
    fn rounds_replay_from_snapshots() {
        let cfg = MachineConfig::new(2).with_tasks(3, 2);
        let mut memory = GlobalMemory(unit_pairs(30));
        for round in 1..=3 {
            let a = run_round(&Halving, round, split_input(memory.pairs(), cfg.q), &cfg, 0).unwrap();
            let b = run_round(&Halving, round, split_input(memory.pairs(), cfg.q), &cfg, 0).unwrap();
            assert_eq!(a.output, b.output);
            assert_eq!(a.record, b.record);
            memory = a.output;
        }
    }

    #[test]
    fn round_limit_is_enforced() {
        struct Forever;
        impl MrProgram for Forever {
            fn map(&self, _ctx: &mut TaskContext, _pair: &KvPair) -> Result<()> {
                Ok(())
            }
            fn reduce(&self, _ctx: &mut TaskContext, _key: &Key, _values: &[Value]) -> Result<()> {
                Ok(())
            }
            fn next_round(&mut self, _round: usize, _output: &GlobalMemory) -> Result<Control> {
                Ok(Control::Continue)
            }
        }
        let mut cfg = MachineConfig::new(1);
        cfg.max_rounds = 5;
        assert_eq!(
            run_mr(&mut Forever, Vec::new(), &cfg).unwrap_err(),
            SimError::MaxRoundsExceeded(5)
        );
    }

    #[test]
    fn bad_partitioner_propagates() {
        struct Bad;
        impl MrProgram for Bad {
            fn map(&self, ctx: &mut TaskContext, pair: &KvPair) -> Result<()> {
                ctx.emit_pair(pair.clone());
                Ok(())
            }
            fn reduce(&self, _ctx: &mut TaskContext, _key: &Key, _values: &[Value]) -> Result<()> {
                Ok(())
            }
            fn partition(&self, _round: usize, _key: &Key, reduce_tasks: usize) -> usize {
                reduce_tasks
            }
        }
        let err = run_mr(&mut Bad, unit_pairs(3), &MachineConfig::new(2)).unwrap_err();
        assert!(matches!(err, SimError::PartitionOutOfRange { round: 1, .. }));
    }

    #[test]
    fn equal_tasks_spread_evenly() {
        // one pair per split so every map task has the same time
        let q = 11;
        let p = 4;
        let cfg = MachineConfig::new(p).with_tasks(q, p);
        let run = run_mr(&mut Identity, unit_pairs(q as i64), &cfg).unwrap();
        let mut per_worker = vec![0usize; p];
        for t in run.traces.iter().filter(|t| t.kind == TaskKind::Map) {
            per_worker[t.worker] += 1;
        }
        for c in per_worker {
            assert!(c == q / p || c == q.div_ceil(p));
        }
    }

    #[test]
    fn prepartitioned_input_needs_q_splits() {
        let cfg = MachineConfig::new(2).with_tasks(3, 2);
        let err = run_mr(&mut Identity, MrInput::Partitioned(vec![vec![]]), &cfg).unwrap_err();
        assert_eq!(err, SimError::SplitCount { round: 1, got: 1, q: 3 });
    }
}
