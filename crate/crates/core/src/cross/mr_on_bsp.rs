//! Runs a MapReduce program on the BSP engine.
//!
//! A dry run of each round fixes the task times, and greedy list scheduling
//! on those times fixes which processor runs which task. Round `d` then
//! becomes three supersteps:
//!
//! 1. map: each processor runs its map tasks and sends every intermediate
//!    pair to the owner of its reduce task;
//! 2. reduce: owners rebuild each reduce task's input in shuffle order, run
//!    it, and tell every processor how many pairs each task produced;
//! 3. redistribute: from those counts every processor knows where each of
//!    its output pairs falls in the next round's input splits and sends it
//!    to the owner of that split's map task.
//!
//! The last round stops after its reduce superstep.

use crate::algorithms::balanced_ranges;
use crate::bsp::{run_bsp, BspProgram, Context, Envelope, Message};
use crate::codec::{self, WordReader, WordWriter};
use crate::config::MachineConfig;
use crate::error::{Result, SimError};
use crate::kv::{total_units, KvPair};
use crate::ledger::{BspCostLedger, RoundRecord};
use crate::mr::{
    execute_map_task, execute_reduce_task, greedy_schedule, group_sorted, run_round, split_input, Control,
    GlobalMemory, MrInput, MrProgram,
};

/// Where every task of one round runs, and the program as it stood then.
#[derive(Debug, Clone)]
struct RoundPlan<P> {
    program: P,
    map_owner: Vec<usize>,
    reduce_owner: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MrOnBspRun {
    pub output: GlobalMemory,
    pub ledger: BspCostLedger,
    /// Supersteps spent on each round: 3 for all but the last, which takes 2.
    pub supersteps_per_round: Vec<usize>,
    /// Dry-run records, whose task times fixed the schedule.
    pub rounds: Vec<RoundRecord>,
}

impl MrOnBspRun {
    /// `w` of the map and reduce supersteps of round `d` (1-based).
    pub fn phase_work(&self, d: usize) -> (u64, u64) {
        let first = self.supersteps_per_round[..d - 1].iter().sum::<usize>();
        let recs = self.ledger.records();
        (recs[first].w, recs[first + 1].w)
    }
}

pub fn simulate_mr_on_bsp<P>(program: &mut P, input: impl Into<MrInput>, config: &MachineConfig) -> Result<MrOnBspRun>
where
    P: MrProgram + Clone + Send,
{
    config.validate()?;
    let p = config.p;

    // Dry run: task times per round, and the program snapshot each round
    // starts from.
    let (mut memory, mut first) = match input.into() {
        MrInput::Memory(m) => (m, None),
        MrInput::Partitioned(s) => (GlobalMemory::default(), Some(s)),
    };
    let mut plans = Vec::new();
    let mut records = Vec::new();
    let mut initial_splits = None;
    for round in 1.. {
        if round > config.max_rounds {
            return Err(SimError::MaxRoundsExceeded(config.max_rounds));
        }
        let splits = first.take().unwrap_or_else(|| split_input(memory.pairs(), config.q));
        if round == 1 {
            initial_splits = Some(splits.clone());
        }
        let snapshot = program.clone();
        let outcome = run_round(&snapshot, round, splits, config, 0)?;
        plans.push(RoundPlan {
            program: snapshot,
            map_owner: greedy_schedule(&outcome.record.map_times, p).assignment,
            reduce_owner: greedy_schedule(&outcome.record.reduce_times, p).assignment,
        });
        records.push(outcome.record);
        memory = outcome.output;
        if program.next_round(round, &memory)? == Control::Halt {
            break;
        }
    }

    let mut inputs: Vec<Vec<(usize, Vec<KvPair>)>> = vec![Vec::new(); p];
    for (task, split) in initial_splits.unwrap_or_default().into_iter().enumerate() {
        inputs[plans[0].map_owner[task]].push((task, split));
    }

    let sim = Simulated {
        plans,
        q: config.q,
        p,
    };
    let bsp_config = MachineConfig {
        max_supersteps: config.max_supersteps.max(3 * sim.plans.len()),
        ..config.clone()
    };
    let run = run_bsp(&sim, &inputs, &bsp_config)?;

    let mut finished: Vec<(usize, Vec<KvPair>)> = run.outputs.into_iter().flatten().collect();
    finished.sort_by_key(|(task, _)| *task);
    let output = GlobalMemory(finished.into_iter().flat_map(|(_, pairs)| pairs).collect());
    let mut supersteps_per_round = vec![3; sim.plans.len()];
    *supersteps_per_round.last_mut().expect("at least one round") = 2;
    Ok(MrOnBspRun {
        output,
        ledger: run.ledger,
        supersteps_per_round,
        rounds: records,
    })
}

struct Simulated<P> {
    plans: Vec<RoundPlan<P>>,
    q: usize,
    p: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct SimState {
    /// Map tasks owned this round, with their splits.
    splits: Vec<(usize, Vec<KvPair>)>,
    /// Reduce task outputs awaiting redistribution or final output.
    outputs: Vec<(usize, Vec<KvPair>)>,
    /// Pairs produced by every reduce task this round.
    counts: Vec<u64>,
}

fn encode_pairs(w: &mut WordWriter, pairs: &[KvPair]) {
    w.push(pairs.len() as i64);
    for pair in pairs {
        w.push_pair(pair);
    }
}

fn decode_pairs(r: &mut WordReader) -> Result<Vec<KvPair>> {
    let n = r.next()? as usize;
    (0..n).map(|_| r.pair()).collect()
}

impl<P: MrProgram> Simulated<P> {
    fn locate(&self, superstep: usize) -> (usize, usize) {
        ((superstep - 1) / 3 + 1, (superstep - 1) % 3)
    }

    fn map_phase(&self, ctx: &mut Context, state: &mut SimState, round: usize, inbox: &[Envelope]) -> Result<()> {
        let plan = &self.plans[round - 1];
        if round > 1 {
            state.splits = self.collect_splits(ctx.pid(), plan, inbox)?;
        }
        let reduce_tasks = plan.reduce_owner.len();
        let mut outgoing: Vec<(WordWriter, u64)> = (0..self.p).map(|_| (WordWriter::new(), 0)).collect();
        for (task, split) in std::mem::take(&mut state.splits) {
            let outcome = execute_map_task(&plan.program, round, task, &split, reduce_tasks)?;
            ctx.count_op(outcome.t);
            for (seq, (partition, pair)) in outcome.emitted.iter().enumerate() {
                let (w, units) = &mut outgoing[plan.reduce_owner[*partition]];
                w.push(*partition as i64).push(task as i64).push(seq as i64).push_pair(pair);
                *units += pair.size();
            }
        }
        for (dest, (w, units)) in outgoing.into_iter().enumerate() {
            if !w.is_empty() {
                ctx.send_message(dest, Message::sized(w.into_bytes(), units));
            }
        }
        Ok(())
    }

    /// Next-round splits owned by `pid`, from redistribution messages of
    /// `(task, position, pair)` triples.
    fn collect_splits(&self, pid: usize, plan: &RoundPlan<P>, inbox: &[Envelope]) -> Result<Vec<(usize, Vec<KvPair>)>> {
        let mut placed = Vec::new();
        for e in inbox {
            let words = codec::decode_words(e.payload())?;
            let mut r = WordReader::new(&words);
            while !r.is_done() {
                let task = r.next()? as usize;
                let pos = r.next()?;
                placed.push((task, pos, r.pair()?));
            }
        }
        placed.sort_by_key(|(task, pos, _)| (*task, *pos));
        let mut splits: Vec<(usize, Vec<KvPair>)> = plan
            .map_owner
            .iter()
            .enumerate()
            .filter(|(_, &w)| w == pid)
            .map(|(task, _)| (task, Vec::new()))
            .collect();
        for (task, _, pair) in placed {
            let slot = splits
                .iter_mut()
                .find(|(t, _)| *t == task)
                .ok_or_else(|| SimError::Invariant(format!("map task {task} delivered to the wrong processor")))?;
            slot.1.push(pair);
        }
        Ok(splits)
    }

    fn reduce_phase(&self, ctx: &mut Context, state: &mut SimState, round: usize, inbox: &[Envelope]) -> Result<()> {
        let plan = &self.plans[round - 1];
        let mut received: Vec<(usize, usize, usize, KvPair)> = Vec::new();
        for e in inbox {
            let words = codec::decode_words(e.payload())?;
            let mut r = WordReader::new(&words);
            while !r.is_done() {
                let partition = r.next()? as usize;
                let task = r.next()? as usize;
                let seq = r.next()? as usize;
                received.push((partition, task, seq, r.pair()?));
            }
        }
        // shuffle order: by reduce task, then map task and emission
        received.sort_by_key(|(part, task, seq, _)| (*part, *task, *seq));

        let pid = ctx.pid();
        let mut outputs = Vec::new();
        let mut it = received.into_iter().peekable();
        for (task, _) in plan.reduce_owner.iter().enumerate().filter(|(_, &w)| w == pid) {
            while it.peek().is_some_and(|(part, ..)| *part < task) {
                it.next();
            }
            let mut pairs = Vec::new();
            while let Some((_, _, _, pair)) = it.next_if(|(part, ..)| *part == task) {
                pairs.push(pair);
            }
            let input = group_sorted(pairs);
            let outcome = execute_reduce_task(&plan.program, round, task, &input)?;
            ctx.count_op(outcome.t);
            outputs.push((task, outcome.output));
        }

        if round == self.plans.len() {
            state.outputs = outputs;
            ctx.vote_halt();
            return Ok(());
        }

        let mut w = WordWriter::new();
        for (task, out) in &outputs {
            w.push(*task as i64).push(out.len() as i64);
        }
        if !w.is_empty() {
            let payload = w.into_bytes();
            let units = 2 * outputs.len() as u64;
            for dest in (0..self.p).filter(|&d| d != pid) {
                ctx.send_message(dest, Message::sized(payload.clone(), units));
            }
        }
        ctx.retain(outputs.iter().map(|(_, o)| total_units(o)).sum());
        state.counts = vec![0; plan.reduce_owner.len()];
        for (task, out) in &outputs {
            state.counts[*task] = out.len() as u64;
        }
        state.outputs = outputs;
        Ok(())
    }

    fn redistribute_phase(&self, ctx: &mut Context, state: &mut SimState, round: usize, inbox: &[Envelope]) -> Result<()> {
        let next = &self.plans[round];
        for e in inbox {
            let words = codec::decode_words(e.payload())?;
            for pair in words.chunks(2) {
                let [task, count] = pair else {
                    return Err(SimError::Decode("odd-length count message".into()));
                };
                state.counts[*task as usize] = *count as u64;
            }
        }
        ctx.count_op(state.counts.len() as u64);
        let mut offsets = Vec::with_capacity(state.counts.len());
        let mut total = 0u64;
        for &c in &state.counts {
            offsets.push(total);
            total += c;
        }
        let ranges = balanced_ranges(total as usize, self.q);

        let mut outgoing: Vec<(WordWriter, u64)> = (0..self.p).map(|_| (WordWriter::new(), 0)).collect();
        for (task, pairs) in std::mem::take(&mut state.outputs) {
            for (i, pair) in pairs.iter().enumerate() {
                let pos = offsets[task] as usize + i;
                let split = ranges.partition_point(|r| r.end <= pos);
                ctx.count_op(1);
                let (w, units) = &mut outgoing[next.map_owner[split]];
                w.push(split as i64).push(pos as i64).push_pair(pair);
                *units += pair.size();
            }
        }
        for (dest, (w, units)) in outgoing.into_iter().enumerate() {
            if !w.is_empty() {
                ctx.send_message(dest, Message::sized(w.into_bytes(), units));
            }
        }
        Ok(())
    }
}

impl<P: MrProgram> BspProgram for Simulated<P> {
    type Input = Vec<(usize, Vec<KvPair>)>;
    type State = SimState;
    type Output = Vec<(usize, Vec<KvPair>)>;

    fn init(&self, _pid: usize, input: &Self::Input) -> SimState {
        SimState {
            splits: input.clone(),
            ..Default::default()
        }
    }

    fn input_units(&self, input: &Self::Input) -> u64 {
        input.iter().map(|(_, s)| total_units(s)).sum()
    }

    fn superstep(&self, ctx: &mut Context, state: &mut SimState, inbox: &[Envelope]) -> Result<()> {
        let (round, phase) = self.locate(ctx.superstep());
        match phase {
            0 => self.map_phase(ctx, state, round, inbox),
            1 => self.reduce_phase(ctx, state, round, inbox),
            _ => self.redistribute_phase(ctx, state, round, inbox),
        }
    }

    fn output_units(&self, state: &SimState) -> u64 {
        state.outputs.iter().map(|(_, o)| total_units(o)).sum()
    }

    fn output(&self, _pid: usize, state: SimState) -> Self::Output {
        state.outputs
    }

    fn encode_state(&self, state: &SimState) -> Vec<u8> {
        let mut w = WordWriter::new();
        for group in [&state.splits, &state.outputs] {
            w.push(group.len() as i64);
            for (task, pairs) in group {
                w.push(*task as i64);
                encode_pairs(&mut w, pairs);
            }
        }
        let counts: Vec<i64> = state.counts.iter().map(|&c| c as i64).collect();
        w.push_slice(&counts);
        w.into_bytes()
    }

    fn decode_state(&self, bytes: &[u8]) -> Result<SimState> {
        let words = codec::decode_words(bytes)?;
        let mut r = WordReader::new(&words);
        let mut groups = Vec::with_capacity(2);
        for _ in 0..2 {
            let n = r.next()? as usize;
            let mut group = Vec::with_capacity(n);
            for _ in 0..n {
                let task = r.next()? as usize;
                group.push((task, decode_pairs(&mut r)?));
            }
            groups.push(group);
        }
        let counts = r.slice()?.iter().map(|&c| c as u64).collect();
        let outputs = groups.pop().unwrap_or_default();
        let splits = groups.pop().unwrap_or_default();
        Ok(SimState {
            splits,
            outputs,
            counts,
        })
    }
}
