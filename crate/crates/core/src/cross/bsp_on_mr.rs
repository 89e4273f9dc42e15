//! Runs a BSP program on the MapReduce engine, one round per superstep.
//!
//! Round `d` uses the identity map and one reduce task per simulated
//! processor. Reduce task `i` receives every message sent to processor `i`
//! in superstep `d−1` together with processor `i`'s state, which the
//! previous round wrote to global memory because workers keep nothing
//! between tasks. It runs superstep `d` and emits the messages it sent and
//! its new state.
//!
//! All pairs are keyed by destination processor. The first value word tags
//! the pair as a message or a state.

use crate::bsp::{BspProgram, Context, Envelope, Message};
use crate::codec::{WordReader, WordWriter};
use crate::config::MachineConfig;
use crate::error::{Result, SimError};
use crate::kv::{Key, KvPair, Value};
use crate::ledger::{MrCostLedger, TaskTrace};
use crate::mr::{run_mr, Control, GlobalMemory, MrProgram, TaskContext};

const TAG_MESSAGE: i64 = 0;
const TAG_STATE: i64 = 1;

#[derive(Debug, Clone)]
pub struct BspOnMrRun<O> {
    pub outputs: Vec<O>,
    pub ledger: MrCostLedger,
    pub traces: Vec<TaskTrace>,
    /// Largest reduce task I/O in units, a proxy for per-task memory.
    pub max_task_io: u64,
}

struct Simulated<'a, P> {
    program: &'a P,
    procs: usize,
}

fn state_value(halted: bool, bytes: &[u8]) -> Value {
    let mut w = WordWriter::new();
    w.push(TAG_STATE).push(i64::from(halted)).push_bytes(bytes);
    Value(w.into_bytes())
}

fn message_value(from: usize, seq: usize, message: &Message) -> Value {
    let mut w = WordWriter::new();
    w.push(TAG_MESSAGE)
        .push(from as i64)
        .push(seq as i64)
        .push(message.size as i64)
        .push_bytes(&message.payload);
    Value(w.into_bytes())
}

enum Decoded {
    Message(Envelope),
    State { halted: bool, bytes: Vec<u8> },
}

fn decode(value: &Value) -> Result<Decoded> {
    let words = value.words()?;
    let mut r = WordReader::new(&words);
    match r.next()? {
        TAG_MESSAGE => {
            let from = r.next()? as usize;
            let seq = r.next()? as usize;
            let size = r.next()? as u64;
            let payload = r.bytes()?;
            Ok(Decoded::Message(Envelope {
                from,
                seq,
                message: Message::sized(payload, size),
            }))
        }
        TAG_STATE => {
            let halted = r.next()? != 0;
            Ok(Decoded::State {
                halted,
                bytes: r.bytes()?,
            })
        }
        tag => Err(SimError::Decode(format!("unknown value tag {tag}"))),
    }
}

fn pid_of(key: &Key) -> Result<usize> {
    key.as_int()
        .map(|k| k as usize)
        .ok_or_else(|| SimError::Decode("processor keys must be integers".into()))
}

impl<P: BspProgram> MrProgram for Simulated<'_, P> {
    fn map(&self, ctx: &mut TaskContext, pair: &KvPair) -> Result<()> {
        ctx.emit_pair(pair.clone());
        Ok(())
    }

    fn reduce(&self, ctx: &mut TaskContext, key: &Key, values: &[Value]) -> Result<()> {
        let pid = pid_of(key)?;
        let superstep = ctx.round();
        let mut inbox = Vec::new();
        let mut state = None;
        for v in values {
            match decode(v)? {
                Decoded::Message(e) => inbox.push(e),
                Decoded::State { bytes, .. } if state.is_none() => {
                    state = Some(self.program.decode_state(&bytes)?)
                }
                Decoded::State { .. } => {
                    return Err(SimError::Invariant(format!("processor {pid} has two states")))
                }
            }
        }
        let mut state =
            state.ok_or_else(|| SimError::Invariant(format!("processor {pid} lost its state")))?;
        inbox.sort_by_key(|e| (e.from, e.seq));

        let mut bsp_ctx = Context::new(pid, self.procs, superstep);
        self.program.superstep(&mut bsp_ctx, &mut state, &inbox)?;
        let parts = bsp_ctx.into_parts();
        ctx.count_op(parts.ops);
        for (seq, (to, message)) in parts.outbox.iter().enumerate() {
            if *to >= self.procs {
                return Err(SimError::DestinationOutOfRange {
                    superstep,
                    from: pid,
                    to: *to,
                    p: self.procs,
                });
            }
            ctx.emit(*to as i64, message_value(pid, seq, message));
        }
        ctx.emit(
            pid as i64,
            state_value(parts.halt, &self.program.encode_state(&state)),
        );
        Ok(())
    }

    fn partition(&self, _round: usize, key: &Key, _reduce_tasks: usize) -> usize {
        key.as_int().map_or(usize::MAX, |k| k as usize)
    }

    fn reduce_tasks(&self, _round: usize, _r: usize) -> usize {
        self.procs
    }

    fn next_round(&mut self, round: usize, output: &GlobalMemory) -> Result<Control> {
        let mut all_halted = true;
        let mut pending = 0;
        for pair in output.pairs() {
            match decode(&pair.value)? {
                Decoded::Message(_) => pending += 1,
                Decoded::State { halted, .. } => all_halted &= halted,
            }
        }
        match (all_halted, pending) {
            (false, _) => Ok(Control::Continue),
            (true, 0) => Ok(Control::Halt),
            (true, pending) => Err(SimError::UndeliveredMessages {
                superstep: round,
                pending,
            }),
        }
    }
}

/// Simulates `program` on `inputs.len()` processors with `config.r` at least
/// that many.
pub fn simulate_bsp_on_mr<P: BspProgram>(
    program: &P,
    inputs: &[P::Input],
    config: &MachineConfig,
) -> Result<BspOnMrRun<P::Output>> {
    config.validate()?;
    let procs = inputs.len();
    if procs == 0 {
        return Err(SimError::InvalidInput("no processors to simulate".into()));
    }
    if config.r < procs {
        return Err(SimError::InvalidConfig(format!(
            "simulating {procs} processors needs r >= {procs}, got r = {}",
            config.r
        )));
    }
    let memory: Vec<KvPair> = inputs
        .iter()
        .enumerate()
        .map(|(pid, input)| {
            let state = program.init(pid, input);
            KvPair::new(pid as i64, state_value(false, &program.encode_state(&state)))
        })
        .collect();

    let mut sim = Simulated { program, procs };
    let mr_config = MachineConfig {
        max_rounds: config.max_supersteps,
        ..config.clone()
    };
    let run = run_mr(&mut sim, memory, &mr_config)?;

    let mut states: Vec<Option<P::State>> = (0..procs).map(|_| None).collect();
    for pair in run.output.pairs() {
        if let Decoded::State { bytes, .. } = decode(&pair.value)? {
            states[pid_of(&pair.key)?] = Some(program.decode_state(&bytes)?);
        }
    }
    let outputs = states
        .into_iter()
        .enumerate()
        .map(|(pid, s)| {
            s.map(|s| program.output(pid, s))
                .ok_or_else(|| SimError::Invariant(format!("processor {pid} has no final state")))
        })
        .collect::<Result<_>>()?;
    let max_task_io = run
        .ledger
        .rounds()
        .iter()
        .flat_map(|r| r.reduce_io.iter().copied())
        .max()
        .unwrap_or(0);
    Ok(BspOnMrRun {
        outputs,
        ledger: run.ledger,
        traces: run.traces,
        max_task_io,
    })
}
