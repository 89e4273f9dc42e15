//! Barrier-synchronised execution of BSP programs on `p` logical processors.
//!
//! Each superstep every processor sees the messages addressed to it in the
//! previous superstep, sorted by (sender, send sequence), runs its superstep
//! function, and queues messages for the next one. Computation ends when all
//! processors vote to halt in the same superstep.

use serde::{Deserialize, Serialize};

use crate::config::MachineConfig;
use crate::error::{Result, SimError};
use crate::kv::payload_units;
use crate::ledger::{BspCostLedger, SuperstepRecord};

/// A point-to-point message. `size` is what the cost model charges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub payload: Vec<u8>,
    pub size: u64,
}

impl Message {
    /// Sized at one unit per started 8-byte block, minimum one.
    pub fn new(payload: Vec<u8>) -> Self {
        let size = payload_units(payload.len()).max(1);
        Message { payload, size }
    }

    pub fn sized(payload: Vec<u8>, size: u64) -> Self {
        Message {
            payload,
            size: size.max(1),
        }
    }
}

/// A delivered message together with its sender.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub from: usize,
    pub seq: usize,
    pub message: Message,
}

impl Envelope {
    pub fn payload(&self) -> &[u8] {
        &self.message.payload
    }
}

/// Per-processor handle passed to the superstep function.
#[derive(Debug)]
pub struct Context {
    pid: usize,
    p: usize,
    superstep: usize,
    ops: u64,
    outbox: Vec<(usize, Message)>,
    retained: u64,
    halt: bool,
}

impl Context {
    pub(crate) fn new(pid: usize, p: usize, superstep: usize) -> Self {
        Context {
            pid,
            p,
            superstep,
            ops: 0,
            outbox: Vec::new(),
            retained: 0,
            halt: false,
        }
    }

    pub fn pid(&self) -> usize {
        self.pid
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// 1-based.
    pub fn superstep(&self) -> usize {
        self.superstep
    }

    /// Charges `units` of local computation to this processor.
    pub fn count_op(&mut self, units: u64) {
        self.ops += units;
    }

    pub fn ops(&self) -> u64 {
        self.ops
    }

    pub fn send(&mut self, dest: usize, payload: Vec<u8>) {
        self.outbox.push((dest, Message::new(payload)));
    }

    pub fn send_message(&mut self, dest: usize, message: Message) {
        self.outbox.push((dest, message));
    }

    /// Declares `units` of local data kept for a later superstep.
    pub fn retain(&mut self, units: u64) {
        self.retained += units;
    }

    pub fn vote_halt(&mut self) {
        self.halt = true;
    }

    pub(crate) fn into_parts(self) -> StepParts {
        StepParts {
            ops: self.ops,
            outbox: self.outbox,
            retained: self.retained,
            halt: self.halt,
        }
    }
}

pub(crate) struct StepParts {
    pub ops: u64,
    pub outbox: Vec<(usize, Message)>,
    pub retained: u64,
    pub halt: bool,
}

/// A deterministic BSP computation.
///
/// Input reading and output writing are costed by the engine: the units
/// reported by [`BspProgram::input_units`] are charged as received data in
/// superstep 1, and those from [`BspProgram::output_units`] as sent data in
/// the final superstep. Both supersteps are flagged so the ledger can
/// separate them from inter-superstep communication.
pub trait BspProgram: Sync {
    type Input: Sync;
    type State: Send;
    type Output: Send;

    fn init(&self, pid: usize, input: &Self::Input) -> Self::State;

    fn input_units(&self, input: &Self::Input) -> u64;

    fn superstep(&self, ctx: &mut Context, state: &mut Self::State, inbox: &[Envelope])
        -> Result<()>;

    fn output_units(&self, state: &Self::State) -> u64;

    fn output(&self, pid: usize, state: Self::State) -> Self::Output;

    /// Serialises local state so it can live in global memory between
    /// MapReduce rounds. Should take at least as many words as the program
    /// reports through [`Context::retain`].
    fn encode_state(&self, state: &Self::State) -> Vec<u8>;

    fn decode_state(&self, bytes: &[u8]) -> Result<Self::State>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LoggedMessage {
    /// Superstep the message was sent in (for `sent`) or is visible in
    /// (for `delivered`).
    pub superstep: usize,
    pub from: usize,
    pub to: usize,
    pub seq: usize,
    pub size: u64,
    pub digest: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageLog {
    pub sent: Vec<LoggedMessage>,
    pub delivered: Vec<LoggedMessage>,
}

#[derive(Debug)]
pub struct BspRun<O> {
    pub outputs: Vec<O>,
    pub ledger: BspCostLedger,
    pub log: MessageLog,
}

pub(crate) fn digest(bytes: &[u8]) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Runs `program` on `config.p` processors, one input partition each.
pub fn run_bsp<P: BspProgram>(
    program: &P,
    inputs: &[P::Input],
    config: &MachineConfig,
) -> Result<BspRun<P::Output>> {
    config.validate()?;
    let p = config.p;
    if inputs.len() != p {
        return Err(SimError::InputArity {
            expected: p,
            got: inputs.len(),
        });
    }

    let input_units: Vec<u64> = inputs.iter().map(|i| program.input_units(i)).collect();
    let any_input = input_units.iter().any(|&u| u > 0);
    let mut states: Vec<P::State> = inputs
        .iter()
        .enumerate()
        .map(|(pid, input)| program.init(pid, input))
        .collect();
    let mut inboxes: Vec<Vec<Envelope>> = (0..p).map(|_| Vec::new()).collect();
    let mut ledger = BspCostLedger::new();
    let mut log = MessageLog::default();

    for superstep in 1..=config.max_supersteps {
        let work: Vec<(P::State, Vec<Envelope>)> = states.into_iter().zip(inboxes).collect();
        let stepped = config.exec.try_map(work, |pid, (mut state, inbox)| {
            let mut ctx = Context::new(pid, p, superstep);
            program.superstep(&mut ctx, &mut state, &inbox)?;
            let received: u64 = inbox.iter().map(|e| e.message.size).sum();
            Ok::<_, SimError>((state, ctx.into_parts(), received))
        })?;

        let mut parts = Vec::with_capacity(p);
        states = Vec::with_capacity(p);
        let mut received = Vec::with_capacity(p);
        for (state, part, recv) in stepped {
            states.push(state);
            parts.push(part);
            received.push(recv);
        }

        let all_halt = parts.iter().all(|pt| pt.halt);
        let pending: usize = parts.iter().map(|pt| pt.outbox.len()).sum();
        if all_halt && pending > 0 {
            return Err(SimError::UndeliveredMessages { superstep, pending });
        }

        let mut record = SuperstepRecord::default();
        for (pid, part) in parts.iter().enumerate() {
            let mut h_in = received[pid];
            if superstep == 1 {
                h_in += input_units[pid];
            }
            let mut h_out: u64 = part.outbox.iter().map(|(_, m)| m.size).sum();
            if all_halt {
                h_out += program.output_units(&states[pid]);
            }
            record.w = record.w.max(part.ops);
            record.h_in = record.h_in.max(h_in);
            record.h_out = record.h_out.max(h_out);
            if !all_halt {
                record.f = record.f.max(part.retained);
            }
        }
        record.is_input_read = superstep == 1 && any_input;
        record.is_output_write = all_halt && record.h_out > 0;
        ledger.push(record);

        inboxes = (0..p).map(|_| Vec::new()).collect();
        for (from, part) in parts.into_iter().enumerate() {
            for (seq, (to, message)) in part.outbox.into_iter().enumerate() {
                if to >= p {
                    return Err(SimError::DestinationOutOfRange {
                        superstep,
                        from,
                        to,
                        p,
                    });
                }
                let entry = LoggedMessage {
                    superstep,
                    from,
                    to,
                    seq,
                    size: message.size,
                    digest: digest(&message.payload),
                };
                log.sent.push(entry);
                log.delivered.push(LoggedMessage {
                    superstep: superstep + 1,
                    ..entry
                });
                inboxes[to].push(Envelope { from, seq, message });
            }
        }

        if all_halt {
            let outputs = states
                .into_iter()
                .enumerate()
                .map(|(pid, s)| program.output(pid, s))
                .collect();
            return Ok(BspRun {
                outputs,
                ledger,
                log,
            });
        }
    }
    Err(SimError::MaxSuperstepsExceeded(config.max_supersteps))
}
