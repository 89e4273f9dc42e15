//! Parallel sorting by regular sampling.
//!
//! BSP form, four supersteps:
//! 1. sort the local block, send `p + 1` regular samples to processor 0;
//! 2. processor 0 sorts all samples and broadcasts `p − 1` splitters;
//! 3. cut the local block into `p` buckets, send each to its owner, keep
//!    the local one;
//! 4. sort what arrived and write it out.
//!
//! Elements are compared as (value, source processor) so duplicate values
//! spread across buckets while the concatenated output stays sorted.
//!
//! The MapReduce form runs a sampling round and a sorting round. The
//! sorting round routes `⟨x; x⟩` with a range partitioner built from the
//! sampling round's output and relies on the shuffle to sort each bucket.

use crate::bsp::{BspProgram, Context, Envelope};
use crate::codec::{self, WordReader, WordWriter};
use crate::error::{Result, SimError};
use crate::kv::{Key, KvPair, Value};
use crate::mr::{default_partition, Control, GlobalMemory, MrProgram, TaskContext};

use super::{
    balanced_ranges, ceil_log2, counted_sort, regular_sample_indices, BspInstance, CostDescriptor,
    Growth,
};

pub const DESCRIPTOR: CostDescriptor = CostDescriptor {
    w: Growth::n_log_n(1.0, "(n log n)/p"),
    h: Growth::poly(1.0, "n/p"),
    s: Growth::poly(0.0, "1"),
    f: Growth::poly(1.0, "n/p"),
    h_n: Growth::poly(1.0, "n/p"),
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsrsBsp {
    p: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PsrsState {
    block: Vec<i64>,
    out: Vec<i64>,
}

impl PsrsBsp {
    pub fn descriptor(&self) -> CostDescriptor {
        DESCRIPTOR
    }
}

pub fn psrs_bsp(data: &[i64], p: usize) -> Result<BspInstance<PsrsBsp>> {
    if p == 0 {
        return Err(SimError::InvalidInput("p must be at least 1".into()));
    }
    if data.len() < p * p {
        return Err(SimError::InvalidInput(format!(
            "PSRS needs n >= p^2 ({} < {}); use a smaller p",
            data.len(),
            p * p
        )));
    }
    let inputs = balanced_ranges(data.len(), p)
        .into_iter()
        .map(|r| data[r].to_vec())
        .collect();
    Ok(BspInstance {
        program: PsrsBsp { p },
        inputs,
    })
}

fn tagged(words: &[i64]) -> impl Iterator<Item = (i64, i64)> + '_ {
    words.chunks_exact(2).map(|c| (c[0], c[1]))
}

impl BspProgram for PsrsBsp {
    type Input = Vec<i64>;
    type State = PsrsState;
    type Output = Vec<i64>;

    fn init(&self, _pid: usize, input: &Vec<i64>) -> PsrsState {
        PsrsState {
            block: input.clone(),
            out: Vec::new(),
        }
    }

    fn input_units(&self, input: &Vec<i64>) -> u64 {
        input.len() as u64
    }

    fn superstep(&self, ctx: &mut Context, state: &mut PsrsState, inbox: &[Envelope]) -> Result<()> {
        let p = self.p;
        let pid = ctx.pid() as i64;
        match ctx.superstep() {
            1 => {
                let cmps = counted_sort(&mut state.block);
                ctx.count_op(cmps);
                let samples: Vec<i64> = regular_sample_indices(state.block.len(), p)
                    .into_iter()
                    .map(|i| state.block[i])
                    .collect();
                ctx.count_op(samples.len() as u64);
                ctx.send(0, codec::encode_words(&samples));
                ctx.retain(state.block.len() as u64);
            }
            2 => {
                if ctx.pid() == 0 {
                    let mut samples = Vec::with_capacity(p * (p + 1));
                    for e in inbox {
                        for v in codec::decode_words(e.payload())? {
                            samples.push((v, e.from as i64));
                        }
                    }
                    let cmps = counted_sort(&mut samples);
                    ctx.count_op(cmps);
                    let idx = regular_sample_indices(samples.len(), p);
                    let mut splitters = WordWriter::new();
                    for &i in &idx[1..p] {
                        splitters.push(samples[i].0).push(samples[i].1);
                    }
                    ctx.count_op(p as u64 + 1);
                    if !splitters.is_empty() {
                        let words = splitters.into_words();
                        for dest in 0..p {
                            ctx.send(dest, codec::encode_words(&words));
                        }
                    }
                }
                ctx.retain(state.block.len() as u64);
            }
            3 => {
                let splitters: Vec<(i64, i64)> = match inbox.first() {
                    Some(e) => tagged(&codec::decode_words(e.payload())?).collect(),
                    None => Vec::new(),
                };
                // block is sorted and shares one source tag, so buckets are
                // contiguous and found by binary search
                let mut cuts = Vec::with_capacity(p + 1);
                cuts.push(0);
                for s in &splitters {
                    let at = state.block.partition_point(|&x| (x, pid) <= *s);
                    ctx.count_op(ceil_log2(state.block.len() + 1));
                    cuts.push(at);
                }
                cuts.push(state.block.len());
                let block = std::mem::take(&mut state.block);
                for dest in 0..p {
                    let bucket = &block[cuts[dest]..cuts[dest + 1]];
                    if dest == ctx.pid() {
                        state.block = bucket.to_vec();
                    } else if !bucket.is_empty() {
                        ctx.send(dest, codec::encode_words(bucket));
                    }
                }
                ctx.retain(state.block.len() as u64);
            }
            _ => {
                let mut data = std::mem::take(&mut state.block);
                for e in inbox {
                    data.extend(codec::decode_words(e.payload())?);
                }
                let cmps = counted_sort(&mut data);
                ctx.count_op(cmps);
                state.out = data;
                ctx.vote_halt();
            }
        }
        Ok(())
    }

    fn output_units(&self, state: &PsrsState) -> u64 {
        state.out.len() as u64
    }

    fn output(&self, _pid: usize, state: PsrsState) -> Vec<i64> {
        state.out
    }

    fn encode_state(&self, state: &PsrsState) -> Vec<u8> {
        let mut w = WordWriter::new();
        w.push_slice(&state.block).push_slice(&state.out);
        w.into_bytes()
    }

    fn decode_state(&self, bytes: &[u8]) -> Result<PsrsState> {
        let words = codec::decode_words(bytes)?;
        let mut r = WordReader::new(&words);
        Ok(PsrsState {
            block: r.slice()?.to_vec(),
            out: r.slice()?.to_vec(),
        })
    }
}

const SAMPLE_KEY: i64 = -1;

/// Two-round MapReduce PSRS. Run with `q` map tasks and `r` reduce tasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsrsMr {
    q: usize,
    r: usize,
    splitters: Vec<i64>,
}

impl PsrsMr {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Reads the sorted values back out of the final global memory.
    pub fn sorted_output(memory: &GlobalMemory) -> Result<Vec<i64>> {
        memory
            .pairs()
            .iter()
            .map(|p| {
                p.key
                    .as_int()
                    .ok_or_else(|| SimError::InvalidInput("non-integer key in sort output".into()))
            })
            .collect()
    }
}

/// Builds the program and its input: `q` pairs, one per map task, each
/// carrying about `n/q` values under the split's index as key.
pub fn psrs_mr(data: &[i64], q: usize, r: usize) -> Result<(PsrsMr, GlobalMemory)> {
    if q == 0 || r == 0 {
        return Err(SimError::InvalidInput("q and r must be at least 1".into()));
    }
    if q < r {
        return Err(SimError::InvalidInput(format!("PSRS needs q >= r ({q} < {r})")));
    }
    if data.len() < q * (r + 1) {
        return Err(SimError::InvalidInput(format!(
            "PSRS needs n >= q(r+1) ({} < {}); use fewer tasks",
            data.len(),
            q * (r + 1)
        )));
    }
    let pairs = balanced_ranges(data.len(), q)
        .into_iter()
        .enumerate()
        .map(|(i, range)| KvPair::new(i as i64, Value::from_words(&data[range])))
        .collect();
    Ok((
        PsrsMr {
            q,
            r,
            splitters: Vec::new(),
        },
        GlobalMemory(pairs),
    ))
}

impl MrProgram for PsrsMr {
    fn map(&self, ctx: &mut TaskContext, pair: &KvPair) -> Result<()> {
        let Key::Int(k) = pair.key else {
            return Err(SimError::InvalidInput("PSRS expects integer keys".into()));
        };
        match ctx.round() {
            1 => {
                let mut chunk = pair.value.words()?;
                let cmps = counted_sort(&mut chunk);
                ctx.count_op(cmps);
                let samples: Vec<i64> = regular_sample_indices(chunk.len(), self.r)
                    .into_iter()
                    .map(|i| chunk[i])
                    .collect();
                ctx.count_op(samples.len() as u64);
                ctx.emit(SAMPLE_KEY, Value::from_words(&samples));
                ctx.emit(k, Value::from_words(&chunk));
            }
            _ => {
                if k != SAMPLE_KEY {
                    for x in pair.value.words()? {
                        ctx.emit(x, Value::from_int(x));
                    }
                }
            }
        }
        Ok(())
    }

    fn reduce(&self, ctx: &mut TaskContext, key: &Key, values: &[Value]) -> Result<()> {
        if ctx.round() == 1 && *key == Key::Int(SAMPLE_KEY) {
            let mut samples = Vec::new();
            for v in values {
                samples.extend(v.words()?);
            }
            let cmps = counted_sort(&mut samples);
            ctx.count_op(cmps);
            let idx = regular_sample_indices(samples.len(), self.r);
            let splitters: Vec<i64> = idx[1..self.r].iter().map(|&i| samples[i]).collect();
            ctx.count_op(self.r as u64 + 1);
            ctx.emit(SAMPLE_KEY, Value::from_words(&splitters));
        } else {
            for v in values {
                ctx.emit_pair(KvPair {
                    key: key.clone(),
                    value: v.clone(),
                });
            }
        }
        Ok(())
    }

    fn partition(&self, round: usize, key: &Key, reduce_tasks: usize) -> usize {
        match (round, key) {
            (1, Key::Int(SAMPLE_KEY)) => 0,
            (1, _) => default_partition(key, reduce_tasks),
            (_, Key::Int(x)) => self.splitters.partition_point(|s| s < x).min(reduce_tasks - 1),
            (_, _) => 0,
        }
    }

    fn next_round(&mut self, round: usize, output: &GlobalMemory) -> Result<Control> {
        if round >= 2 {
            return Ok(Control::Halt);
        }
        let sample = output
            .pairs()
            .iter()
            .find(|p| p.key == Key::Int(SAMPLE_KEY))
            .ok_or_else(|| SimError::InvalidInput("sampling round produced no splitters".into()))?;
        self.splitters = sample.value.words()?;
        Ok(Control::Continue)
    }
}
