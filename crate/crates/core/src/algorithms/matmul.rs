//! Dense matrix multiplication on a `c×c×c` processor cube (`p = c³`).
//!
//! Processor `(i, j, k)` multiplies blocks `A[i,j]·B[j,k]`. The rows of each
//! output block `C[i,k]` are divided among the `c` processors `(i, ·, k)`,
//! which receive and sum the matching rows of every partial product. Each
//! processor keeps its own share of its partial product instead of sending
//! it to itself.
//!
//! The MapReduce form does the same in one round with `q = r = p`: map task
//! `(i, j, k)` gets both blocks through pre-partitioned input and emits row
//! shares keyed by `(i, k, share)`; reduce tasks sum them.

use serde::{Deserialize, Serialize};

use crate::bsp::{BspProgram, Context, Envelope};
use crate::codec::{self, WordReader, WordWriter};
use crate::error::{Result, SimError};
use crate::kv::{KvPair, Value};
use crate::mr::{GlobalMemory, MrInput, MrProgram, TaskContext};

use super::{balanced_ranges, BspInstance, CostDescriptor, Growth};

pub const DESCRIPTOR: CostDescriptor = CostDescriptor {
    w: Growth::poly(3.0, "n^3/p"),
    h: Growth::poly(2.0, "n^2/p^(2/3)"),
    s: Growth::poly(0.0, "1"),
    f: Growth::poly(2.0, "n^2/p"),
    h_n: Growth::poly(2.0, "n^2/p^(2/3)"),
};

/// Square row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<i64>,
}

impl Matrix {
    pub fn new(n: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(SimError::InvalidInput(format!(
                "{} entries cannot form a {n}x{n} matrix",
                data.len()
            )));
        }
        Ok(Matrix { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    /// `0` outside the matrix, so blocks can run past a ragged edge.
    fn get_padded(&self, i: usize, j: usize) -> i64 {
        if i < self.n && j < self.n {
            self.get(i, j)
        } else {
            0
        }
    }

    fn block(&self, bi: usize, bj: usize, side: usize) -> Vec<i64> {
        let mut out = Vec::with_capacity(side * side);
        for r in 0..side {
            for c in 0..side {
                out.push(self.get_padded(bi * side + r, bj * side + c));
            }
        }
        out
    }
}

pub fn cube_root(p: usize) -> Option<usize> {
    (1..=p).take_while(|c| c * c * c <= p).find(|c| c * c * c == p)
}

/// Block layout shared by both forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubeLayout {
    /// Original matrix side.
    pub n: usize,
    /// Processors per cube edge.
    pub c: usize,
    /// Block side after padding `n` up to a multiple of `c`.
    pub b: usize,
}

impl CubeLayout {
    fn new(n: usize, p: usize) -> Result<Self> {
        let c = cube_root(p)
            .ok_or_else(|| SimError::InvalidInput(format!("p = {p} is not a perfect cube")))?;
        Ok(CubeLayout {
            n,
            c,
            b: n.div_ceil(c),
        })
    }

    pub fn pid(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.c + j) * self.c + k
    }

    pub fn coords(&self, pid: usize) -> (usize, usize, usize) {
        let c = self.c;
        (pid / (c * c), (pid / c) % c, pid % c)
    }

    /// Key of row share `share` of output block `C[i,k]`.
    fn share_key(&self, i: usize, k: usize, share: usize) -> i64 {
        ((i * self.c + k) * self.c + share) as i64
    }

    fn share_rows(&self, share: usize) -> std::ops::Range<usize> {
        balanced_ranges(self.b, self.c)[share].clone()
    }

    fn inputs(&self, a: &Matrix, b: &Matrix) -> Vec<Vec<i64>> {
        (0..self.c * self.c * self.c)
            .map(|pid| {
                let (i, j, k) = self.coords(pid);
                let mut words = a.block(i, j, self.b);
                words.extend(b.block(j, k, self.b));
                words
            })
            .collect()
    }

    /// `A·B` for the packed blocks, counting one op per multiply and add.
    fn multiply(&self, blocks: &[i64], ops: &mut u64) -> Vec<i64> {
        let s = self.b;
        let (a, b) = blocks.split_at(s * s);
        let mut v = vec![0i64; s * s];
        for r in 0..s {
            for m in 0..s {
                let x = a[r * s + m];
                for col in 0..s {
                    v[r * s + col] += x * b[m * s + col];
                }
            }
        }
        *ops += 2 * (s * s * s) as u64;
        v
    }

    /// Writes one row share of `C[i,k]` into `out`, dropping padding.
    fn place(&self, out: &mut Matrix, i: usize, k: usize, share: usize, values: &[i64]) -> Result<()> {
        let rows = self.share_rows(share);
        if values.len() != rows.len() * self.b {
            return Err(SimError::InvalidInput("row share has the wrong length".into()));
        }
        for (r, row) in rows.zip(values.chunks(self.b.max(1))) {
            for (col, &x) in row.iter().enumerate() {
                let (gi, gk) = (i * self.b + r, k * self.b + col);
                if gi < self.n && gk < self.n {
                    out.data[gi * self.n + gk] = x;
                }
            }
        }
        Ok(())
    }
}

fn check_shapes(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.n != b.n {
        return Err(SimError::InvalidInput(format!(
            "matrix sides differ: {} vs {}",
            a.n, b.n
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatmulBsp {
    layout: CubeLayout,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatmulState {
    blocks: Vec<i64>,
    kept: Vec<i64>,
    out: Vec<i64>,
}

/// One processor's finished row share of an output block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatmulPiece {
    pub i: usize,
    pub k: usize,
    pub share: usize,
    pub values: Vec<i64>,
}

impl MatmulBsp {
    pub fn layout(&self) -> CubeLayout {
        self.layout
    }

    pub fn descriptor(&self) -> CostDescriptor {
        DESCRIPTOR
    }

    pub fn assemble(&self, pieces: &[MatmulPiece]) -> Result<Matrix> {
        let mut out = Matrix::zeros(self.layout.n);
        for piece in pieces {
            self.layout
                .place(&mut out, piece.i, piece.k, piece.share, &piece.values)?;
        }
        Ok(out)
    }
}

pub fn matmul_bsp(a: &Matrix, b: &Matrix, p: usize) -> Result<BspInstance<MatmulBsp>> {
    check_shapes(a, b)?;
    let layout = CubeLayout::new(a.n, p)?;
    Ok(BspInstance {
        inputs: layout.inputs(a, b),
        program: MatmulBsp { layout },
    })
}

impl BspProgram for MatmulBsp {
    type Input = Vec<i64>;
    type State = MatmulState;
    type Output = MatmulPiece;

    fn init(&self, _pid: usize, input: &Vec<i64>) -> MatmulState {
        MatmulState {
            blocks: input.clone(),
            ..Default::default()
        }
    }

    fn input_units(&self, input: &Vec<i64>) -> u64 {
        input.len() as u64
    }

    fn superstep(&self, ctx: &mut Context, state: &mut MatmulState, inbox: &[Envelope]) -> Result<()> {
        let lay = self.layout;
        let (i, j, k) = lay.coords(ctx.pid());
        if ctx.superstep() == 1 {
            let mut ops = 0;
            let v = lay.multiply(&state.blocks, &mut ops);
            ctx.count_op(ops);
            state.blocks = Vec::new();
            for share in 0..lay.c {
                let rows = lay.share_rows(share);
                let part = &v[rows.start * lay.b..rows.end * lay.b];
                if share == j {
                    state.kept = part.to_vec();
                } else if !part.is_empty() {
                    ctx.send(lay.pid(i, share, k), codec::encode_words(part));
                }
            }
            ctx.retain(state.kept.len() as u64);
        } else {
            let mut sum = std::mem::take(&mut state.kept);
            for e in inbox {
                let part = codec::decode_words(e.payload())?;
                if part.len() != sum.len() {
                    return Err(SimError::InvalidInput("partial products disagree in shape".into()));
                }
                for (acc, x) in sum.iter_mut().zip(part) {
                    *acc += x;
                }
                ctx.count_op(sum.len() as u64);
            }
            state.out = sum;
            ctx.vote_halt();
        }
        Ok(())
    }

    fn output_units(&self, state: &MatmulState) -> u64 {
        state.out.len() as u64
    }

    fn output(&self, pid: usize, state: MatmulState) -> MatmulPiece {
        let (i, j, k) = self.layout.coords(pid);
        MatmulPiece {
            i,
            k,
            share: j,
            values: state.out,
        }
    }

    fn encode_state(&self, state: &MatmulState) -> Vec<u8> {
        let mut w = WordWriter::new();
        w.push_slice(&state.blocks)
            .push_slice(&state.kept)
            .push_slice(&state.out);
        w.into_bytes()
    }

    fn decode_state(&self, bytes: &[u8]) -> Result<MatmulState> {
        let words = codec::decode_words(bytes)?;
        let mut r = WordReader::new(&words);
        Ok(MatmulState {
            blocks: r.slice()?.to_vec(),
            kept: r.slice()?.to_vec(),
            out: r.slice()?.to_vec(),
        })
    }
}

/// One-round MapReduce multiplication; run with `q = r = p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatmulMr {
    layout: CubeLayout,
}

impl MatmulMr {
    pub fn layout(&self) -> CubeLayout {
        self.layout
    }

    pub fn tasks(&self) -> usize {
        self.layout.c.pow(3)
    }

    pub fn assemble(&self, memory: &GlobalMemory) -> Result<Matrix> {
        let lay = self.layout;
        let mut out = Matrix::zeros(lay.n);
        for pair in memory.pairs() {
            let key = pair
                .key
                .as_int()
                .ok_or_else(|| SimError::InvalidInput("non-integer key in product".into()))?
                as usize;
            let (i, k, share) = (key / (lay.c * lay.c), (key / lay.c) % lay.c, key % lay.c);
            lay.place(&mut out, i, k, share, &pair.value.words()?)?;
        }
        Ok(out)
    }
}

/// Builds the program and its pre-partitioned input: map task `(i, j, k)`
/// receives one pair holding `A[i,j]` and `B[j,k]`.
pub fn matmul_mr(a: &Matrix, b: &Matrix, q: usize) -> Result<(MatmulMr, MrInput)> {
    check_shapes(a, b)?;
    let layout = CubeLayout::new(a.n, q)?;
    let splits = layout
        .inputs(a, b)
        .into_iter()
        .enumerate()
        .map(|(pid, words)| vec![KvPair::new(pid as i64, Value::from_words(&words))])
        .collect();
    Ok((MatmulMr { layout }, MrInput::Partitioned(splits)))
}

impl MrProgram for MatmulMr {
    fn map(&self, ctx: &mut TaskContext, pair: &KvPair) -> Result<()> {
        let lay = self.layout;
        let pid = pair
            .key
            .as_int()
            .ok_or_else(|| SimError::InvalidInput("block key must be an integer".into()))?
            as usize;
        let (i, _, k) = lay.coords(pid);
        let mut ops = 0;
        let v = lay.multiply(&pair.value.words()?, &mut ops);
        ctx.count_op(ops);
        for share in 0..lay.c {
            let rows = lay.share_rows(share);
            if rows.is_empty() {
                continue;
            }
            ctx.emit(
                lay.share_key(i, k, share),
                Value::from_words(&v[rows.start * lay.b..rows.end * lay.b]),
            );
        }
        Ok(())
    }

    fn reduce(&self, ctx: &mut TaskContext, key: &crate::kv::Key, values: &[Value]) -> Result<()> {
        let mut sum: Vec<i64> = Vec::new();
        for v in values {
            let part = v.words()?;
            if sum.is_empty() {
                sum = part;
            } else {
                for (acc, x) in sum.iter_mut().zip(part) {
                    *acc += x;
                }
                ctx.count_op(sum.len() as u64);
            }
        }
        ctx.emit_pair(KvPair {
            key: key.clone(),
            value: Value::from_words(&sum),
        });
        Ok(())
    }
}
