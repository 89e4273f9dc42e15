//! Seeded workload generation and the plain-text input formats.
//!
//! Generators draw from ChaCha8, so a seed yields the same data on every
//! platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algorithms::{Graph, Matrix};
use crate::error::{Result, SimError};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` integers drawn uniformly from `[0, 1_000_000)`.
pub fn random_ints(n: usize, seed: u64) -> Vec<i64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(0..1_000_000)).collect()
}

/// Dense `n×n` matrix with entries in `[-9, 9]`.
pub fn random_matrix(n: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    Matrix::new(n, (0..n * n).map(|_| r.random_range(-9..=9)).collect())
        .expect("length matches")
}

/// G(n, prob): every unordered pair is an edge independently.
pub fn erdos_renyi(n: usize, prob: f64, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if r.random_bool(prob) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges).expect("generated edges are in range")
}

/// Union of `k/2` random Hamiltonian cycles: every vertex has degree at
/// most `k` and the diameter is logarithmic with high probability.
pub fn random_regular(n: usize, k: usize, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    let mut order: Vec<u32> = (0..n as u32).collect();
    for _ in 0..k / 2 {
        order.shuffle(&mut r);
        for i in 0..n {
            edges.push((order[i], order[(i + 1) % n]));
        }
    }
    Graph::from_edges(n, &edges).expect("generated edges are in range")
}

pub fn path_graph(n: usize) -> Graph {
    let edges: Vec<(u32, u32)> = (1..n as u32).map(|v| (v - 1, v)).collect();
    Graph::from_edges(n, &edges).expect("path edges are in range")
}

/// Random tokens over a small vocabulary, for word counting.
pub fn random_words(n: usize, seed: u64) -> Vec<String> {
    const VOCAB: [&str; 12] = [
        "bulk", "sync", "map", "reduce", "shuffle", "barrier", "round", "task", "worker", "key",
        "value", "cost",
    ];
    let mut r = rng(seed);
    (0..n)
        .map(|_| VOCAB[r.random_range(0..VOCAB.len())].to_string())
        .collect()
}

pub fn format_ints(values: &[i64]) -> String {
    values.iter().map(|v| format!("{v}\n")).collect()
}

/// One integer per line; blank lines are skipped.
pub fn parse_ints(text: &str) -> Result<Vec<i64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|e| SimError::InvalidInput(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.data().chunks(m.n().max(1)) {
        let cells: Vec<String> = row.iter().map(i64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Row-major CSV of a square integer matrix.
pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut data = Vec::new();
    let mut rows = 0;
    let mut width = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<i64> = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse()
                    .map_err(|e| SimError::InvalidInput(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<_>>()?;
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(SimError::InvalidInput(format!("line {}: ragged row", i + 1)));
        }
        data.extend(row);
        rows += 1;
    }
    if width.unwrap_or(0) != rows {
        return Err(SimError::InvalidInput(format!(
            "matrix is {rows}x{} but must be square",
            width.unwrap_or(0)
        )));
    }
    Matrix::new(rows, data)
}

pub fn format_edges(g: &Graph) -> String {
    let mut out = format!("# vertices {}\n", g.vertex_count());
    for (u, nbrs) in g.adjacency().iter().enumerate() {
        for &v in nbrs {
            if (u as u32) < v {
                out.push_str(&format!("{u} {v}\n"));
            }
        }
    }
    out
}

/// `u v` per line, undirected. A `# vertices N` comment fixes the vertex
/// count; otherwise it is one more than the largest id seen.
pub fn parse_edges(text: &str) -> Result<Graph> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(n) = rest.trim().strip_prefix("vertices") {
                declared = Some(n.trim().parse::<usize>().map_err(|e| {
                    SimError::InvalidInput(format!("line {}: {e}", i + 1))
                })?);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace().map(str::parse::<u32>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
            _ => {
                return Err(SimError::InvalidInput(format!(
                    "line {}: expected two vertex ids",
                    i + 1
                )))
            }
        }
    }
    let seen = edges.iter().map(|&(u, v)| u.max(v) as usize + 1).max().unwrap_or(0);
    Graph::from_edges(declared.unwrap_or(seen), &edges)
}
