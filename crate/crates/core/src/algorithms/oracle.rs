//! Plain sequential reference implementations.

use std::collections::{BTreeMap, VecDeque};

pub fn sequential_sort(data: &[i64]) -> Vec<i64> {
    let mut v = data.to_vec();
    v.sort_unstable();
    v
}

/// Row-major `n×n` product by the triple loop.
pub fn matmul_triple_loop(n: usize, a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut c = vec![0i64; n * n];
    for i in 0..n {
        for k in 0..n {
            let mut acc = 0i64;
            for j in 0..n {
                acc += a[i * n + j] * b[j * n + k];
            }
            c[i * n + k] = acc;
        }
    }
    c
}

/// Hop distances from `root`; `None` for unreachable vertices.
pub fn bfs_distances(adj: &[Vec<u32>], root: u32) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.len()];
    let mut queue = VecDeque::new();
    dist[root as usize] = Some(0);
    queue.push_back(root);
    while let Some(u) = queue.pop_front() {
        let d = dist[u as usize].expect("queued vertices are reached");
        for &v in &adj[u as usize] {
            if dist[v as usize].is_none() {
                dist[v as usize] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

pub fn word_count<'a>(tokens: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.to_string()).or_insert(0) += 1;
    }
    counts
}
