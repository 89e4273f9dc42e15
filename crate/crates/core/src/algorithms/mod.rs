//! Sorting, dense matrix multiplication and breadth-first search written
//! against both engines, with sequential oracles to check them.

pub mod bfs;
pub mod matmul;
pub mod oracle;
pub mod psrs;
pub mod wordcount;

use std::cell::Cell;
use std::cmp::Ordering;

use serde::Serialize;

pub use bfs::{bfs_bsp, BfsBsp, BfsOutput, Graph};
pub use matmul::{matmul_bsp, matmul_mr, MatmulBsp, MatmulMr, Matrix};
pub use psrs::{psrs_bsp, psrs_mr, PsrsBsp, PsrsMr};
pub use wordcount::WordCount;

use crate::bsp::BspProgram;

/// A BSP program together with its per-processor inputs.
pub struct BspInstance<P: BspProgram> {
    pub program: P,
    pub inputs: Vec<P::Input>,
}

/// Asymptotic growth of one cost quantity in the problem size, ignoring
/// logarithmic factors, which are reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Growth {
    pub exponent: f64,
    pub log_factor: bool,
    pub formula: &'static str,
}

impl Growth {
    pub const fn poly(exponent: f64, formula: &'static str) -> Self {
        Growth {
            exponent,
            log_factor: false,
            formula,
        }
    }

    pub const fn n_log_n(exponent: f64, formula: &'static str) -> Self {
        Growth {
            exponent,
            log_factor: true,
            formula,
        }
    }
}

/// Expected BSP/BSPMR costs of an algorithm as functions of input size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostDescriptor {
    pub w: Growth,
    pub h: Growth,
    pub s: Growth,
    pub f: Growth,
    pub h_n: Growth,
}

/// Sorts `v` and returns how many comparisons the sort made.
pub fn counted_sort<T: Ord>(v: &mut [T]) -> u64 {
    counted_sort_by(v, T::cmp)
}

pub fn counted_sort_by<T, F>(v: &mut [T], mut cmp: F) -> u64
where
    F: FnMut(&T, &T) -> Ordering,
{
    let count = Cell::new(0u64);
    v.sort_by(|a, b| {
        count.set(count.get() + 1);
        cmp(a, b)
    });
    count.get()
}

/// `⌊t·(m−1)/k⌋` for `t = 0..=k`: `k + 1` regularly spaced positions in a
/// sorted block of `m` elements, first and last included.
pub fn regular_sample_indices(m: usize, k: usize) -> Vec<usize> {
    assert!(m >= 1 && k >= 1);
    (0..=k).map(|t| t * (m - 1) / k).collect()
}

/// Ceiling of log₂, the comparison count of a binary search over `m` items.
pub(crate) fn ceil_log2(m: usize) -> u64 {
    if m <= 1 {
        0
    } else {
        u64::from(usize::BITS - (m - 1).leading_zeros())
    }
}

/// Splits `n` items into `parts` contiguous ranges differing by at most one.
pub(crate) fn balanced_ranges(n: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let base = n / parts;
    let extra = n % parts;
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_samples_include_ends() {
        assert_eq!(regular_sample_indices(10, 3), vec![0, 3, 6, 9]);
        assert_eq!(regular_sample_indices(4, 4), vec![0, 0, 1, 2, 3]);
        assert_eq!(regular_sample_indices(1, 2), vec![0, 0, 0]);
    }

    #[test]
    fn counted_sort_counts_something_and_sorts() {
        let mut v = vec![5, 3, 9, 1, 1, 7];
        let c = counted_sort(&mut v);
        assert_eq!(v, vec![1, 1, 3, 5, 7, 9]);
        assert!(c >= 5);
    }

    #[test]
    fn ranges_cover() {
        let r = balanced_ranges(10, 4);
        assert_eq!(r, vec![0..3, 3..6, 6..8, 8..10]);
        assert_eq!(balanced_ranges(2, 3), vec![0..1, 1..2, 2..2]);
    }
}
