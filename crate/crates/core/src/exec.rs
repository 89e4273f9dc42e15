//! Evaluation strategy for the data-parallel inner loops of the engines.
//!
//! Logical processors within a superstep, and tasks within a map or reduce
//! phase, share nothing while they run. The engines hand those independent
//! units to [`Execution::map`], which evaluates them either on the rayon
//! pool or on the calling thread. Results always come back in input order,
//! so ledgers and outputs are bit-identical under both strategies.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Falls back to sequential evaluation when the `parallel` feature is off.
    #[default]
    Parallel,
}

impl Execution {
    /// True when this strategy will actually use worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    pub fn map<T, R, F>(self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items
                .into_par_iter()
                .enumerate()
                .map(|(i, t)| f(i, t))
                .collect();
        }
        items.into_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }

    /// Like [`Execution::map`] but stops at the first error in input order.
    pub fn try_map<T, R, E, F>(self, items: Vec<T>, f: F) -> Result<Vec<R>, E>
    where
        T: Send,
        R: Send,
        E: Send,
        F: Fn(usize, T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}
