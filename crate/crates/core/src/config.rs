use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::exec::Execution;

pub const DEFAULT_MAX_SUPERSTEPS: usize = 10_000;
pub const DEFAULT_MAX_ROUNDS: usize = 1_000;

/// Shape of the simulated cluster and its network parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineConfig {
    /// Physical processors (BSP) or workers (MapReduce).
    pub p: usize,
    /// Time units per communicated data unit.
    pub g: f64,
    /// Time units per barrier or per round setup.
    pub l: f64,
    /// Map tasks per round.
    pub q: usize,
    /// Reduce tasks available per round.
    pub r: usize,
    pub seed: u64,
    pub max_supersteps: usize,
    pub max_rounds: usize,
    #[serde(skip)]
    pub exec: Execution,
}

impl MachineConfig {
    /// A machine with `p` processors, `q = r = p`, and `g = l = 1`.
    pub fn new(p: usize) -> Self {
        MachineConfig {
            p,
            g: 1.0,
            l: 1.0,
            q: p,
            r: p,
            seed: 0,
            max_supersteps: DEFAULT_MAX_SUPERSTEPS,
            max_rounds: DEFAULT_MAX_ROUNDS,
            exec: Execution::default(),
        }
    }

    pub fn with_tasks(mut self, q: usize, r: usize) -> Self {
        self.q = q;
        self.r = r;
        self
    }

    pub fn with_network(mut self, g: f64, l: f64) -> Self {
        self.g = g;
        self.l = l;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Rejects impossible shapes and returns warnings for legal ones that
    /// leave the `q > p`, `r > p` regime the MapReduce model assumes.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.p == 0 {
            return Err(SimError::InvalidConfig("p must be at least 1".into()));
        }
        if self.q == 0 || self.r == 0 {
            return Err(SimError::InvalidConfig("q and r must be at least 1".into()));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(SimError::InvalidConfig(format!("g = {} must be finite and >= 0", self.g)));
        }
        if !(self.l.is_finite() && self.l >= 0.0) {
            return Err(SimError::InvalidConfig(format!("l = {} must be finite and >= 0", self.l)));
        }
        if self.max_supersteps == 0 || self.max_rounds == 0 {
            return Err(SimError::InvalidConfig("step limits must be positive".into()));
        }
        let mut warnings = Vec::new();
        if self.q <= self.p {
            warnings.push(format!("q = {} is not greater than p = {}", self.q, self.p));
        }
        if self.r <= self.p {
            warnings.push(format!("r = {} is not greater than p = {}", self.r, self.p));
        }
        Ok(warnings)
    }
}
