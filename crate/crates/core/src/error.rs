use thiserror::Error;

/// Everything that can go wrong while configuring or running a simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid machine configuration: {0}")]
    InvalidConfig(String),

    #[error("superstep {superstep}: processor {from} addressed processor {to}, but only {p} exist")]
    DestinationOutOfRange {
        superstep: usize,
        from: usize,
        to: usize,
        p: usize,
    },

    #[error("program did not halt within {0} supersteps")]
    MaxSuperstepsExceeded(usize),

    #[error("program did not halt within {0} rounds")]
    MaxRoundsExceeded(usize),

    #[error("expected {expected} input partitions, got {got}")]
    InputArity { expected: usize, got: usize },

    #[error("superstep {superstep}: every processor halted with {pending} undelivered messages")]
    UndeliveredMessages { superstep: usize, pending: usize },

    #[error("round {round}: partitioner sent a pair to reduce task {index}, but only {reduce_tasks} are in use")]
    PartitionOutOfRange {
        round: usize,
        index: usize,
        reduce_tasks: usize,
    },

    #[error("round {round}: program asked for {requested} reduce tasks, allowed range is 1..={r}")]
    ReduceTaskCount {
        round: usize,
        requested: usize,
        r: usize,
    },

    #[error("round {round}: pre-partitioned input has {got} splits, expected q = {q}")]
    SplitCount { round: usize, got: usize, q: usize },

    #[error("brute-force makespan supports at most {limit} tasks, got {tasks}; use the greedy bound instead")]
    TooManyTasks { tasks: usize, limit: usize },

    #[error("invalid algorithm input: {0}")]
    InvalidInput(String),

    #[error("malformed encoded data: {0}")]
    Decode(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("efficiency check needs at least 4 runs at strictly increasing sizes: {0}")]
    InsufficientRuns(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
