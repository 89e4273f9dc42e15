use crate::error::{Result, SimError};
use crate::exec::Execution;
use crate::kv::{Key, KvPair, Value};

/// Everything one reduce task receives from the shuffle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReduceInput {
    /// Keys strictly increasing; values in (map task, emission) order.
    pub groups: Vec<(Key, Vec<Value>)>,
    /// Intermediate pairs received.
    pub pairs: usize,
    /// Cost units of those pairs.
    pub units: u64,
}

/// Routes partitioned map output to `reduce_tasks` reduce tasks, then sorts
/// and groups each task's data by key.
///
/// `intermediate[m]` holds map task `m`'s output in emission order, each
/// pair tagged with the partition chosen during the map phase.
pub fn shuffle(intermediate: Vec<Vec<(usize, KvPair)>>, reduce_tasks: usize) -> Result<Vec<ReduceInput>> {
    shuffle_with(intermediate, reduce_tasks, 0, Execution::Sequential)
}

pub(crate) fn shuffle_with(
    intermediate: Vec<Vec<(usize, KvPair)>>,
    reduce_tasks: usize,
    round: usize,
    exec: Execution,
) -> Result<Vec<ReduceInput>> {
    let mut buckets: Vec<Vec<KvPair>> = (0..reduce_tasks).map(|_| Vec::new()).collect();
    for task_output in intermediate {
        for (index, pair) in task_output {
            let bucket = buckets.get_mut(index).ok_or(SimError::PartitionOutOfRange {
                round,
                index,
                reduce_tasks,
            })?;
            bucket.push(pair);
        }
    }
    Ok(exec.map(buckets, |_, pairs| group_sorted(pairs)))
}

pub(crate) fn group_sorted(mut pairs: Vec<KvPair>) -> ReduceInput {
    let count = pairs.len();
    let units = pairs.iter().map(KvPair::size).sum();
    // stable: equal keys keep (map task, emission) order
    pairs.sort_by(|a, b| a.key.cmp(&b.key));
    let mut groups: Vec<(Key, Vec<Value>)> = Vec::new();
    for KvPair { key, value } in pairs {
        match groups.last_mut() {
            Some((k, vs)) if *k == key => vs.push(value),
            _ => groups.push((key, vec![value])),
        }
    }
    ReduceInput {
        groups,
        pairs: count,
        units,
    }
}
