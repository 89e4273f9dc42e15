//! Word counting, the smallest useful MapReduce program.

use crate::error::{Result, SimError};
use crate::kv::{Key, KvPair, Value};
use crate::mr::{GlobalMemory, MrProgram, TaskContext};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WordCount;

impl WordCount {
    /// One `⟨i; token⟩` pair per token.
    pub fn input<S: AsRef<str>>(tokens: &[S]) -> Vec<KvPair> {
        tokens
            .iter()
            .enumerate()
            .map(|(i, t)| KvPair::new(i as i64, Value(t.as_ref().as_bytes().to_vec())))
            .collect()
    }

    pub fn counts(memory: &GlobalMemory) -> Result<Vec<(String, u64)>> {
        let mut out = Vec::with_capacity(memory.len());
        for pair in memory.pairs() {
            let Key::Bytes(word) = &pair.key else {
                return Err(SimError::InvalidInput("word keys must be byte strings".into()));
            };
            let word = String::from_utf8(word.clone())
                .map_err(|e| SimError::Decode(e.to_string()))?;
            let count = pair.value.words()?.first().copied().unwrap_or(0);
            out.push((word, count as u64));
        }
        out.sort();
        Ok(out)
    }
}

impl MrProgram for WordCount {
    fn map(&self, ctx: &mut TaskContext, pair: &KvPair) -> Result<()> {
        ctx.emit(Key::Bytes(pair.value.0.clone()), Value::from_int(1));
        Ok(())
    }

    fn reduce(&self, ctx: &mut TaskContext, key: &Key, values: &[Value]) -> Result<()> {
        let mut total = 0;
        for v in values {
            total += v.words()?.iter().sum::<i64>();
        }
        ctx.count_op(values.len() as u64);
        ctx.emit(key.clone(), Value::from_int(total));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::oracle::word_count;
    use crate::config::MachineConfig;
    use crate::inputs::random_words;
    use crate::mr::run_mr;

    #[test]
    fn counts_match_oracle() {
        let words = random_words(500, 3);
        let cfg = MachineConfig::new(3).with_tasks(6, 4);
        let run = run_mr(&mut WordCount, WordCount::input(&words), &cfg).unwrap();
        let expect: Vec<(String, u64)> = word_count(words.iter().map(String::as_str))
            .into_iter()
            .collect();
        assert_eq!(WordCount::counts(&run.output).unwrap(), expect);
        assert_eq!(run.ledger.d(), 1);
    }

    #[test]
    fn empty_text() {
        let run = run_mr(&mut WordCount, Vec::new(), &MachineConfig::new(2)).unwrap();
        assert!(WordCount::counts(&run.output).unwrap().is_empty());
    }
}
