//! Word-oriented byte encoding used for message payloads and persisted
//! processor state. One word is eight bytes, which is also one cost unit,
//! so an encoded record's unit count equals its word count.

use crate::error::{Result, SimError};
use crate::kv::{Key, KvPair, Value};

pub fn encode_words(words: &[i64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(words.len() * 8);
    for w in words {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

pub fn decode_words(bytes: &[u8]) -> Result<Vec<i64>> {
    if bytes.len() % 8 != 0 {
        return Err(SimError::Decode(format!(
            "{} bytes is not a whole number of words",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Appends words to a buffer.
#[derive(Debug, Default, Clone)]
pub struct WordWriter {
    words: Vec<i64>,
}

impl WordWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, w: i64) -> &mut Self {
        self.words.push(w);
        self
    }

    /// Length-prefixed slice.
    pub fn push_slice(&mut self, ws: &[i64]) -> &mut Self {
        self.words.push(ws.len() as i64);
        self.words.extend_from_slice(ws);
        self
    }

    /// Length-prefixed byte string, zero-padded to whole words.
    pub fn push_bytes(&mut self, bytes: &[u8]) -> &mut Self {
        self.words.push(bytes.len() as i64);
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            self.words.push(i64::from_le_bytes(buf));
        }
        self
    }

    pub fn push_pair(&mut self, pair: &KvPair) -> &mut Self {
        match &pair.key {
            Key::Int(k) => {
                self.push(0).push(*k);
            }
            Key::Bytes(b) => {
                self.push(1).push_bytes(b);
            }
        }
        self.push_bytes(&pair.value.0)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn into_words(self) -> Vec<i64> {
        self.words
    }

    pub fn into_bytes(self) -> Vec<u8> {
        encode_words(&self.words)
    }
}

/// Reads back what a [`WordWriter`] produced.
#[derive(Debug, Clone)]
pub struct WordReader<'a> {
    words: &'a [i64],
    pos: usize,
}

impl<'a> WordReader<'a> {
    pub fn new(words: &'a [i64]) -> Self {
        WordReader { words, pos: 0 }
    }

    pub fn is_done(&self) -> bool {
        self.pos >= self.words.len()
    }

    pub fn next(&mut self) -> Result<i64> {
        let w = *self
            .words
            .get(self.pos)
            .ok_or_else(|| SimError::Decode("unexpected end of words".into()))?;
        self.pos += 1;
        Ok(w)
    }

    fn len_prefix(&mut self) -> Result<usize> {
        let n = self.next()?;
        usize::try_from(n).map_err(|_| SimError::Decode(format!("negative length {n}")))
    }

    pub fn slice(&mut self) -> Result<&'a [i64]> {
        let n = self.len_prefix()?;
        let end = self.pos + n;
        if end > self.words.len() {
            return Err(SimError::Decode("slice runs past end".into()));
        }
        let s = &self.words[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>> {
        let n = self.len_prefix()?;
        let nwords = n.div_ceil(8);
        if self.pos + nwords > self.words.len() {
            return Err(SimError::Decode("byte string runs past end".into()));
        }
        let mut out = Vec::with_capacity(nwords * 8);
        for w in &self.words[self.pos..self.pos + nwords] {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.truncate(n);
        self.pos += nwords;
        Ok(out)
    }

    pub fn pair(&mut self) -> Result<KvPair> {
        let key = match self.next()? {
            0 => Key::Int(self.next()?),
            1 => Key::Bytes(self.bytes()?),
            t => return Err(SimError::Decode(format!("unknown key tag {t}"))),
        };
        Ok(KvPair {
            key,
            value: Value(self.bytes()?),
        })
    }
}
