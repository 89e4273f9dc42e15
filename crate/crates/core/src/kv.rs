//! Key/value pairs, the datum that flows through every MapReduce phase.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec;

/// Bytes per cost unit for value payloads.
pub const UNIT_BYTES: usize = 8;

/// Units needed to move `bytes` of payload.
pub fn payload_units(bytes: usize) -> u64 {
    bytes.div_ceil(UNIT_BYTES) as u64
}

/// An opaque, totally ordered key. Integer keys sort before byte keys.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Key {
    Int(i64),
    Bytes(Vec<u8>),
}

impl Key {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Key::Int(k) => Some(*k),
            Key::Bytes(_) => None,
        }
    }
}

impl From<i64> for Key {
    fn from(k: i64) -> Self {
        Key::Int(k)
    }
}

impl From<&str> for Key {
    fn from(k: &str) -> Self {
        Key::Bytes(k.as_bytes().to_vec())
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::Int(k) => write!(f, "{k}"),
            Key::Bytes(b) => write!(f, "{}", String::from_utf8_lossy(b)),
        }
    }
}

/// An opaque byte payload.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Value(pub Vec<u8>);

impl Value {
    pub fn empty() -> Self {
        Value(Vec::new())
    }

    pub fn from_words(words: &[i64]) -> Self {
        Value(codec::encode_words(words))
    }

    pub fn from_int(x: i64) -> Self {
        Value::from_words(&[x])
    }

    /// Interprets the payload as little-endian 64-bit words.
    pub fn words(&self) -> crate::Result<Vec<i64>> {
        codec::decode_words(&self.0)
    }

    pub fn units(&self) -> u64 {
        payload_units(self.0.len())
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value(v.as_bytes().to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KvPair {
    pub key: Key,
    pub value: Value,
}

impl KvPair {
    pub fn new(key: impl Into<Key>, value: Value) -> Self {
        KvPair {
            key: key.into(),
            value,
        }
    }

    /// Cost units to read, write or move this pair: one for the pair itself
    /// plus one per started 8-byte block of value payload.
    pub fn size(&self) -> u64 {
        1 + self.value.units()
    }
}

pub fn total_units(pairs: &[KvPair]) -> u64 {
    pairs.iter().map(KvPair::size).sum()
}
