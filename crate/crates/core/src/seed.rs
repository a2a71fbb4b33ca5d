//! Reproducible random streams.
//!
//! A [`Seed`] is a 64-bit value plus a stream label. Each distinct
//! `(value, label)` pair maps to an independent ChaCha stream, so callers can
//! carve out per-purpose and per-trial substreams without sharing generator
//! state between threads.

use std::fmt;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub value: u64,
    pub stream_label: String,
}

impl Seed {
    pub fn new(value: u64) -> Self {
        Self {
            value,
            stream_label: String::new(),
        }
    }

    pub fn with_label(value: u64, label: impl Into<String>) -> Self {
        Self {
            value,
            stream_label: label.into(),
        }
    }

    /// Child stream `self/label`.
    pub fn derive(&self, label: impl fmt::Display) -> Seed {
        let stream_label = if self.stream_label.is_empty() {
            label.to_string()
        } else {
            format!("{}/{}", self.stream_label, label)
        };
        Seed {
            value: self.value,
            stream_label,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.value.to_le_bytes());
        hasher.update((self.stream_label.len() as u64).to_le_bytes());
        hasher.update(self.stream_label.as_bytes());
        let digest: [u8; 32] = hasher.finalize().into();
        ChaCha8Rng::from_seed(digest)
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed::new(value)
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.stream_label.is_empty() {
            write!(f, "{}", self.value)
        } else {
            write!(f, "{}:{}", self.value, self.stream_label)
        }
    }
}
