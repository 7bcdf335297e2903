use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Per-student generation seed.
///
/// `value` is a pure function of the identifier and the exercise id, so a
/// student re-running the generator always lands on the same environment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed {
    pub value: u64,
    pub source_identifier: String,
    pub exercise_id: String,
}

/// First eight bytes of SHA-256(`input`), big-endian.
pub(crate) fn sha256_prefix_u64(input: &[u8]) -> u64 {
    let digest = Sha256::digest(input);
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(head)
}

pub fn derive_seed(identifier: &str, exercise_id: &str) -> Result<Seed> {
    if identifier.is_empty() {
        return Err(Error::validation("seed identifier must not be empty"));
    }
    if exercise_id.is_empty() {
        return Err(Error::validation("exercise id must not be empty"));
    }
    let value = sha256_prefix_u64(format!("{identifier}:{exercise_id}").as_bytes());
    Ok(Seed {
        value,
        source_identifier: identifier.to_owned(),
        exercise_id: exercise_id.to_owned(),
    })
}

impl Seed {
    /// A seed carrying only a raw value, for callers that manage their own
    /// identifiers (sampling, tests).
    pub fn from_value(value: u64) -> Self {
        Seed {
            value,
            source_identifier: String::new(),
            exercise_id: String::new(),
        }
    }

    /// Independent stream for one variable. Keying by name rather than by
    /// position means adding or removing a variable never shifts the values
    /// drawn for the others.
    pub fn substream(&self, variable_name: &str) -> SplitMix64 {
        SplitMix64::new(self.value ^ sha256_prefix_u64(variable_name.as_bytes()))
    }
}
