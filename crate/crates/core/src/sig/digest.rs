//! The per-vote record hash `h = H((rid, v))` and its bitwise-XOR aggregate.
//!
//! The hash input is a canonical cross-backend encoding: 32-byte big-endian
//! rid followed by 4-byte big-endian v. Every implementation that follows
//! this encoding produces bit-identical bulletin boards.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::group::Scalar;
use crate::{Error, Result};

/// A 32-byte SHA-256 digest of one `(rid, v)` record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RecordHash(pub [u8; 32]);

impl RecordHash {
    pub fn zero() -> Self {
        RecordHash([0u8; 32])
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::BadEncoding(e.to_string()))?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| Error::BadEncoding("record hash must be 32 bytes".into()))?;
        Ok(RecordHash(arr))
    }
}

/// `SHA-256(rid_32be || v_4be)`; errors if `v >= m`.
pub fn record_hash(rid: &Scalar, v: u32, m: u32) -> Result<RecordHash> {
    if v >= m {
        return Err(Error::VoteOutOfRange { v, m });
    }
    let mut hasher = Sha256::new();
    hasher.update(rid.to_padded_bytes(32));
    hasher.update(v.to_be_bytes());
    Ok(RecordHash(hasher.finalize().into()))
}

/// Bytewise XOR of all digests; the zero digest for an empty list.
pub fn xor_fold(digests: &[RecordHash]) -> RecordHash {
    let mut acc = [0u8; 32];
    for d in digests {
        for (a, b) in acc.iter_mut().zip(d.0.iter()) {
            *a ^= b;
        }
    }
    RecordHash(acc)
}

impl Serialize for RecordHash {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for RecordHash {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        RecordHash::from_hex(&s).map_err(D::Error::custom)
    }
}
