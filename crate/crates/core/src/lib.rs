//! Core library for an individually verifiable polling-booth voting protocol.
//!
//! The pieces, roughly in pipeline order:
//!
//! * [`group`] — cyclic-group arithmetic with two interchangeable backends: a
//!   discrete-log-transparent mock (with a pairing, usable as a brute-force
//!   oracle) and a modular-subgroup production backend.
//! * [`commit`] — Pedersen commitments with homomorphic combination.
//! * [`sig`] — signatures and encryption: Schnorr, Boneh-Boyen, blind Schnorr
//!   with per-token ephemeral keys, ring signatures, hybrid encryption to the
//!   election authority, record hashes and their XOR aggregate.
//! * [`zkp`] — the interactive zero-knowledge proof of set membership, plus a
//!   Fiat-Shamir variant for file-based proofs.
//! * [`token`] / [`booth`] — token pre-generation and auditing, the polling
//!   officer desk, the EVM voting session, and booth close-out.
//! * [`pipeline`] — post-election collection, shuffling, decryption and
//!   verification at the election authority, bulletin-board publication and
//!   the tally.
//! * [`boards`] — the bulletin-board file formats.
//! * [`verify`] — receipt checks, individual verification via set-membership
//!   proofs, the universal verification suite, and the tamper harness.
//! * [`sim`] — a deterministic end-to-end election simulator.

pub mod boards;
pub mod booth;
pub mod commit;
pub mod error;
pub mod group;
pub mod pipeline;
pub mod rng;
pub mod sig;
pub mod sim;
pub mod token;
pub mod verify;
pub mod wire;
pub mod zkp;

pub use error::Error;
pub use group::{BackendId, GroupContext, GroupElement, Scalar, SecurityProfile, TargetElement};

/// Shorthand for results with this crate's error type.
pub type Result<T> = std::result::Result<T, Error>;

/// Serde helper: big unsigned integers as lowercase hex strings.
pub(crate) mod hexbig {
    use num_bigint::BigUint;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &BigUint,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&hex::encode(v.to_bytes_be()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<BigUint, D::Error> {
        let s = String::deserialize(deserializer)?;
        let bytes = hex::decode(&s).map_err(D::Error::custom)?;
        Ok(BigUint::from_bytes_be(&bytes))
    }
}

/// Serde helper: byte vectors as lowercase hex strings.
pub(crate) mod hexbytes {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        bytes: &[u8],
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Vec<u8>, D::Error> {
        let s = String::deserialize(deserializer)?;
        hex::decode(&s).map_err(D::Error::custom)
    }
}
