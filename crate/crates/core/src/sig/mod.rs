//! Signature and encryption machinery shared by all parties: plain Schnorr
//! signatures (election-authority certifications), Boneh-Boyen short
//! signatures (the membership-proof table), blind Schnorr with per-token
//! ephemeral keys (polling-officer acknowledgments), ring signatures over the
//! published EVM/PO key sets, hybrid public-key encryption to the election
//! authority, and the per-vote record hash with its XOR aggregate.

mod bb;
mod blind;
mod digest;
mod hybrid;
mod ring;

pub use bb::{bb_sign, bb_verify};
pub use blind::{blind, bsign, bverify, derive_nonce, unblind, BlindSig, BlindingPair};
pub use digest::{record_hash, xor_fold, RecordHash};
pub use hybrid::{hybrid_decrypt, hybrid_encrypt, HybridCiphertext};
pub use ring::{ring_sign, ring_verify, RingSig};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::group::{GroupContext, GroupElement, Scalar};
use crate::Result;

/// A discrete-log key pair: `public = g^secret`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyPair {
    pub secret: Scalar,
    pub public: GroupElement,
}

pub fn keygen<R: RngCore>(ctx: &GroupContext, rng: &mut R) -> KeyPair {
    let secret = ctx.random_nonzero_scalar(rng);
    let public = ctx.exp_g(&secret);
    KeyPair { secret, public }
}

/// A Schnorr signature in (challenge, response) form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchnorrSig {
    pub challenge: Scalar,
    pub response: Scalar,
}

const DOM_SCHNORR: &str = "schnorr";

/// Signs `msg` under `sk`: `s = k + c*x` with `c = H(pk, g^k, msg)`.
pub fn sign<R: RngCore>(ctx: &GroupContext, sk: &Scalar, msg: &[u8], rng: &mut R) -> SchnorrSig {
    let pk = ctx.exp_g(sk);
    let k = ctx.random_nonzero_scalar(rng);
    let commitment = ctx.exp_g(&k);
    let challenge = ctx.hash_to_scalar(
        DOM_SCHNORR,
        &[
            &ctx.element_to_bytes(&pk),
            &ctx.element_to_bytes(&commitment),
            msg,
        ],
    );
    let response = ctx.scalar_add(&k, &ctx.scalar_mul(&challenge, sk));
    SchnorrSig {
        challenge,
        response,
    }
}

pub fn verify(ctx: &GroupContext, pk: &GroupElement, msg: &[u8], sig: &SchnorrSig) -> bool {
    if !ctx.is_member(pk) {
        return false;
    }
    // R' = g^s * pk^{-c}
    let commitment = ctx.mul(
        &ctx.exp_g(&sig.response),
        &ctx.exp(pk, &ctx.scalar_neg(&sig.challenge)),
    );
    let expected = ctx.hash_to_scalar(
        DOM_SCHNORR,
        &[
            &ctx.element_to_bytes(pk),
            &ctx.element_to_bytes(&commitment),
            msg,
        ],
    );
    expected == sig.challenge
}

impl SchnorrSig {
    pub fn to_bytes(&self, ctx: &GroupContext) -> Vec<u8> {
        let mut out = ctx.scalar_to_bytes(&self.challenge);
        out.extend_from_slice(&ctx.scalar_to_bytes(&self.response));
        out
    }

    pub fn from_bytes(ctx: &GroupContext, bytes: &[u8]) -> Result<SchnorrSig> {
        let w = ctx.scalar_width();
        if bytes.len() != 2 * w {
            return Err(crate::Error::BadEncoding(format!(
                "schnorr signature must be {} bytes, got {}",
                2 * w,
                bytes.len()
            )));
        }
        Ok(SchnorrSig {
            challenge: ctx.scalar_from_bytes(&bytes[..w])?,
            response: ctx.scalar_from_bytes(&bytes[w..])?,
        })
    }
}
