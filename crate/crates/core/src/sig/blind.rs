//! Blind Schnorr signatures under per-token ephemeral keys.
//!
//! The signer's long-term secret is `x`; a token's ephemeral key pair is
//! `e = x * r_p mod q` with public `p = (g^x)^{r_p}`. The three-move shape is
//! the standard one, with the signer's nonce commitment produced ahead of
//! time so the requester can blind before the signing session:
//!
//! 1. signer: nonce `k = H(nonce_seed || r_p)`, commitment `R = g^k`
//! 2. requester: picks `(alpha, beta)`, computes `R' = R * g^alpha * p^beta`,
//!    `c' = H(p, R', msg)`, and sends the blinded challenge `c = c' + beta`
//! 3. signer: responds `s = k + c*e`
//!
//! Unblinding yields the plain Schnorr pair `(c', s' = s + alpha)` on `msg`
//! under `p`. For any signing transcript and any final signature there is
//! exactly one `(alpha, beta)` relating them, so the signer cannot link a
//! blinded message to the signature it produced.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::group::{GroupContext, GroupElement, Scalar};
use crate::{Error, Result};

const DOM_BLIND: &str = "blind-schnorr";

/// The requester's blinding factor: a scalar pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindingPair {
    pub alpha: Scalar,
    pub beta: Scalar,
}

impl BlindingPair {
    pub fn random<R: RngCore>(ctx: &GroupContext, rng: &mut R) -> Self {
        BlindingPair {
            alpha: ctx.random_scalar(rng),
            beta: ctx.random_scalar(rng),
        }
    }
}

/// The unblinded signature: a Schnorr (challenge, response) pair that
/// verifies against the original message under the ephemeral public key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindSig {
    pub challenge: Scalar,
    pub response: Scalar,
}

/// Signer-side per-token nonce, derived from a booth-secret seed and the
/// token's `r_p`. Each token is signed at most once, so the nonce is never
/// reused.
pub fn derive_nonce(ctx: &GroupContext, nonce_seed: &[u8; 32], r_p: &Scalar) -> Scalar {
    let mut hasher = Sha256::new();
    hasher.update(b"veribooth/bsig-nonce/v1");
    hasher.update(nonce_seed);
    hasher.update(r_p.to_padded_bytes(32));
    let digest: [u8; 32] = hasher.finalize().into();
    // expand and reduce through the context's hash-to-scalar
    ctx.hash_to_scalar("bsig-nonce", &[&digest])
}

fn challenge_for(
    ctx: &GroupContext,
    ephemeral_pk: &GroupElement,
    commitment: &GroupElement,
    message: &Scalar,
) -> Scalar {
    ctx.hash_to_scalar(
        DOM_BLIND,
        &[
            &ctx.element_to_bytes(ephemeral_pk),
            &ctx.element_to_bytes(commitment),
            &ctx.scalar_to_bytes(message),
        ],
    )
}

/// Blinds `message` for the ephemeral key `ephemeral_pk`, given the signer's
/// nonce commitment `R`. Returns the blinded challenge bytes handed to the
/// signer.
pub fn blind(
    ctx: &GroupContext,
    message: &Scalar,
    b: &BlindingPair,
    ephemeral_pk: &GroupElement,
    nonce_commitment: &GroupElement,
) -> Vec<u8> {
    let r_prime = ctx.mul(
        &ctx.mul(nonce_commitment, &ctx.exp_g(&b.alpha)),
        &ctx.exp(ephemeral_pk, &b.beta),
    );
    let c_prime = challenge_for(ctx, ephemeral_pk, &r_prime, message);
    let c = ctx.scalar_add(&c_prime, &b.beta);
    ctx.scalar_to_bytes(&c)
}

/// Signer's response `s = k + c*e` on the blinded challenge. The signer sees
/// only the blinded bytes, never the message.
pub fn bsign(
    ctx: &GroupContext,
    ephemeral_sk: &Scalar,
    nonce: &Scalar,
    blinded: &[u8],
) -> Result<Scalar> {
    let c = ctx
        .scalar_from_bytes(blinded)
        .map_err(|_| Error::MalformedBlinding)?;
    Ok(ctx.scalar_add(nonce, &ctx.scalar_mul(&c, ephemeral_sk)))
}

/// Removes the blinding: `(c' = c - beta, s' = s + alpha)`.
pub fn unblind(
    ctx: &GroupContext,
    response: &Scalar,
    blinded: &[u8],
    b: &BlindingPair,
) -> Result<BlindSig> {
    let c = ctx
        .scalar_from_bytes(blinded)
        .map_err(|_| Error::MalformedBlinding)?;
    Ok(BlindSig {
        challenge: ctx.scalar_sub(&c, &b.beta),
        response: ctx.scalar_add(response, &b.alpha),
    })
}

/// Plain Schnorr verification of the unblinded signature under the ephemeral
/// public key.
pub fn bverify(
    ctx: &GroupContext,
    ephemeral_pk: &GroupElement,
    message: &Scalar,
    sig: &BlindSig,
) -> bool {
    if !ctx.is_member(ephemeral_pk) {
        return false;
    }
    let commitment = ctx.mul(
        &ctx.exp_g(&sig.response),
        &ctx.exp(ephemeral_pk, &ctx.scalar_neg(&sig.challenge)),
    );
    challenge_for(ctx, ephemeral_pk, &commitment, message) == sig.challenge
}

impl BlindSig {
    pub fn to_bytes(&self, ctx: &GroupContext) -> Vec<u8> {
        let mut out = ctx.scalar_to_bytes(&self.challenge);
        out.extend_from_slice(&ctx.scalar_to_bytes(&self.response));
        out
    }

    pub fn from_bytes(ctx: &GroupContext, bytes: &[u8]) -> Result<BlindSig> {
        let w = ctx.scalar_width();
        if bytes.len() != 2 * w {
            return Err(Error::BadEncoding(format!(
                "blind signature must be {} bytes, got {}",
                2 * w,
                bytes.len()
            )));
        }
        Ok(BlindSig {
            challenge: ctx.scalar_from_bytes(&bytes[..w])?,
            response: ctx.scalar_from_bytes(&bytes[w..])?,
        })
    }
}
