//! Pedersen commitments `C = g^m h^r` with homomorphic combination.
//!
//! Perfectly hiding; binding under the hardness of computing `log_g h`,
//! since two distinct openings of one commitment reveal
//! `log_g h = (m - m') / (r' - r) mod q`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::group::{GroupContext, GroupElement, Scalar};
use crate::Result;

/// A Pedersen commitment; just a group element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Commitment(pub GroupElement);

/// The pair that opens a commitment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Opening {
    pub message: Scalar,
    pub randomness: Scalar,
}

/// `g^message * h^randomness`.
pub fn commit(ctx: &GroupContext, message: &Scalar, randomness: &Scalar) -> Commitment {
    Commitment(ctx.mul(&ctx.exp_g(message), &ctx.exp_h(randomness)))
}

/// Draws the randomness from the caller's RNG and returns it with the
/// commitment.
pub fn commit_with_rng<R: RngCore>(
    ctx: &GroupContext,
    message: &Scalar,
    rng: &mut R,
) -> (Commitment, Opening) {
    let randomness = ctx.random_scalar(rng);
    let c = commit(ctx, message, &randomness);
    (
        c,
        Opening {
            message: message.clone(),
            randomness,
        },
    )
}

/// True iff the opening reproduces the commitment.
pub fn verify_opening(ctx: &GroupContext, c: &Commitment, o: &Opening) -> bool {
    commit(ctx, &o.message, &o.randomness) == *c
}

/// The group product, committing the sum of messages with the sum of
/// randomness. Errors if either element does not belong to `ctx`.
pub fn combine(ctx: &GroupContext, a: &Commitment, b: &Commitment) -> Result<Commitment> {
    ctx.require_member(&a.0)?;
    ctx.require_member(&b.0)?;
    Ok(Commitment(ctx.mul(&a.0, &b.0)))
}

impl Commitment {
    pub fn to_bytes(&self, ctx: &GroupContext) -> Vec<u8> {
        ctx.element_to_bytes(&self.0)
    }

    pub fn from_bytes(ctx: &GroupContext, bytes: &[u8]) -> Result<Commitment> {
        Ok(Commitment(ctx.element_from_bytes(bytes)?))
    }
}
