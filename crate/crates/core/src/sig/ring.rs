//! Ring signatures over a published key set: a signature verifies against
//! the whole ring and reveals nothing about which member signed. These stand
//! in for the anonymous group signatures of the polling officers and EVMs;
//! both groups publish their key lists, which is all ring verification needs.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::group::{GroupContext, GroupElement, Scalar};
use crate::{Error, Result};

const DOM_RING: &str = "ring";

/// An AOS-style ring signature: the chain-starting challenge plus one
/// response per ring member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingSig {
    pub seed_challenge: Scalar,
    pub responses: Vec<Scalar>,
}

fn ring_digest(ctx: &GroupContext, ring: &[GroupElement]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"veribooth/ring/v1");
    for pk in ring {
        hasher.update(ctx.element_to_bytes(pk));
    }
    hasher.finalize().into()
}

fn chain_step(
    ctx: &GroupContext,
    ring_hash: &[u8; 32],
    msg: &[u8],
    point: &GroupElement,
) -> Scalar {
    ctx.hash_to_scalar(DOM_RING, &[ring_hash, msg, &ctx.element_to_bytes(point)])
}

/// Signs `msg` as ring member `member_index`.
pub fn ring_sign<R: RngCore>(
    ctx: &GroupContext,
    ring: &[GroupElement],
    member_index: usize,
    member_secret: &Scalar,
    msg: &[u8],
    rng: &mut R,
) -> Result<RingSig> {
    let n = ring.len();
    if member_index >= n {
        return Err(Error::RingIndexOutOfRange {
            index: member_index,
            len: n,
        });
    }
    if ctx.exp_g(member_secret) != ring[member_index] {
        return Err(Error::RingKeyMismatch);
    }
    let ring_hash = ring_digest(ctx, ring);

    let commitment_scalar = ctx.random_nonzero_scalar(rng);
    let mut challenges = vec![Scalar::zero(); n];
    let mut responses = vec![Scalar::zero(); n];

    // close the ring starting just after the signer
    challenges[(member_index + 1) % n] =
        chain_step(ctx, &ring_hash, msg, &ctx.exp_g(&commitment_scalar));
    for offset in 1..n {
        let j = (member_index + offset) % n;
        responses[j] = ctx.random_scalar(rng);
        let point = ctx.mul(
            &ctx.exp_g(&responses[j]),
            &ctx.exp(&ring[j], &challenges[j]),
        );
        challenges[(j + 1) % n] = chain_step(ctx, &ring_hash, msg, &point);
    }
    // s_i = a - c_i * x_i makes g^{s_i} y_i^{c_i} = g^a
    responses[member_index] = ctx.scalar_sub(
        &commitment_scalar,
        &ctx.scalar_mul(&challenges[member_index], member_secret),
    );

    Ok(RingSig {
        seed_challenge: challenges[0].clone(),
        responses,
    })
}

/// Recomputes the challenge chain; valid iff it closes on `seed_challenge`.
pub fn ring_verify(ctx: &GroupContext, ring: &[GroupElement], msg: &[u8], sig: &RingSig) -> bool {
    let n = ring.len();
    if n == 0 || sig.responses.len() != n {
        return false;
    }
    if ring.iter().any(|pk| !ctx.is_member(pk)) {
        return false;
    }
    let ring_hash = ring_digest(ctx, ring);
    let mut c = sig.seed_challenge.clone();
    for j in 0..n {
        let point = ctx.mul(&ctx.exp_g(&sig.responses[j]), &ctx.exp(&ring[j], &c));
        c = chain_step(ctx, &ring_hash, msg, &point);
    }
    c == sig.seed_challenge
}

impl RingSig {
    pub fn to_bytes(&self, ctx: &GroupContext) -> Vec<u8> {
        let mut out = (self.responses.len() as u32).to_be_bytes().to_vec();
        out.extend_from_slice(&ctx.scalar_to_bytes(&self.seed_challenge));
        for r in &self.responses {
            out.extend_from_slice(&ctx.scalar_to_bytes(r));
        }
        out
    }

    pub fn from_bytes(ctx: &GroupContext, bytes: &[u8]) -> Result<RingSig> {
        let w = ctx.scalar_width();
        if bytes.len() < 4 + w {
            return Err(Error::BadEncoding("ring signature too short".into()));
        }
        let n = u32::from_be_bytes(bytes[..4].try_into().unwrap()) as usize;
        if bytes.len() != 4 + w * (n + 1) {
            return Err(Error::BadEncoding(format!(
                "ring signature length {} does not match member count {n}",
                bytes.len()
            )));
        }
        let seed_challenge = ctx.scalar_from_bytes(&bytes[4..4 + w])?;
        let mut responses = Vec::with_capacity(n);
        for i in 0..n {
            let start = 4 + w + i * w;
            responses.push(ctx.scalar_from_bytes(&bytes[start..start + w])?);
        }
        Ok(RingSig {
            seed_challenge,
            responses,
        })
    }
}
