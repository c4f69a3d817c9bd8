//! Hybrid public-key encryption to the election authority: an ElGamal-style
//! KEM (the shared element is hashed to a keystream seed), a hash-derived
//! keystream masking the payload, and a hash tag binding the whole
//! ciphertext.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::group::{GroupContext, GroupElement, Scalar};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridCiphertext {
    /// `g^k` for the encryptor's ephemeral `k`.
    pub kem: GroupElement,
    /// Keystream-masked payload.
    #[serde(with = "crate::hexbytes")]
    pub body: Vec<u8>,
    /// 32-byte authentication digest over seed and body.
    pub tag: crate::sig::RecordHash,
}

fn keystream_seed(ctx: &GroupContext, kem: &GroupElement, shared: &GroupElement) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"veribooth/hybrid/seed/v1");
    hasher.update(ctx.element_to_bytes(kem));
    hasher.update(ctx.element_to_bytes(shared));
    hasher.finalize().into()
}

fn apply_keystream(seed: &[u8; 32], data: &mut [u8]) {
    let mut counter = 0u64;
    let mut offset = 0usize;
    while offset < data.len() {
        let mut hasher = Sha256::new();
        hasher.update(b"veribooth/hybrid/stream/v1");
        hasher.update(seed);
        hasher.update(counter.to_be_bytes());
        let block = hasher.finalize();
        for (byte, k) in data[offset..].iter_mut().zip(block.iter()) {
            *byte ^= k;
        }
        offset += block.len();
        counter += 1;
    }
}

fn tag_for(seed: &[u8; 32], body: &[u8]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"veribooth/hybrid/tag/v1");
    hasher.update(seed);
    hasher.update((body.len() as u64).to_be_bytes());
    hasher.update(body);
    hasher.finalize().into()
}

pub fn hybrid_encrypt<R: RngCore>(
    ctx: &GroupContext,
    pk: &GroupElement,
    plaintext: &[u8],
    rng: &mut R,
) -> HybridCiphertext {
    let k = ctx.random_nonzero_scalar(rng);
    let kem = ctx.exp_g(&k);
    let shared = ctx.exp(pk, &k);
    let seed = keystream_seed(ctx, &kem, &shared);
    let mut body = plaintext.to_vec();
    apply_keystream(&seed, &mut body);
    let tag = tag_for(&seed, &body);
    HybridCiphertext {
        kem,
        body,
        tag: crate::sig::RecordHash(tag),
    }
}

pub fn hybrid_decrypt(
    ctx: &GroupContext,
    sk: &Scalar,
    ct: &HybridCiphertext,
) -> Result<Vec<u8>> {
    ctx.require_member(&ct.kem)
        .map_err(|_| Error::MalformedCiphertext("KEM element not in group".into()))?;
    let shared = ctx.exp(&ct.kem, sk);
    let seed = keystream_seed(ctx, &ct.kem, &shared);
    if tag_for(&seed, &ct.body) != ct.tag.0 {
        return Err(Error::TagMismatch);
    }
    let mut plaintext = ct.body.clone();
    apply_keystream(&seed, &mut plaintext);
    Ok(plaintext)
}
