//! Interactive zero-knowledge proof that a commitment opens to a member of a
//! public set, via a blinded Boneh-Boyen signature on the member.
//!
//! The verifier picks a secret `x` and publishes `y = g^x` together with a
//! signature table `A_i = g^{1/(x+i)}` for every set element `i`. The prover,
//! holding an opening `(rho, r)` of `C` with `rho` in the set, blinds the
//! table entry as `V = A_rho^v` and runs a sigma protocol:
//!
//! * first move: `a = e(V,g)^{-s} e(g,g)^t`, `D = g^s h^mm`
//! * challenge: `c` uniform in `Z_q`
//! * response: `z_rho = s - rho*c`, `z_v = t - v*c`, `z_r = mm - r*c`
//! * checks: `D = C^c h^{z_r} g^{z_rho}` and
//!   `a = e(V,y)^c e(V,g)^{-z_rho} e(g,g)^{z_v}`
//!
//! The blinding exponent `v` is drawn nonzero and the verifier rejects an
//! identity `V`: an identity `V` carries no signature at all, and with it the
//! second equation degenerates into a plain opening proof.
//!
//! Proving after setup is a table lookup plus a constant number of group
//! operations, so per-proof cost is independent of the set size.

use rand::RngCore;
use std::collections::HashMap;

use crate::commit::{commit, Commitment, Opening};
use crate::group::{GroupContext, GroupElement, Scalar, TargetElement};
use crate::sig::bb_sign;
use crate::wire::{put_field, ArtifactHeader, ArtifactKind, Reader};
use crate::{Error, Result};

const DOM_FS: &str = "membership-fs";

/// The verifier's public message: `y = g^x` and the per-element signature
/// table. Built once and reused across any number of proof sessions.
#[derive(Debug, Clone)]
pub struct MembershipTable {
    pub y: GroupElement,
    entries: HashMap<Vec<u8>, GroupElement>,
}

impl MembershipTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, ctx: &GroupContext, element: &Scalar) -> Option<&GroupElement> {
        self.entries.get(&ctx.scalar_to_bytes(element))
    }
}

/// The verifier's state: the secret `x` plus the public table.
#[derive(Debug, Clone)]
pub struct VerifierSetup {
    secret: Scalar,
    pub table: MembershipTable,
}

/// Builds the signature table for `set_elements`, redrawing `x` if any
/// element collides with `-x`. Duplicate elements are rejected.
pub fn setup_verifier<R: RngCore>(
    ctx: &GroupContext,
    set_elements: &[Scalar],
    rng: &mut R,
) -> Result<VerifierSetup> {
    loop {
        let x = ctx.random_nonzero_scalar(rng);
        match setup_verifier_with_secret(ctx, set_elements, x) {
            Err(Error::ZeroDenominator) => continue,
            other => return other,
        }
    }
}

/// Deterministic variant for a fixed verifier secret.
pub fn setup_verifier_with_secret(
    ctx: &GroupContext,
    set_elements: &[Scalar],
    x: Scalar,
) -> Result<VerifierSetup> {
    let mut entries = HashMap::with_capacity(set_elements.len());
    for element in set_elements {
        let sig = bb_sign(ctx, &x, element)?;
        if entries.insert(ctx.scalar_to_bytes(element), sig).is_some() {
            return Err(Error::DuplicateSetElement);
        }
    }
    let y = ctx.exp_g(&x);
    Ok(VerifierSetup {
        secret: x,
        table: MembershipTable { y, entries },
    })
}

impl VerifierSetup {
    pub fn public_key(&self) -> &GroupElement {
        &self.table.y
    }

    /// Issues a uniform challenge.
    pub fn challenge<R: RngCore>(&self, ctx: &GroupContext, rng: &mut R) -> Scalar {
        let _ = &self.secret; // the secret is only needed at setup time
        ctx.random_scalar(rng)
    }
}

/// First-move messages `(V, a, D)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirstMove {
    pub blinded_sig: GroupElement,
    pub a: TargetElement,
    pub d: GroupElement,
}

/// Prover-side session state; single use, one proof session each.
#[derive(Debug)]
pub struct ProverState {
    opening: Opening,
    v_blind: Scalar,
    s: Scalar,
    t: Scalar,
    mm: Scalar,
}

/// Responses `(z_rho, z_v, z_r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Responses {
    pub z_rho: Scalar,
    pub z_v: Scalar,
    pub z_r: Scalar,
}

/// Runs the prover's first move. Errors with [`Error::NotInSet`] when the
/// committed value has no table entry.
pub fn prove_first<R: RngCore>(
    ctx: &GroupContext,
    opening: &Opening,
    table: &MembershipTable,
    rng: &mut R,
) -> Result<(FirstMove, ProverState)> {
    let entry = table
        .entry(ctx, &opening.message)
        .ok_or(Error::NotInSet)?
        .clone();
    let v_blind = ctx.random_nonzero_scalar(rng);
    let s = ctx.random_scalar(rng);
    let t = ctx.random_scalar(rng);
    let mm = ctx.random_scalar(rng);
    let blinded_sig = ctx.exp(&entry, &v_blind);
    let e_vg = ctx.pair(&blinded_sig, ctx.generator())?;
    let a = ctx.target_mul(
        &ctx.target_exp(&e_vg, &ctx.scalar_neg(&s)),
        &ctx.target_exp(&ctx.pair_gg()?, &t),
    );
    let d = ctx.mul(&ctx.exp_g(&s), &ctx.exp_h(&mm));
    Ok((
        FirstMove { blinded_sig, a, d },
        ProverState {
            opening: opening.clone(),
            v_blind,
            s,
            t,
            mm,
        },
    ))
}

/// Prover's response to challenge `c`, all mod q.
pub fn respond(ctx: &GroupContext, state: &ProverState, c: &Scalar) -> Responses {
    Responses {
        z_rho: ctx.scalar_sub(&state.s, &ctx.scalar_mul(&state.opening.message, c)),
        z_v: ctx.scalar_sub(&state.t, &ctx.scalar_mul(&state.v_blind, c)),
        z_r: ctx.scalar_sub(&state.mm, &ctx.scalar_mul(&state.opening.randomness, c)),
    }
}

/// The verifier's two checks.
pub fn verify_transcript(
    ctx: &GroupContext,
    y: &GroupElement,
    commitment: &Commitment,
    first: &FirstMove,
    c: &Scalar,
    resp: &Responses,
) -> Result<bool> {
    if !ctx.is_member(&first.blinded_sig) || !ctx.is_member(&first.d) {
        return Ok(false);
    }
    // an identity V carries no blinded signature
    if first.blinded_sig == ctx.identity() {
        return Ok(false);
    }
    // D = C^c h^{z_r} g^{z_rho}
    let d_expected = ctx.mul(
        &ctx.mul(&ctx.exp(&commitment.0, c), &ctx.exp_h(&resp.z_r)),
        &ctx.exp_g(&resp.z_rho),
    );
    if d_expected != first.d {
        return Ok(false);
    }
    // a = e(V,y)^c * e(V,g)^{-z_rho} * e(g,g)^{z_v}
    let e_vy = ctx.pair(&first.blinded_sig, y)?;
    let e_vg = ctx.pair(&first.blinded_sig, ctx.generator())?;
    let a_expected = ctx.target_mul(
        &ctx.target_mul(
            &ctx.target_exp(&e_vy, c),
            &ctx.target_exp(&e_vg, &ctx.scalar_neg(&resp.z_rho)),
        ),
        &ctx.target_exp(&ctx.pair_gg()?, &resp.z_v),
    );
    Ok(a_expected == first.a)
}

/// Executes the three moves against a uniformly random challenge and reports
/// the verifier's decision. A prover whose committed value is outside the set
/// cannot form the first move and surfaces as `Err`.
pub fn run_interactive<R: RngCore>(
    ctx: &GroupContext,
    opening: &Opening,
    setup: &VerifierSetup,
    rng: &mut R,
) -> Result<bool> {
    let commitment = commit(ctx, &opening.message, &opening.randomness);
    let (first, state) = prove_first(ctx, opening, &setup.table, rng)?;
    let c = setup.challenge(ctx, rng);
    let resp = respond(ctx, &state, &c);
    verify_transcript(ctx, setup.public_key(), &commitment, &first, &c, &resp)
}

/// Special-soundness extractor: from two accepting transcripts sharing a
/// first move but with distinct challenges, recovers the opening.
pub fn extract_opening(
    ctx: &GroupContext,
    c1: &Scalar,
    resp1: &Responses,
    c2: &Scalar,
    resp2: &Responses,
) -> Result<Opening> {
    let dc = ctx.scalar_sub(c2, c1);
    let dc_inv = ctx.scalar_inv(&dc)?;
    Ok(Opening {
        message: ctx.scalar_mul(&ctx.scalar_sub(&resp1.z_rho, &resp2.z_rho), &dc_inv),
        randomness: ctx.scalar_mul(&ctx.scalar_sub(&resp1.z_r, &resp2.z_r), &dc_inv),
    })
}

/// Honest-verifier zero-knowledge simulator: produces a transcript for a
/// given challenge from public data only.
pub fn simulate_transcript<R: RngCore>(
    ctx: &GroupContext,
    y: &GroupElement,
    commitment: &Commitment,
    c: &Scalar,
    rng: &mut R,
) -> Result<(FirstMove, Responses)> {
    let resp = Responses {
        z_rho: ctx.random_scalar(rng),
        z_v: ctx.random_scalar(rng),
        z_r: ctx.random_scalar(rng),
    };
    let blinded_sig = ctx.exp_g(&ctx.random_nonzero_scalar(rng));
    let d = ctx.mul(
        &ctx.mul(&ctx.exp(&commitment.0, c), &ctx.exp_h(&resp.z_r)),
        &ctx.exp_g(&resp.z_rho),
    );
    let e_vy = ctx.pair(&blinded_sig, y)?;
    let e_vg = ctx.pair(&blinded_sig, ctx.generator())?;
    let a = ctx.target_mul(
        &ctx.target_mul(
            &ctx.target_exp(&e_vy, c),
            &ctx.target_exp(&e_vg, &ctx.scalar_neg(&resp.z_rho)),
        ),
        &ctx.target_exp(&ctx.pair_gg()?, &resp.z_v),
    );
    Ok((FirstMove { blinded_sig, a, d }, resp))
}

/// A non-interactive proof with the challenge derived by hashing all prior
/// messages and the statement; used for storable proof artifacts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipProof {
    pub first: FirstMove,
    pub challenge: Scalar,
    pub responses: Responses,
}

fn fiat_shamir_challenge(
    ctx: &GroupContext,
    y: &GroupElement,
    commitment: &Commitment,
    first: &FirstMove,
) -> Scalar {
    ctx.hash_to_scalar(
        DOM_FS,
        &[
            &ctx.element_to_bytes(&commitment.0),
            &ctx.element_to_bytes(y),
            &ctx.element_to_bytes(&first.blinded_sig),
            &ctx.target_to_bytes(&first.a),
            &ctx.element_to_bytes(&first.d),
        ],
    )
}

pub fn prove_noninteractive<R: RngCore>(
    ctx: &GroupContext,
    opening: &Opening,
    table: &MembershipTable,
    rng: &mut R,
) -> Result<MembershipProof> {
    let commitment = commit(ctx, &opening.message, &opening.randomness);
    let (first, state) = prove_first(ctx, opening, table, rng)?;
    let challenge = fiat_shamir_challenge(ctx, &table.y, &commitment, &first);
    let responses = respond(ctx, &state, &challenge);
    Ok(MembershipProof {
        first,
        challenge,
        responses,
    })
}

pub fn verify_noninteractive(
    ctx: &GroupContext,
    y: &GroupElement,
    commitment: &Commitment,
    proof: &MembershipProof,
) -> Result<bool> {
    if fiat_shamir_challenge(ctx, y, commitment, &proof.first) != proof.challenge {
        return Ok(false);
    }
    verify_transcript(
        ctx,
        y,
        commitment,
        &proof.first,
        &proof.challenge,
        &proof.responses,
    )
}

impl MembershipProof {
    /// Header plus length-prefixed fields in protocol order:
    /// V, a, D, c, z_rho, z_v, z_r.
    pub fn to_bytes(&self, ctx: &GroupContext) -> Vec<u8> {
        let mut out = Vec::new();
        ArtifactHeader::for_ctx(ArtifactKind::MembershipProof, ctx).write(&mut out);
        put_field(&mut out, &ctx.element_to_bytes(&self.first.blinded_sig));
        put_field(&mut out, &ctx.target_to_bytes(&self.first.a));
        put_field(&mut out, &ctx.element_to_bytes(&self.first.d));
        put_field(&mut out, &ctx.scalar_to_bytes(&self.challenge));
        put_field(&mut out, &ctx.scalar_to_bytes(&self.responses.z_rho));
        put_field(&mut out, &ctx.scalar_to_bytes(&self.responses.z_v));
        put_field(&mut out, &ctx.scalar_to_bytes(&self.responses.z_r));
        out
    }

    pub fn from_bytes(ctx: &GroupContext, bytes: &[u8]) -> Result<MembershipProof> {
        let mut r = Reader::new(bytes);
        ArtifactHeader::read(&mut r)?.check(ctx, ArtifactKind::MembershipProof)?;
        let blinded_sig = ctx.element_from_bytes(r.field()?)?;
        let a = ctx.target_from_bytes(r.field()?)?;
        let d = ctx.element_from_bytes(r.field()?)?;
        let challenge = ctx.scalar_from_bytes(r.field()?)?;
        let z_rho = ctx.scalar_from_bytes(r.field()?)?;
        let z_v = ctx.scalar_from_bytes(r.field()?)?;
        let z_r = ctx.scalar_from_bytes(r.field()?)?;
        r.finish()?;
        Ok(MembershipProof {
            first: FirstMove { blinded_sig, a, d },
            challenge,
            responses: Responses { z_rho, z_v, z_r },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::SecurityProfile;
    use crate::rng::derive_rng;
    use crate::GroupContext;

    fn toy_mock() -> GroupContext {
        GroupContext::setup_mock(SecurityProfile::Toy, b"zkp").unwrap()
    }

    #[test]
    fn toy_table_entries() {
        let ctx = toy_mock();
        let set = vec![ctx.scalar_from_u64(2), ctx.scalar_from_u64(5)];
        let setup = setup_verifier_with_secret(&ctx, &set, ctx.scalar_from_u64(4)).unwrap();
        // 1/(4+2) = 2 and 1/(4+5) = 5 mod 11
        assert_eq!(
            setup.table.entry(&ctx, &ctx.scalar_from_u64(2)).unwrap(),
            &ctx.exp_g(&ctx.scalar_from_u64(2))
        );
        assert_eq!(
            setup.table.entry(&ctx, &ctx.scalar_from_u64(5)).unwrap(),
            &ctx.exp_g(&ctx.scalar_from_u64(5))
        );
    }

    #[test]
    fn empty_set_and_duplicates() {
        let ctx = toy_mock();
        let mut rng = derive_rng(b"zkp", "setup");
        let setup = setup_verifier(&ctx, &[], &mut rng).unwrap();
        assert!(setup.table.is_empty());
        let dup = vec![ctx.scalar_from_u64(3), ctx.scalar_from_u64(3)];
        assert!(matches!(
            setup_verifier(&ctx, &dup, &mut rng),
            Err(Error::DuplicateSetElement)
        ));
    }

    #[test]
    fn setup_redraws_past_zero_denominators() {
        let ctx = toy_mock();
        // with elements 0..10 every secret except x=1 hits x+i = 0 mod 11,
        // so the redraw loop must land on exactly x=1
        let set: Vec<_> = (0u64..10).map(|i| ctx.scalar_from_u64(i)).collect();
        let mut rng = derive_rng(b"zkp", "redraw");
        let setup = setup_verifier(&ctx, &set, &mut rng).unwrap();
        assert_eq!(setup.public_key(), &ctx.exp_g(&ctx.scalar_from_u64(1)));
    }

    #[test]
    fn honest_run_verifies_and_zero_challenge_reveals_first_move_randomness() {
        let ctx = toy_mock();
        let mut rng = derive_rng(b"zkp", "honest");
        let set: Vec<_> = [2u64, 5, 7].iter().map(|i| ctx.scalar_from_u64(*i)).collect();
        let setup = setup_verifier(&ctx, &set, &mut rng).unwrap();
        let opening = Opening {
            message: ctx.scalar_from_u64(5),
            randomness: ctx.scalar_from_u64(3),
        };
        let commitment = commit(&ctx, &opening.message, &opening.randomness);
        let (first, state) = prove_first(&ctx, &opening, &setup.table, &mut rng).unwrap();
        // zero challenge echoes (s, t, mm)
        let resp0 = respond(&ctx, &state, &Scalar::zero());
        assert_eq!(resp0.z_rho, state.s);
        assert_eq!(resp0.z_v, state.t);
        assert_eq!(resp0.z_r, state.mm);
        let c = ctx.scalar_from_u64(6);
        let resp = respond(&ctx, &state, &c);
        assert!(
            verify_transcript(&ctx, setup.public_key(), &commitment, &first, &c, &resp).unwrap()
        );
        // mutated response fails
        let mut bad = resp.clone();
        bad.z_rho = ctx.scalar_add(&bad.z_rho, &ctx.scalar_from_u64(1));
        assert!(
            !verify_transcript(&ctx, setup.public_key(), &commitment, &first, &c, &bad).unwrap()
        );
        // wrong commitment fails
        let other = commit(&ctx, &ctx.scalar_from_u64(2), &ctx.scalar_from_u64(3));
        assert!(!verify_transcript(&ctx, setup.public_key(), &other, &first, &c, &resp).unwrap());
    }

    #[test]
    fn message_outside_set_cannot_prove() {
        let ctx = toy_mock();
        let mut rng = derive_rng(b"zkp", "outside");
        let set = vec![ctx.scalar_from_u64(2)];
        let setup = setup_verifier(&ctx, &set, &mut rng).unwrap();
        let opening = Opening {
            message: ctx.scalar_from_u64(3),
            randomness: ctx.scalar_from_u64(1),
        };
        assert!(matches!(
            prove_first(&ctx, &opening, &setup.table, &mut rng),
            Err(Error::NotInSet)
        ));
    }

    #[test]
    fn fresh_blinding_gives_distinct_first_moves() {
        let ctx = GroupContext::setup_mock(SecurityProfile::Test, b"zkp").unwrap();
        let mut rng = derive_rng(b"zkp", "fresh");
        let set: Vec<_> = (0u64..4).map(|i| ctx.scalar_from_u64(i * 7 + 1)).collect();
        let setup = setup_verifier(&ctx, &set, &mut rng).unwrap();
        let opening = Opening {
            message: set[1].clone(),
            randomness: ctx.random_scalar(&mut rng),
        };
        let (f1, _) = prove_first(&ctx, &opening, &setup.table, &mut rng).unwrap();
        let (f2, _) = prove_first(&ctx, &opening, &setup.table, &mut rng).unwrap();
        assert_ne!(f1, f2);
    }

    #[test]
    fn interactive_completeness_including_singleton_set() {
        let ctx = toy_mock();
        let mut rng = derive_rng(b"zkp", "complete");
        let set = vec![ctx.scalar_from_u64(9)];
        let setup = setup_verifier(&ctx, &set, &mut rng).unwrap();
        let opening = Opening {
            message: ctx.scalar_from_u64(9),
            randomness: ctx.scalar_from_u64(4),
        };
        for _ in 0..100 {
            assert!(run_interactive(&ctx, &opening, &setup, &mut rng).unwrap());
        }
    }

    #[test]
    fn extractor_recovers_the_opening() {
        let ctx = toy_mock();
        let mut rng = derive_rng(b"zkp", "extract");
        let set: Vec<_> = [2u64, 5].iter().map(|i| ctx.scalar_from_u64(*i)).collect();
        let setup = setup_verifier(&ctx, &set, &mut rng).unwrap();
        let opening = Opening {
            message: ctx.scalar_from_u64(2),
            randomness: ctx.scalar_from_u64(8),
        };
        let commitment = commit(&ctx, &opening.message, &opening.randomness);
        let (first, state) = prove_first(&ctx, &opening, &setup.table, &mut rng).unwrap();
        let (c1, c2) = (ctx.scalar_from_u64(3), ctx.scalar_from_u64(9));
        let r1 = respond(&ctx, &state, &c1);
        let r2 = respond(&ctx, &state, &c2);
        assert!(verify_transcript(&ctx, setup.public_key(), &commitment, &first, &c1, &r1).unwrap());
        assert!(verify_transcript(&ctx, setup.public_key(), &commitment, &first, &c2, &r2).unwrap());
        let extracted = extract_opening(&ctx, &c1, &r1, &c2, &r2).unwrap();
        assert_eq!(extracted, opening);
        assert!(set.contains(&extracted.message));
    }

    #[test]
    fn noninteractive_proof_round_trips_and_verifies() {
        let ctx = GroupContext::setup_mock(SecurityProfile::Test, b"zkp").unwrap();
        let mut rng = derive_rng(b"zkp", "fs");
        let set: Vec<_> = (0u64..8).map(|i| ctx.scalar_from_u64(i * 13 + 2)).collect();
        let setup = setup_verifier(&ctx, &set, &mut rng).unwrap();
        let opening = Opening {
            message: set[5].clone(),
            randomness: ctx.random_scalar(&mut rng),
        };
        let commitment = commit(&ctx, &opening.message, &opening.randomness);
        let proof = prove_noninteractive(&ctx, &opening, &setup.table, &mut rng).unwrap();
        assert!(verify_noninteractive(&ctx, setup.public_key(), &commitment, &proof).unwrap());
        let bytes = proof.to_bytes(&ctx);
        let parsed = MembershipProof::from_bytes(&ctx, &bytes).unwrap();
        assert_eq!(parsed, proof);
        // tampered challenge fails
        let mut forged = proof.clone();
        forged.challenge = ctx.scalar_add(&forged.challenge, &ctx.scalar_from_u64(1));
        assert!(!verify_noninteractive(&ctx, setup.public_key(), &commitment, &forged).unwrap());
        // wrong-context parse is refused
        let toy = toy_mock();
        assert!(matches!(
            MembershipProof::from_bytes(&toy, &bytes),
            Err(Error::HeaderMismatch(_))
        ));
    }
}
