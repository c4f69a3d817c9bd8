//! Polling-booth party state: the polling officer's desk and the EVM voting
//! session, plus booth close-out after polling ends.
//!
//! The EVM session is a strict state machine: the vote commitment must be
//! produced and handed out before any token data can be scanned, and a vote
//! is recorded only after the voter confirms the printed modular sum.

use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

use crate::commit::{commit, verify_opening, Commitment, Opening};
use crate::group::{GroupContext, GroupElement, Scalar};
use crate::sig::{
    bsign, derive_nonce, hybrid_encrypt, record_hash, ring_sign, verify, xor_fold, BlindingPair,
    HybridCiphertext, KeyPair, RecordHash, RingSig, SchnorrSig,
};
use crate::token::{token_certificate_message, TokenChit, TokenCommitments, TokenSecrets};
use crate::wire::{put_field, Reader};
use crate::{Error, Result};

// ---- polling officer desk ---------------------------------------------------

/// One acknowledgment slot per freshly drawn token.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AckSlot {
    #[serde(with = "crate::hexbytes")]
    pub brid: Vec<u8>,
    ephemeral_sk: Scalar,
    nonce: Scalar,
    pub acknowledged: bool,
    pub signature: Option<Scalar>,
}

/// The polling officer's machine for one booth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoDesk {
    pub booth_label: String,
    /// Index of this officer in the published officer ring.
    pub member_index: usize,
    signing: KeyPair,
    nonce_seed: [u8; 32],
    /// brids of tokens delivered to this booth's box.
    box_ids: HashSet<Vec<u8>>,
    used: HashSet<Vec<u8>>,
    audited: HashSet<Vec<u8>>,
    slots: Vec<AckSlot>,
}

impl PoDesk {
    pub fn new(booth_label: String, member_index: usize, signing: KeyPair, nonce_seed: [u8; 32]) -> Self {
        PoDesk {
            booth_label,
            member_index,
            signing,
            nonce_seed,
            box_ids: HashSet::new(),
            used: HashSet::new(),
            audited: HashSet::new(),
            slots: Vec::new(),
        }
    }

    pub fn public(&self) -> &GroupElement {
        &self.signing.public
    }

    /// Pre-generation: nonce commitments for the booth's `r_p` list.
    pub fn nonce_commitments(&self, ctx: &GroupContext, r_ps: &[Scalar]) -> Vec<GroupElement> {
        r_ps.iter()
            .map(|r_p| ctx.exp_g(&derive_nonce(ctx, &self.nonce_seed, r_p)))
            .collect()
    }

    /// Records the brids of the tokens placed in this booth's box.
    pub fn register_box(&mut self, brids: impl IntoIterator<Item = Vec<u8>>) {
        self.box_ids.extend(brids);
    }

    pub fn mark_audited(&mut self, brid: &[u8]) {
        self.audited.insert(brid.to_vec());
    }

    /// Accepts a freshly drawn token's chit after identity verification.
    /// Re-used chits and audited tokens are rejected (chain-voting defense).
    pub fn receive_chit(
        &mut self,
        ctx: &GroupContext,
        chit: &TokenChit,
        identity_verified: bool,
    ) -> Result<usize> {
        if !identity_verified {
            return Err(Error::IdentityUnverified);
        }
        if !self.box_ids.contains(&chit.brid) {
            return Err(Error::TokenRejected(
                "token does not belong to this booth's box".into(),
            ));
        }
        if self.used.contains(&chit.brid) || self.audited.contains(&chit.brid) {
            return Err(Error::TokenNotFresh);
        }
        self.used.insert(chit.brid.clone());
        let ephemeral_sk = ctx.scalar_mul(&self.signing.secret, &chit.r_p);
        let nonce = derive_nonce(ctx, &self.nonce_seed, &chit.r_p);
        self.slots.push(AckSlot {
            brid: chit.brid.clone(),
            ephemeral_sk,
            nonce,
            acknowledged: false,
            signature: None,
        });
        Ok(self.slots.len() - 1)
    }

    /// The voter's confirmation arriving on the officer's channel: blind-sign
    /// the acknowledgment for this slot.
    pub fn record_ack(&mut self, ctx: &GroupContext, slot: usize) -> Result<()> {
        let slot = self
            .slots
            .get_mut(slot)
            .ok_or_else(|| Error::TokenRejected("unknown acknowledgment slot".into()))?;
        let sig = bsign(ctx, &slot.ephemeral_sk, &slot.nonce, &slot.brid)?;
        slot.acknowledged = true;
        slot.signature = Some(sig);
        Ok(())
    }

    /// The printouts handed to the EVM after polling: one `(brid, sigma')`
    /// per acknowledged voter.
    pub fn ack_printouts(&self) -> Vec<(Vec<u8>, Scalar)> {
        self.slots
            .iter()
            .filter_map(|s| s.signature.clone().map(|sig| (s.brid.clone(), sig)))
            .collect()
    }

    pub fn acknowledged_count(&self) -> u32 {
        self.slots.iter().filter(|s| s.acknowledged).count() as u32
    }

    /// Ring-signs the booth's acknowledged-vote count for BB1.
    pub fn sign_count<R: RngCore>(
        &self,
        ctx: &GroupContext,
        po_ring: &[GroupElement],
        n_k: u32,
        rng: &mut R,
    ) -> Result<RingSig> {
        ring_sign(
            ctx,
            po_ring,
            self.member_index,
            &self.signing.secret,
            &count_message(n_k),
            rng,
        )
    }
}

// ---- message encodings shared with verification -----------------------------

pub fn receipt_message(ctx: &GroupContext, c_rid: &Commitment, c_v: &Commitment, p: &SumOpening) -> Vec<u8> {
    let mut msg = b"receipt".to_vec();
    msg.extend_from_slice(&c_rid.to_bytes(ctx));
    msg.extend_from_slice(&c_v.to_bytes(ctx));
    msg.extend_from_slice(&p.w.to_bytes_be());
    msg.extend_from_slice(&p.w_prime.to_be_bytes());
    msg.extend_from_slice(&ctx.scalar_to_bytes(&p.r_w));
    msg
}

pub fn record_hash_message(h: &RecordHash) -> Vec<u8> {
    let mut msg = b"record-hash".to_vec();
    msg.extend_from_slice(&h.0);
    msg
}

pub fn booth_hash_message(h_k: &RecordHash) -> Vec<u8> {
    let mut msg = b"booth-hash".to_vec();
    msg.extend_from_slice(&h_k.0);
    msg
}

pub fn count_message(n_k: u32) -> Vec<u8> {
    let mut msg = b"booth-count".to_vec();
    msg.extend_from_slice(&n_k.to_be_bytes());
    msg
}

// ---- the proof printed on the receipt ---------------------------------------

/// The opening `P = (w, w', r_w)` of `C_u * C_v`: the integer sum `w = u + v`,
/// its residue `w' = w mod m`, and the combined randomness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SumOpening {
    #[serde(with = "crate::hexbig")]
    pub w: BigUint,
    pub w_prime: u32,
    pub r_w: Scalar,
}

/// What the voter leaves the booth with: the token remnant and the EVM
/// receipt, tied together by the same `C_rid`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoterReceipt {
    pub token_part: TokenCommitments,
    pub evm_part: EvmReceipt,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvmReceipt {
    pub c_rid: Commitment,
    pub c_v: Commitment,
    pub proof: SumOpening,
    pub mu_receipt: RingSig,
}

/// The optional VVPAT slip: a plain record sink with no protocol effect.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VvpatSlip {
    pub rid: Scalar,
    pub vote: u32,
}

/// What a completed session hands back.
#[derive(Debug, Clone)]
pub struct SessionOutput {
    pub receipt: VoterReceipt,
    pub vvpat: VvpatSlip,
}

// ---- the encrypted per-vote record -------------------------------------------

/// Everything the EVM encrypts to the election authority for one vote: the
/// token and session secrets plus the issued public artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordPayload {
    pub rid: Scalar,
    pub u: Scalar,
    pub vote: u32,
    pub blinding: BlindingPair,
    pub r_rid: Scalar,
    pub r_u: Scalar,
    pub r_v: Scalar,
    pub ephemeral_pk: GroupElement,
    pub c_rid: Commitment,
    pub c_u: Commitment,
    pub c_v: Commitment,
    pub proof: SumOpening,
    pub h: RecordHash,
    pub lambda: SchnorrSig,
    pub mu_receipt: RingSig,
    pub mu_h: RingSig,
}

impl RecordPayload {
    pub fn to_bytes(&self, ctx: &GroupContext) -> Vec<u8> {
        let mut out = Vec::new();
        put_field(&mut out, &ctx.scalar_to_bytes(&self.rid));
        put_field(&mut out, &ctx.scalar_to_bytes(&self.u));
        out.extend_from_slice(&self.vote.to_be_bytes());
        put_field(&mut out, &ctx.scalar_to_bytes(&self.blinding.alpha));
        put_field(&mut out, &ctx.scalar_to_bytes(&self.blinding.beta));
        put_field(&mut out, &ctx.scalar_to_bytes(&self.r_rid));
        put_field(&mut out, &ctx.scalar_to_bytes(&self.r_u));
        put_field(&mut out, &ctx.scalar_to_bytes(&self.r_v));
        put_field(&mut out, &ctx.element_to_bytes(&self.ephemeral_pk));
        put_field(&mut out, &self.c_rid.to_bytes(ctx));
        put_field(&mut out, &self.c_u.to_bytes(ctx));
        put_field(&mut out, &self.c_v.to_bytes(ctx));
        put_field(&mut out, &self.proof.w.to_bytes_be());
        out.extend_from_slice(&self.proof.w_prime.to_be_bytes());
        put_field(&mut out, &ctx.scalar_to_bytes(&self.proof.r_w));
        out.extend_from_slice(&self.h.0);
        put_field(&mut out, &self.lambda.to_bytes(ctx));
        put_field(&mut out, &self.mu_receipt.to_bytes(ctx));
        put_field(&mut out, &self.mu_h.to_bytes(ctx));
        out
    }

    pub fn from_bytes(ctx: &GroupContext, bytes: &[u8]) -> Result<RecordPayload> {
        let mut r = Reader::new(bytes);
        let rid = ctx.scalar_from_bytes(r.field()?)?;
        let u = ctx.scalar_from_bytes(r.field()?)?;
        let vote = r.u32()?;
        let alpha = ctx.scalar_from_bytes(r.field()?)?;
        let beta = ctx.scalar_from_bytes(r.field()?)?;
        let r_rid = ctx.scalar_from_bytes(r.field()?)?;
        let r_u = ctx.scalar_from_bytes(r.field()?)?;
        let r_v = ctx.scalar_from_bytes(r.field()?)?;
        let ephemeral_pk = ctx.element_from_bytes(r.field()?)?;
        let c_rid = Commitment(ctx.element_from_bytes(r.field()?)?);
        let c_u = Commitment(ctx.element_from_bytes(r.field()?)?);
        let c_v = Commitment(ctx.element_from_bytes(r.field()?)?);
        let w = BigUint::from_bytes_be(r.field()?);
        let w_prime = r.u32()?;
        let r_w = ctx.scalar_from_bytes(r.field()?)?;
        let h = RecordHash(r.fixed(32)?.try_into().unwrap());
        let lambda = SchnorrSig::from_bytes(ctx, r.field()?)?;
        let mu_receipt = RingSig::from_bytes(ctx, r.field()?)?;
        let mu_h = RingSig::from_bytes(ctx, r.field()?)?;
        r.finish()?;
        Ok(RecordPayload {
            rid,
            u,
            vote,
            blinding: BlindingPair { alpha, beta },
            r_rid,
            r_u,
            r_v,
            ephemeral_pk,
            c_rid,
            c_u,
            c_v,
            proof: SumOpening { w, w_prime, r_w },
            h,
            lambda,
            mu_receipt,
            mu_h,
        })
    }
}

// ---- the EVM ----------------------------------------------------------------

/// One encrypted record held by the EVM, indexed by brid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvmStoredRecord {
    #[serde(with = "crate::hexbytes")]
    pub brid: Vec<u8>,
    pub h: RecordHash,
    pub ciphertext: HybridCiphertext,
    pub ack: Option<Scalar>,
}

/// The EVM of one booth: records votes, emits receipts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvmBooth {
    pub booth_label: String,
    /// Index of this EVM in the published EVM ring.
    pub member_index: usize,
    signing: KeyPair,
    evm_ring: Vec<GroupElement>,
    ea_sign_public: GroupElement,
    ea_enc_public: GroupElement,
    m: u32,
    records: Vec<EvmStoredRecord>,
    pub aborted_sessions: u32,
}

impl EvmBooth {
    pub fn new(
        booth_label: String,
        member_index: usize,
        signing: KeyPair,
        evm_ring: Vec<GroupElement>,
        ea_sign_public: GroupElement,
        ea_enc_public: GroupElement,
        m: u32,
    ) -> Self {
        EvmBooth {
            booth_label,
            member_index,
            signing,
            evm_ring,
            ea_sign_public,
            ea_enc_public,
            m,
            records: Vec::new(),
            aborted_sessions: 0,
        }
    }

    pub fn public(&self) -> &GroupElement {
        &self.signing.public
    }

    pub fn candidates(&self) -> u32 {
        self.m
    }

    pub fn records(&self) -> &[EvmStoredRecord] {
        &self.records
    }

    /// Starts a voting session; the exclusive borrow enforces one session
    /// per EVM at a time.
    pub fn start_session(&mut self) -> EvmSession<'_> {
        EvmSession {
            booth: self,
            phase: Phase::AwaitVote,
            vote: None,
            scanned: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    AwaitVote,
    VoteCommitted,
    TokenScanned,
    Done,
}

impl Phase {
    fn name(&self) -> &'static str {
        match self {
            Phase::AwaitVote => "await-vote",
            Phase::VoteCommitted => "vote-committed",
            Phase::TokenScanned => "token-scanned",
            Phase::Done => "done",
        }
    }
}

struct ScannedToken {
    commitments: TokenCommitments,
    rid: Scalar,
    r_rid: Scalar,
    u: Scalar,
    r_u: Scalar,
    blinding: BlindingPair,
    ephemeral_pk: GroupElement,
    brid: Vec<u8>,
    proof: SumOpening,
}

/// A single voter's session at the EVM.
pub struct EvmSession<'a> {
    booth: &'a mut EvmBooth,
    phase: Phase,
    vote: Option<(u32, Scalar, Commitment)>,
    scanned: Option<ScannedToken>,
}

impl<'a> EvmSession<'a> {
    /// Step 1: the voter presses a candidate button; the EVM prints `C_v`
    /// before it has seen any token data.
    pub fn cast_vote<R: RngCore>(
        &mut self,
        ctx: &GroupContext,
        vote: u32,
        rng: &mut R,
    ) -> Result<Commitment> {
        if self.phase != Phase::AwaitVote {
            return Err(Error::PhaseOrder {
                action: "cast vote",
                phase: self.phase.name(),
            });
        }
        if vote >= self.booth.m {
            return Err(Error::VoteOutOfRange {
                v: vote,
                m: self.booth.m,
            });
        }
        let r_v = ctx.random_scalar(rng);
        let c_v = commit(ctx, &ctx.scalar_from_u64(vote as u64), &r_v);
        self.vote = Some((vote, r_v, c_v.clone()));
        self.phase = Phase::VoteCommitted;
        Ok(c_v)
    }

    /// Step 2: the token is scanned. The EVM checks the authority signature
    /// and both commitment openings, then computes and prints the proof
    /// `P = (w, w', r_w)`. The secrets part is destroyed here.
    pub fn scan_token(
        &mut self,
        ctx: &GroupContext,
        commitments: TokenCommitments,
        secrets: TokenSecrets,
    ) -> Result<SumOpening> {
        if self.phase != Phase::VoteCommitted {
            secrets.destroy();
            return Err(Error::PhaseOrder {
                action: "scan token",
                phase: self.phase.name(),
            });
        }
        if !verify(
            ctx,
            &self.booth.ea_sign_public,
            &token_certificate_message(ctx, &commitments.c_rid, &commitments.c_u),
            &commitments.lambda,
        ) {
            secrets.destroy();
            self.phase = Phase::Done;
            self.booth.aborted_sessions += 1;
            return Err(Error::SignatureInvalid("token certificate".into()));
        }
        let rid_ok = verify_opening(
            ctx,
            &commitments.c_rid,
            &Opening {
                message: secrets.rid.clone(),
                randomness: secrets.r_rid.clone(),
            },
        );
        let u_ok = verify_opening(
            ctx,
            &commitments.c_u,
            &Opening {
                message: secrets.u.clone(),
                randomness: secrets.r_u.clone(),
            },
        );
        let u_prime_ok =
            BigUint::from(secrets.u_prime) == secrets.u.value() % BigUint::from(self.booth.m);
        if !rid_ok || !u_ok || !u_prime_ok {
            secrets.destroy();
            self.phase = Phase::Done;
            self.booth.aborted_sessions += 1;
            return Err(Error::TokenRejected(format!(
                "commitment checks failed (rid: {rid_ok}, u: {u_ok}, u': {u_prime_ok})"
            )));
        }
        let (vote, r_v, _) = self.vote.as_ref().expect("vote set in VoteCommitted");
        // w is the plain integer sum; only its residues matter downstream
        let w = secrets.u.value() + BigUint::from(*vote);
        let w_prime = (&w % BigUint::from(self.booth.m))
            .to_u64_digits()
            .first()
            .copied()
            .unwrap_or(0) as u32;
        let r_w = ctx.scalar_add(&secrets.r_u, r_v);
        let proof = SumOpening { w, w_prime, r_w };
        self.scanned = Some(ScannedToken {
            commitments,
            rid: secrets.rid.clone(),
            r_rid: secrets.r_rid.clone(),
            u: secrets.u.clone(),
            r_u: secrets.r_u.clone(),
            blinding: secrets.blinding.clone(),
            ephemeral_pk: secrets.ephemeral_pk.clone(),
            brid: secrets.brid.clone(),
            proof: proof.clone(),
        });
        secrets.destroy();
        self.phase = Phase::TokenScanned;
        Ok(proof)
    }

    /// The printed `w'` the voter is asked to confirm.
    pub fn displayed_w_prime(&self) -> Option<u32> {
        self.scanned.as_ref().map(|s| s.proof.w_prime)
    }

    /// Step 3: the voter accepts or declines the printed sum. Declining
    /// aborts the session without a recorded vote. Accepting signs the
    /// receipt, stores the encrypted record, and returns the printed papers.
    pub fn acknowledge<R: RngCore>(
        &mut self,
        ctx: &GroupContext,
        accepted: bool,
        rng: &mut R,
    ) -> Result<SessionOutput> {
        if self.phase != Phase::TokenScanned {
            return Err(Error::PhaseOrder {
                action: "acknowledge",
                phase: self.phase.name(),
            });
        }
        self.phase = Phase::Done;
        if !accepted {
            self.booth.aborted_sessions += 1;
            self.scanned = None;
            return Err(Error::AckDeclined);
        }
        let scanned = self.scanned.take().expect("token scanned");
        let (vote, r_v, c_v) = self.vote.take().expect("vote cast");

        let mu_receipt = ring_sign(
            ctx,
            &self.booth.evm_ring,
            self.booth.member_index,
            &self.booth.signing.secret,
            &receipt_message(ctx, &scanned.commitments.c_rid, &c_v, &scanned.proof),
            rng,
        )?;
        let h = record_hash(&scanned.rid, vote, self.booth.m)?;
        let mu_h = ring_sign(
            ctx,
            &self.booth.evm_ring,
            self.booth.member_index,
            &self.booth.signing.secret,
            &record_hash_message(&h),
            rng,
        )?;
        let payload = RecordPayload {
            rid: scanned.rid.clone(),
            u: scanned.u.clone(),
            vote,
            blinding: scanned.blinding.clone(),
            r_rid: scanned.r_rid.clone(),
            r_u: scanned.r_u.clone(),
            r_v,
            ephemeral_pk: scanned.ephemeral_pk.clone(),
            c_rid: scanned.commitments.c_rid.clone(),
            c_u: scanned.commitments.c_u.clone(),
            c_v: c_v.clone(),
            proof: scanned.proof.clone(),
            h,
            lambda: scanned.commitments.lambda.clone(),
            mu_receipt: mu_receipt.clone(),
            mu_h,
        };
        let ciphertext = hybrid_encrypt(ctx, &self.booth.ea_enc_public, &payload.to_bytes(ctx), rng);
        self.booth.records.push(EvmStoredRecord {
            brid: scanned.brid.clone(),
            h,
            ciphertext,
            ack: None,
        });
        Ok(SessionOutput {
            receipt: VoterReceipt {
                token_part: scanned.commitments.clone(),
                evm_part: EvmReceipt {
                    c_rid: scanned.commitments.c_rid.clone(),
                    c_v,
                    proof: scanned.proof.clone(),
                    mu_receipt,
                },
            },
            vvpat: VvpatSlip {
                rid: scanned.rid.clone(),
                vote,
            },
        })
    }
}

// ---- booth close-out ---------------------------------------------------------

/// The consolidated per-booth ledger after polling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoothLedger {
    pub booth_label: String,
    /// Acknowledged records ready for collection.
    pub records: Vec<EvmStoredRecord>,
    /// Records without an officer acknowledgment: discarded but flagged.
    pub flagged_unacknowledged: Vec<EvmStoredRecord>,
    /// Officer printouts that matched no stored record.
    #[serde(with = "hexvecs")]
    pub flagged_unmatched: Vec<Vec<u8>>,
    pub h_k: RecordHash,
    pub n_k: u32,
    pub mu_h_k: RingSig,
}

mod hexvecs {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &[Vec<u8>],
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(v.iter().map(hex::encode))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Vec<Vec<u8>>, D::Error> {
        let strings = Vec::<String>::deserialize(deserializer)?;
        strings
            .into_iter()
            .map(|s| hex::decode(&s).map_err(D::Error::custom))
            .collect()
    }
}

/// After polling: attach the officer's blinded acknowledgments to the EVM's
/// records, discard-but-flag the unacknowledged, and compute the booth
/// aggregate `H_k` and count `N_k`, signed by the EVM.
pub fn close_booth<R: RngCore>(
    ctx: &GroupContext,
    booth: &EvmBooth,
    po_printouts: &[(Vec<u8>, Scalar)],
    rng: &mut R,
) -> Result<BoothLedger> {
    let mut by_brid: HashMap<&[u8], &EvmStoredRecord> = booth
        .records
        .iter()
        .map(|r| (r.brid.as_slice(), r))
        .collect();
    let mut records = Vec::new();
    let mut flagged_unmatched = Vec::new();
    for (brid, sig) in po_printouts {
        match by_brid.remove(brid.as_slice()) {
            Some(record) => {
                let mut record = record.clone();
                record.ack = Some(sig.clone());
                records.push(record);
            }
            None => flagged_unmatched.push(brid.clone()),
        }
    }
    let flagged_unacknowledged: Vec<_> = by_brid.into_values().cloned().collect();
    let h_k = xor_fold(&records.iter().map(|r| r.h).collect::<Vec<_>>());
    let n_k = records.len() as u32;
    let mu_h_k = ring_sign(
        ctx,
        &booth.evm_ring,
        booth.member_index,
        &booth.signing.secret,
        &booth_hash_message(&h_k),
        rng,
    )?;
    Ok(BoothLedger {
        booth_label: booth.booth_label.clone(),
        records,
        flagged_unacknowledged,
        flagged_unmatched,
        h_k,
        n_k,
        mu_h_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commit::combine;
    use crate::group::SecurityProfile;
    use crate::rng::derive_rng;
    use crate::sig::{blind, keygen, sign};
    use crate::token::Token;
    use crate::GroupContext;
    use rand_chacha::ChaCha20Rng;

    struct Fixture {
        ctx: GroupContext,
        ea_sign: KeyPair,
        ea_enc: KeyPair,
        po: PoDesk,
        evm: EvmBooth,
        rng: ChaCha20Rng,
    }

    fn fixture(tag: &str) -> Fixture {
        let ctx = GroupContext::setup_group(SecurityProfile::Test, b"booth").unwrap();
        let mut rng = derive_rng(b"booth-fixture", tag);
        let ea_sign = keygen(&ctx, &mut rng);
        let ea_enc = keygen(&ctx, &mut rng);
        let po_keys = keygen(&ctx, &mut rng);
        let po = PoDesk::new("booth-0".into(), 0, po_keys, [7u8; 32]);
        let evm_keys = keygen(&ctx, &mut rng);
        let evm_ring = vec![evm_keys.public.clone()];
        let evm = EvmBooth::new(
            "booth-0".into(),
            0,
            evm_keys,
            evm_ring,
            ea_sign.public.clone(),
            ea_enc.public.clone(),
            5,
        );
        Fixture {
            ctx,
            ea_sign,
            ea_enc,
            po,
            evm,
            rng,
        }
    }

    /// Builds one token with chosen rid and u, wired to the fixture's PO.
    fn make_token(f: &mut Fixture, rid_v: u64, u_v: u64) -> Token {
        let ctx = &f.ctx;
        let rid = ctx.scalar_from_u64(rid_v);
        let u = ctx.scalar_from_u64(u_v);
        let r_rid = ctx.random_scalar(&mut f.rng);
        let r_u = ctx.random_scalar(&mut f.rng);
        let c_rid = commit(ctx, &rid, &r_rid);
        let c_u = commit(ctx, &u, &r_u);
        let r_p = ctx.random_nonzero_scalar(&mut f.rng);
        let ephemeral_pk = ctx.exp(f.po.public(), &r_p);
        let nonce_commitment = f.po.nonce_commitments(ctx, std::slice::from_ref(&r_p))[0].clone();
        let blinding = BlindingPair::random(ctx, &mut f.rng);
        let brid = blind(ctx, &rid, &blinding, &ephemeral_pk, &nonce_commitment);
        let lambda = sign(
            ctx,
            &f.ea_sign.secret,
            &token_certificate_message(ctx, &c_rid, &c_u),
            &mut f.rng,
        );
        let token = Token::from_parts(
            crate::token::TokenCommitments { c_rid, c_u, lambda },
            TokenSecrets {
                r_rid,
                r_u,
                rid,
                u,
                u_prime: (u_v % 5) as u32,
                brid: brid.clone(),
                blinding,
                ephemeral_pk,
                nonce_commitment,
            },
            TokenChit {
                r_p,
                brid: brid.clone(),
            },
        );
        f.po.register_box([brid]);
        token
    }

    fn run_session(f: &mut Fixture, token: &mut Token, vote: u32) -> Result<SessionOutput> {
        let chit = token.tear_chit()?;
        let slot = f.po.receive_chit(&f.ctx, &chit, true)?;
        let ctx = f.ctx.clone();
        let mut session = f.evm.start_session();
        session.cast_vote(&ctx, vote, &mut f.rng)?;
        let secrets = token.take_secrets()?;
        session.scan_token(&ctx, token.commitments.clone(), secrets)?;
        let out = session.acknowledge(&ctx, true, &mut f.rng)?;
        f.po.record_ack(&ctx, slot)?;
        Ok(out)
    }

    #[test]
    fn session_arithmetic_matches_the_worked_example() {
        // m=5, u=9 (u'=4), v=3: w=12, w'=2, and (4+3) mod 5 = 2
        let mut f = fixture("arith");
        let mut token = make_token(&mut f, 1234, 9);
        let u_prime = token.secrets().unwrap().u_prime;
        assert_eq!(u_prime, 4);
        let out = run_session(&mut f, &mut token, 3).unwrap();
        let p = &out.receipt.evm_part.proof;
        assert_eq!(p.w, 12u32.into());
        assert_eq!(p.w_prime, 2);
        assert_eq!((u_prime + 3) % 5, p.w_prime);
        // the session left no readable secrets behind
        assert!(token.secrets().is_none());
        assert!(f.evm.records().len() == 1);
    }

    #[test]
    fn zero_vote_zero_obfuscation() {
        let mut f = fixture("zeros");
        let mut token = make_token(&mut f, 77, 0);
        let out = run_session(&mut f, &mut token, 0).unwrap();
        assert_eq!(out.receipt.evm_part.proof.w_prime, 0);
    }

    #[test]
    fn commitment_sum_invariant_holds_for_random_sessions() {
        let mut f = fixture("invariant");
        for i in 0..40u64 {
            let u_v = (i * 13) % 19;
            let vote = (i % 5) as u32;
            let mut token = make_token(&mut f, 1000 + i, u_v);
            let c_u = token.commitments.c_u.clone();
            let out = run_session(&mut f, &mut token, vote).unwrap();
            let p = &out.receipt.evm_part.proof;
            let combined = combine(&f.ctx, &c_u, &out.receipt.evm_part.c_v).unwrap();
            let expected = commit(
                &f.ctx,
                &f.ctx.scalar_from_biguint(p.w.clone()),
                &p.r_w,
            );
            assert_eq!(combined, expected);
            assert_eq!(BigUint::from(p.w_prime), &p.w % BigUint::from(5u32));
            assert_eq!((u_v as u32 % 5 + vote) % 5, p.w_prime);
        }
    }

    #[test]
    fn tampered_token_aborts_before_any_record() {
        let mut f = fixture("tampered");
        let mut token = make_token(&mut f, 55, 7);
        // replace C_u after signing
        let ctx = f.ctx.clone();
        let mut rng = derive_rng(b"tamper", "cu");
        token.commitments.c_u = commit(&ctx, &ctx.scalar_from_u64(1), &ctx.random_scalar(&mut rng));
        let err = run_session(&mut f, &mut token, 2).unwrap_err();
        assert!(matches!(err, Error::SignatureInvalid(_)));
        assert!(f.evm.records().is_empty());
        assert_eq!(f.evm.aborted_sessions, 1);
    }

    #[test]
    fn out_of_order_drivers_are_rejected() {
        let mut f = fixture("order");
        let mut token = make_token(&mut f, 88, 3);
        let ctx = f.ctx.clone();
        let secrets = token.take_secrets().unwrap();
        let mut session = f.evm.start_session();
        // token scan before the vote commitment is a phase error
        let err = session
            .scan_token(&ctx, token.commitments.clone(), secrets)
            .unwrap_err();
        assert!(matches!(err, Error::PhaseOrder { .. }));
        // acknowledging before scanning is too
        let mut rng = derive_rng(b"order", "ack");
        assert!(matches!(
            session.acknowledge(&ctx, true, &mut rng),
            Err(Error::PhaseOrder { .. })
        ));
    }

    #[test]
    fn declined_sum_aborts_without_a_record() {
        let mut f = fixture("decline");
        let mut token = make_token(&mut f, 99, 6);
        let ctx = f.ctx.clone();
        let chit = token.tear_chit().unwrap();
        f.po.receive_chit(&ctx, &chit, true).unwrap();
        let mut session = f.evm.start_session();
        session.cast_vote(&ctx, 1, &mut f.rng).unwrap();
        let secrets = token.take_secrets().unwrap();
        session
            .scan_token(&ctx, token.commitments.clone(), secrets)
            .unwrap();
        let err = session.acknowledge(&ctx, false, &mut f.rng).unwrap_err();
        assert!(matches!(err, Error::AckDeclined));
        assert!(f.evm.records().is_empty());
        assert_eq!(f.evm.aborted_sessions, 1);
    }

    #[test]
    fn vote_out_of_range_is_rejected() {
        let mut f = fixture("range");
        let ctx = f.ctx.clone();
        let mut session = f.evm.start_session();
        assert!(matches!(
            session.cast_vote(&ctx, 5, &mut f.rng),
            Err(Error::VoteOutOfRange { v: 5, m: 5 })
        ));
    }

    #[test]
    fn desk_rejects_stale_foreign_and_unverified_chits() {
        let mut f = fixture("desk");
        let mut token = make_token(&mut f, 11, 2);
        let ctx = f.ctx.clone();
        let chit = token.tear_chit().unwrap();
        assert!(matches!(
            f.po.receive_chit(&ctx, &chit, false),
            Err(Error::IdentityUnverified)
        ));
        f.po.receive_chit(&ctx, &chit, true).unwrap();
        // the same chit twice is the chain-voting case
        assert!(matches!(
            f.po.receive_chit(&ctx, &chit, true),
            Err(Error::TokenNotFresh)
        ));
        // an audited token's chit is rejected
        let mut token2 = make_token(&mut f, 12, 3);
        let chit2 = token2.tear_chit().unwrap();
        f.po.mark_audited(&chit2.brid);
        assert!(matches!(
            f.po.receive_chit(&ctx, &chit2, true),
            Err(Error::TokenNotFresh)
        ));
        // a chit from another booth's box
        let foreign = TokenChit {
            r_p: ctx.scalar_from_u64(3),
            brid: vec![9u8; 8],
        };
        assert!(matches!(
            f.po.receive_chit(&ctx, &foreign, true),
            Err(Error::TokenRejected(_))
        ));
    }

    #[test]
    fn close_booth_counts_only_acknowledged_records() {
        let mut f = fixture("close");
        let mut hashes = Vec::new();
        for i in 0..4u64 {
            let mut token = make_token(&mut f, 200 + i * 10, i);
            let out = run_session(&mut f, &mut token, (i % 5) as u32);
            assert!(out.is_ok());
            hashes.push(record_hash(&f.ctx.scalar_from_u64(200 + i * 10), (i % 5) as u32, 5).unwrap());
        }
        // drop one officer printout: that record is discarded but flagged
        let mut printouts = f.po.ack_printouts();
        let dropped = printouts.remove(3);
        let ledger = close_booth(&f.ctx, &f.evm, &printouts, &mut f.rng).unwrap();
        assert_eq!(ledger.n_k, 3);
        assert_eq!(ledger.records.len(), 3);
        assert_eq!(ledger.flagged_unacknowledged.len(), 1);
        assert_eq!(ledger.flagged_unacknowledged[0].brid, dropped.0);
        assert_eq!(ledger.h_k, xor_fold(&hashes[..3]));
        // a printout matching no record is flagged
        let stray = vec![(vec![1u8, 2, 3], f.ctx.scalar_from_u64(4))];
        let ledger2 = close_booth(&f.ctx, &f.evm, &stray, &mut f.rng).unwrap();
        assert_eq!(ledger2.flagged_unmatched.len(), 1);
    }

    #[test]
    fn empty_booth_closes_to_zero() {
        let mut f = fixture("empty");
        let ledger = close_booth(&f.ctx, &f.evm, &[], &mut f.rng).unwrap();
        assert_eq!(ledger.n_k, 0);
        assert_eq!(ledger.h_k, RecordHash::zero());
        assert!(ledger.records.is_empty());
    }

    #[test]
    fn record_payload_round_trips() {
        let mut f = fixture("payload");
        let mut token = make_token(&mut f, 321, 8);
        run_session(&mut f, &mut token, 4).unwrap();
        let record = &f.evm.records()[0];
        let bytes = crate::sig::hybrid_decrypt(&f.ctx, &f.ea_enc.secret, &record.ciphertext).unwrap();
        let payload = RecordPayload::from_bytes(&f.ctx, &bytes).unwrap();
        assert_eq!(payload.vote, 4);
        assert_eq!(payload.rid, f.ctx.scalar_from_u64(321));
        assert_eq!(payload.to_bytes(&f.ctx), bytes);
        assert_eq!(payload.h, record.h);
    }
}
