//! Post-election pipeline: collecting encrypted records from the booths,
//! shuffling them, decryption and verification at the election authority,
//! bulletin-board publication, and the tally.

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::boards::{AckSig, Bb2, Bb2Row, Bb3, Bb3Row};
use crate::booth::{receipt_message, record_hash_message, BoothLedger, RecordPayload, SumOpening};
use crate::commit::{combine, verify_opening, Commitment, Opening};
use crate::group::{GroupContext, GroupElement, Scalar};
use crate::sig::{
    bverify, hybrid_decrypt, record_hash, ring_verify, unblind, verify, BlindSig,
};
use crate::token::token_certificate_message;
use crate::{Error, Result};

/// The triple that travels from a booth to the election authority.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncryptedRecordEnvelope {
    pub ciphertext: crate::sig::HybridCiphertext,
    #[serde(with = "crate::hexbytes")]
    pub brid: Vec<u8>,
    pub sigma_ack_blinded: Scalar,
}

/// Pulls every acknowledged record out of the booth ledgers.
pub fn collect_envelopes(ledgers: &[BoothLedger]) -> Result<Vec<EncryptedRecordEnvelope>> {
    let mut out = Vec::new();
    for ledger in ledgers {
        for record in &ledger.records {
            let sigma = record.ack.clone().ok_or_else(|| Error::StageInput {
                stage: "collect",
                detail: "ledger record without acknowledgment".into(),
            })?;
            out.push(EncryptedRecordEnvelope {
                ciphertext: record.ciphertext.clone(),
                brid: record.brid.clone(),
                sigma_ack_blinded: sigma,
            });
        }
    }
    Ok(out)
}

/// Uniformly random permutation (Fisher-Yates) over the seeded RNG; record
/// contents are untouched.
pub fn shuffle<T, R: RngCore>(items: &mut [T], rng: &mut R) {
    items.shuffle(rng);
}

/// What the election authority knows independently of the envelopes.
#[derive(Debug, Clone)]
pub struct EaExpectations {
    pub ea_sign_public: GroupElement,
    pub evm_ring: Vec<GroupElement>,
    pub m: u32,
}

/// One fully decrypted and re-verified record.
#[derive(Debug, Clone)]
pub struct VerifiedRecord {
    pub payload: RecordPayload,
    /// The unblinded polling-officer acknowledgment.
    pub sigma_ack: BlindSig,
    /// `C_rid * C_v`, the lookup index for individual verification.
    pub combined: Commitment,
    /// Empty for clean records; flagged records are kept for internal audit
    /// and excluded from publication.
    pub flags: Vec<String>,
}

impl VerifiedRecord {
    /// Opening of `C_rid * C_v`: message `rid + v mod q`, randomness
    /// `r_rid + r_v mod q`. This is what the authority proves against Phi.
    pub fn phi_opening(&self, ctx: &GroupContext) -> Opening {
        Opening {
            message: ctx.scalar_add(
                &self.payload.rid,
                &ctx.scalar_from_u64(self.payload.vote as u64),
            ),
            randomness: ctx.scalar_add(&self.payload.r_rid, &self.payload.r_v),
        }
    }

    /// Opening of `C_rid`, proved against Psi.
    pub fn psi_opening(&self) -> Opening {
        Opening {
            message: self.payload.rid.clone(),
            randomness: self.payload.r_rid.clone(),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}

/// An envelope that could not even be decrypted or parsed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectedEnvelope {
    #[serde(with = "crate::hexbytes")]
    pub brid: Vec<u8>,
    pub reason: String,
}

/// The authority's internal store after ingest: records indexed by
/// `C_rid * C_v` and by `C_rid`.
#[derive(Debug, Clone, Default)]
pub struct EaStore {
    pub records: Vec<VerifiedRecord>,
    pub rejected: Vec<RejectedEnvelope>,
    by_combined: HashMap<Vec<u8>, usize>,
    by_c_rid: HashMap<Vec<u8>, usize>,
}

impl EaStore {
    pub fn lookup_by_combined(&self, ctx: &GroupContext, c: &Commitment) -> Option<&VerifiedRecord> {
        self.by_combined
            .get(&c.to_bytes(ctx))
            .map(|&i| &self.records[i])
    }

    pub fn lookup_by_c_rid(&self, ctx: &GroupContext, c: &Commitment) -> Option<&VerifiedRecord> {
        self.by_c_rid
            .get(&c.to_bytes(ctx))
            .map(|&i| &self.records[i])
    }

    /// All flags across records plus outright rejections.
    pub fn flag_count(&self) -> usize {
        self.records.iter().map(|r| r.flags.len()).sum::<usize>() + self.rejected.len()
    }
}

fn check_record(
    ctx: &GroupContext,
    envelope: &EncryptedRecordEnvelope,
    payload: &RecordPayload,
    bb0: &[GroupElement],
    expect: &EaExpectations,
) -> (Vec<String>, Option<BlindSig>) {
    let mut flags = Vec::new();
    let vote_scalar = ctx.scalar_from_u64(payload.vote as u64);

    if payload.vote >= expect.m {
        flags.push("vote out of range".into());
    }
    if !verify_opening(
        ctx,
        &payload.c_rid,
        &Opening {
            message: payload.rid.clone(),
            randomness: payload.r_rid.clone(),
        },
    ) {
        flags.push("rid commitment does not open".into());
    }
    if !verify_opening(
        ctx,
        &payload.c_u,
        &Opening {
            message: payload.u.clone(),
            randomness: payload.r_u.clone(),
        },
    ) {
        flags.push("obfuscation commitment does not open".into());
    }
    if !verify_opening(
        ctx,
        &payload.c_v,
        &Opening {
            message: vote_scalar,
            randomness: payload.r_v.clone(),
        },
    ) {
        flags.push("vote commitment does not open".into());
    }
    // the printed proof P = (w, w', r_w)
    let SumOpening { w, w_prime, r_w } = &payload.proof;
    if *w != payload.u.value() + BigUint::from(payload.vote) {
        flags.push("proof sum w mismatch".into());
    }
    if BigUint::from(*w_prime) != w % BigUint::from(expect.m) {
        flags.push("proof residue w' mismatch".into());
    }
    if *r_w != ctx.scalar_add(&payload.r_u, &payload.r_v) {
        flags.push("proof randomness mismatch".into());
    }
    match record_hash(&payload.rid, payload.vote, expect.m) {
        Ok(h) if h == payload.h => {}
        _ => flags.push("record hash mismatch".into()),
    }
    if !verify(
        ctx,
        &expect.ea_sign_public,
        &token_certificate_message(ctx, &payload.c_rid, &payload.c_u),
        &payload.lambda,
    ) {
        flags.push("token certificate invalid".into());
    }
    if !ring_verify(
        ctx,
        &expect.evm_ring,
        &receipt_message(ctx, &payload.c_rid, &payload.c_v, &payload.proof),
        &payload.mu_receipt,
    ) {
        flags.push("receipt signature invalid".into());
    }
    if !ring_verify(
        ctx,
        &expect.evm_ring,
        &record_hash_message(&payload.h),
        &payload.mu_h,
    ) {
        flags.push("record hash signature invalid".into());
    }
    if !bb0.contains(&payload.ephemeral_pk) {
        flags.push("ephemeral key not on BB0".into());
    }
    let sigma_ack = match unblind(
        ctx,
        &envelope.sigma_ack_blinded,
        &envelope.brid,
        &payload.blinding,
    ) {
        Ok(sig) => {
            if !bverify(ctx, &payload.ephemeral_pk, &payload.rid, &sig) {
                flags.push("acknowledgment does not verify against rid".into());
            }
            Some(sig)
        }
        Err(_) => {
            flags.push("acknowledgment could not be unblinded".into());
            None
        }
    };
    (flags, sigma_ack)
}

/// Decrypts and re-verifies every envelope, unblinds the acknowledgments,
/// flags failures for internal audit, checks cross-record rid separation and
/// commitment collisions, and indexes the clean records.
pub fn ea_ingest(
    ctx: &GroupContext,
    envelopes: &[EncryptedRecordEnvelope],
    ea_enc_secret: &Scalar,
    bb0: &[GroupElement],
    expect: &EaExpectations,
) -> EaStore {
    let mut store = EaStore::default();
    for envelope in envelopes {
        let plaintext = match hybrid_decrypt(ctx, ea_enc_secret, &envelope.ciphertext) {
            Ok(p) => p,
            Err(e) => {
                store.rejected.push(RejectedEnvelope {
                    brid: envelope.brid.clone(),
                    reason: format!("decryption failed: {e}"),
                });
                continue;
            }
        };
        let payload = match RecordPayload::from_bytes(ctx, &plaintext) {
            Ok(p) => p,
            Err(e) => {
                store.rejected.push(RejectedEnvelope {
                    brid: envelope.brid.clone(),
                    reason: format!("payload malformed: {e}"),
                });
                continue;
            }
        };
        let (mut flags, sigma_ack) = check_record(ctx, envelope, &payload, bb0, expect);
        let sigma_ack = match sigma_ack {
            Some(s) => s,
            None => {
                // keep the record for audit with a placeholder signature
                flags.push("stored without acknowledgment".into());
                BlindSig {
                    challenge: Scalar::zero(),
                    response: Scalar::zero(),
                }
            }
        };
        let combined = match combine(ctx, &payload.c_rid, &payload.c_v) {
            Ok(c) => c,
            Err(_) => {
                store.rejected.push(RejectedEnvelope {
                    brid: envelope.brid.clone(),
                    reason: "commitments not in group".into(),
                });
                continue;
            }
        };
        store.records.push(VerifiedRecord {
            payload,
            sigma_ack,
            combined,
            flags,
        });
    }

    // rid separation: no two rids within +-m of each other (the published
    // board check mirrors this); later records of a cluster are flagged
    let m_big = BigUint::from(expect.m);
    let mut order: Vec<usize> = (0..store.records.len()).collect();
    order.sort_by(|&a, &b| {
        store.records[a]
            .payload
            .rid
            .value()
            .cmp(store.records[b].payload.rid.value())
    });
    for pair in order.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let diff =
            store.records[b].payload.rid.value() - store.records[a].payload.rid.value();
        if diff < m_big {
            let later = a.max(b);
            store.records[later]
                .flags
                .push("rid within m of another record".into());
        }
    }
    if order.len() >= 2 {
        // wrap-around distance between the largest and smallest rid
        let (first, last) = (order[0], order[order.len() - 1]);
        let wrap = ctx.order() - store.records[last].payload.rid.value()
            + store.records[first].payload.rid.value();
        if wrap < m_big {
            let later = first.max(last);
            store.records[later]
                .flags
                .push("rid within m of another record (wraparound)".into());
        }
    }

    // C_rid collisions
    let mut seen_c_rid: HashMap<Vec<u8>, usize> = HashMap::new();
    for i in 0..store.records.len() {
        let key = store.records[i].payload.c_rid.to_bytes(ctx);
        if seen_c_rid.contains_key(&key) {
            store.records[i].flags.push("C_rid collision".into());
        } else {
            seen_c_rid.insert(key, i);
        }
    }

    // index clean records
    for (i, record) in store.records.iter().enumerate() {
        if record.is_clean() {
            store
                .by_combined
                .insert(record.combined.to_bytes(ctx), i);
            store
                .by_c_rid
                .insert(record.payload.c_rid.to_bytes(ctx), i);
        }
    }
    store
}

/// Publishes the sorted tally table BB3 and (optionally) the receipt board
/// BB2 from the clean records.
pub fn publish_boards(ctx: &GroupContext, store: &EaStore, with_bb2: bool) -> (Bb3, Option<Bb2>) {
    let mut clean: Vec<&VerifiedRecord> = store.records.iter().filter(|r| r.is_clean()).collect();
    clean.sort_by(|a, b| a.payload.rid.value().cmp(b.payload.rid.value()));
    let rows = clean
        .iter()
        .map(|r| Bb3Row {
            rid: r.payload.rid.clone(),
            vote: r.payload.vote,
            rho: ctx.scalar_add(
                &r.payload.rid,
                &ctx.scalar_from_u64(r.payload.vote as u64),
            ),
            h: r.payload.h,
            mu_h: r.payload.mu_h.clone(),
            sigma_ack: AckSig {
                key: r.payload.ephemeral_pk.clone(),
                sig: r.sigma_ack.clone(),
            },
        })
        .collect();
    let bb3 = Bb3 { rows };
    let bb2 = with_bb2.then(|| {
        let mut rows: Vec<Bb2Row> = clean
            .iter()
            .map(|r| Bb2Row {
                c_rid: r.payload.c_rid.clone(),
                w: r.payload.proof.w.clone(),
            })
            .collect();
        rows.sort_by_key(|r| r.c_rid.to_bytes(ctx));
        Bb2 { rows }
    });
    (bb3, bb2)
}

/// Per-candidate counts from BB3.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyResult {
    pub counts: Vec<u64>,
    pub total: u64,
}

pub fn tally(bb3: &Bb3, m: u32) -> Result<TallyResult> {
    let mut counts = vec![0u64; m as usize];
    for row in &bb3.rows {
        if row.vote >= m {
            return Err(Error::VoteOutOfRange { v: row.vote, m });
        }
        counts[row.vote as usize] += 1;
    }
    Ok(TallyResult {
        counts,
        total: bb3.rows.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use crate::sig::RecordHash;

    #[test]
    fn shuffle_preserves_contents_and_is_seeded() {
        let mut rng = derive_rng(b"shuffle", "a");
        let mut items: Vec<u32> = (0..20).collect();
        shuffle(&mut items, &mut rng);
        let mut sorted = items.clone();
        sorted.sort();
        assert_eq!(sorted, (0..20).collect::<Vec<_>>());
        // same seed, same permutation
        let mut rng2 = derive_rng(b"shuffle", "a");
        let mut items2: Vec<u32> = (0..20).collect();
        shuffle(&mut items2, &mut rng2);
        assert_eq!(items, items2);
        // single element is a fixed point
        let mut one = vec![7u32];
        shuffle(&mut one, &mut rng);
        assert_eq!(one, vec![7]);
    }

    #[test]
    fn shuffle_is_uniform_over_permutations() {
        // 10,000 shuffles of 4 items: each of the 24 permutations within
        // 1/24 +- 3 sigma
        let mut rng = derive_rng(b"shuffle", "uniformity");
        let trials = 10_000usize;
        let mut counts: HashMap<Vec<u8>, usize> = HashMap::new();
        for _ in 0..trials {
            let mut items: Vec<u8> = vec![0, 1, 2, 3];
            shuffle(&mut items, &mut rng);
            *counts.entry(items).or_default() += 1;
        }
        assert_eq!(counts.len(), 24);
        let p = 1.0 / 24.0;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        for (perm, count) in counts {
            let freq = count as f64 / trials as f64;
            assert!(
                (freq - p).abs() <= 3.0 * sigma,
                "permutation {perm:?} frequency {freq} outside 1/24 +- 3 sigma"
            );
        }
    }

    #[test]
    fn tally_counts_by_candidate() {
        let rows = [0u32, 1, 1, 4]
            .iter()
            .map(|&v| Bb3Row {
                rid: crate::Scalar::zero(),
                vote: v,
                rho: crate::Scalar::zero(),
                h: RecordHash::zero(),
                mu_h: crate::sig::RingSig {
                    seed_challenge: crate::Scalar::zero(),
                    responses: vec![],
                },
                sigma_ack: AckSig {
                    key: crate::GroupContext::setup_mock(crate::SecurityProfile::Toy, b"x")
                        .unwrap()
                        .identity(),
                    sig: BlindSig {
                        challenge: crate::Scalar::zero(),
                        response: crate::Scalar::zero(),
                    },
                },
            })
            .collect();
        let result = tally(&Bb3 { rows }, 5).unwrap();
        assert_eq!(result.counts, vec![1, 2, 0, 0, 1]);
        assert_eq!(result.total, 4);
        // empty board
        let empty = tally(&Bb3 { rows: vec![] }, 5).unwrap();
        assert_eq!(empty.counts, vec![0; 5]);
        assert_eq!(empty.total, 0);
        // out-of-range vote rejects the table
        let mut bad_rows = Bb3 { rows: vec![] };
        bad_rows.rows.push(Bb3Row {
            rid: crate::Scalar::zero(),
            vote: 5,
            rho: crate::Scalar::zero(),
            h: RecordHash::zero(),
            mu_h: crate::sig::RingSig {
                seed_challenge: crate::Scalar::zero(),
                responses: vec![],
            },
            sigma_ack: AckSig {
                key: crate::GroupContext::setup_mock(crate::SecurityProfile::Toy, b"x")
                    .unwrap()
                    .identity(),
                sig: BlindSig {
                    challenge: crate::Scalar::zero(),
                    response: crate::Scalar::zero(),
                },
            },
        });
        assert!(tally(&bad_rows, 5).is_err());
    }
}
