//! Token pre-generation by the election authority, and public token audit.
//!
//! A token prints as three separable parts:
//!
//! 1. the signed commitments `(C_rid, C_u, lambda)` — kept by the voter,
//! 2. the random secrets — scanned and destroyed at the EVM,
//! 3. a chit `(r_p, brid)` — torn off for the polling officer.
//!
//! Before token generation each polling officer, holding long-term key
//! `g^x_k` and a secret nonce seed, receives the per-token `r_p` values for
//! its booth and returns the blind-signature nonce commitments. The election
//! authority then blinds every `rid` against the token's ephemeral key
//! `p = (g^{x_k})^{r_p}`.

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::commit::{commit, verify_opening, Commitment, Opening};
use crate::group::{GroupContext, GroupElement, Scalar};
use crate::sig::{blind, sign, verify, BlindingPair, KeyPair, SchnorrSig};
use crate::wire::{put_field, ArtifactHeader, ArtifactKind, Reader};
use crate::{Error, Result};

/// Part 1: the signed commitments, returned to the voter as the token
/// remnant after voting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCommitments {
    pub c_rid: Commitment,
    pub c_u: Commitment,
    pub lambda: SchnorrSig,
}

/// Part 2: the random secrets, destroyed at the EVM after scanning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSecrets {
    pub r_rid: Scalar,
    pub r_u: Scalar,
    pub rid: Scalar,
    pub u: Scalar,
    pub u_prime: u32,
    #[serde(with = "crate::hexbytes")]
    pub brid: Vec<u8>,
    pub blinding: BlindingPair,
    pub ephemeral_pk: GroupElement,
    /// The polling officer's per-token nonce commitment, carried so auditors
    /// can recompute the blinding.
    pub nonce_commitment: GroupElement,
}

impl TokenSecrets {
    /// Overwrites the secret scalars before dropping. Interface-level
    /// destruction; callers must not retain copies.
    pub fn destroy(mut self) {
        self.r_rid = Scalar::zero();
        self.r_u = Scalar::zero();
        self.rid = Scalar::zero();
        self.u = Scalar::zero();
        self.u_prime = 0;
        self.brid.fill(0);
        self.blinding = BlindingPair {
            alpha: Scalar::zero(),
            beta: Scalar::zero(),
        };
    }
}

/// Part 3: the chit handed to the polling officer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenChit {
    pub r_p: Scalar,
    #[serde(with = "crate::hexbytes")]
    pub brid: Vec<u8>,
}

/// A printed token. The secrets and chit parts are physically separable;
/// once taken they are gone from the token.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Token {
    pub commitments: TokenCommitments,
    secrets: Option<TokenSecrets>,
    chit: Option<TokenChit>,
    audited: bool,
}

impl Token {
    /// Assembles a freshly printed token from its three parts.
    pub fn from_parts(commitments: TokenCommitments, secrets: TokenSecrets, chit: TokenChit) -> Self {
        Token {
            commitments,
            secrets: Some(secrets),
            chit: Some(chit),
            audited: false,
        }
    }

    pub fn secrets(&self) -> Option<&TokenSecrets> {
        self.secrets.as_ref()
    }

    pub fn chit(&self) -> Option<&TokenChit> {
        self.chit.as_ref()
    }

    pub fn is_audited(&self) -> bool {
        self.audited
    }

    /// Tears off the chit for the polling officer.
    pub fn tear_chit(&mut self) -> Result<TokenChit> {
        self.chit
            .take()
            .ok_or_else(|| Error::TokenRejected("chit already torn off".into()))
    }

    /// Removes the secrets part for scanning; the token keeps only the
    /// commitments afterwards.
    pub fn take_secrets(&mut self) -> Result<TokenSecrets> {
        self.secrets
            .take()
            .ok_or_else(|| Error::TokenRejected("secrets part already destroyed".into()))
    }

    /// The obfuscation residue in human-readable form, as printed.
    pub fn u_prime_display(&self) -> Option<String> {
        self.secrets.as_ref().map(|s| s.u_prime.to_string())
    }
}

/// The message certified by the election authority's token signature.
pub fn token_certificate_message(ctx: &GroupContext, c_rid: &Commitment, c_u: &Commitment) -> Vec<u8> {
    let mut msg = b"token".to_vec();
    msg.extend_from_slice(&c_rid.to_bytes(ctx));
    msg.extend_from_slice(&c_u.to_bytes(ctx));
    msg
}

/// One booth's inputs to token generation: the officer's long-term public
/// key plus the `r_p` values and the officer's matching nonce commitments.
#[derive(Debug, Clone)]
pub struct BoothPregen {
    pub po_public: GroupElement,
    pub r_ps: Vec<Scalar>,
    pub nonce_commitments: Vec<GroupElement>,
}

/// Generates every booth's tokens and the shuffled ephemeral-key board BB0.
pub fn generate_tokens<R: RngCore>(
    ctx: &GroupContext,
    ea_sign: &KeyPair,
    booths: &[BoothPregen],
    m: u32,
    rng: &mut R,
) -> Result<(Vec<Vec<Token>>, Vec<GroupElement>)> {
    if m < 2 {
        return Err(Error::VoteOutOfRange { v: 0, m });
    }
    let mut per_booth = Vec::with_capacity(booths.len());
    let mut bb0 = Vec::new();
    for booth in booths {
        if booth.r_ps.is_empty() || booth.r_ps.len() != booth.nonce_commitments.len() {
            return Err(Error::StageInput {
                stage: "gen-tokens",
                detail: "booth ephemeral list empty or nonce commitments mismatched".into(),
            });
        }
        let mut tokens = Vec::with_capacity(booth.r_ps.len());
        for (r_p, nonce_commitment) in booth.r_ps.iter().zip(&booth.nonce_commitments) {
            let rid = ctx.random_scalar(rng);
            let r_rid = ctx.random_scalar(rng);
            let c_rid = commit(ctx, &rid, &r_rid);
            let u = ctx.random_scalar(rng);
            let r_u = ctx.random_scalar(rng);
            let c_u = commit(ctx, &u, &r_u);
            let u_prime = (u.value() % BigUint::from(m)).to_u64_digits().first().copied().unwrap_or(0) as u32;
            let ephemeral_pk = ctx.exp(&booth.po_public, r_p);
            let blinding = BlindingPair::random(ctx, rng);
            let brid = blind(ctx, &rid, &blinding, &ephemeral_pk, nonce_commitment);
            let lambda = sign(
                ctx,
                &ea_sign.secret,
                &token_certificate_message(ctx, &c_rid, &c_u),
                rng,
            );
            bb0.push(ephemeral_pk.clone());
            tokens.push(Token::from_parts(
                TokenCommitments { c_rid, c_u, lambda },
                TokenSecrets {
                    r_rid,
                    r_u,
                    rid,
                    u,
                    u_prime,
                    brid: brid.clone(),
                    blinding,
                    ephemeral_pk,
                    nonce_commitment: nonce_commitment.clone(),
                },
                TokenChit {
                    r_p: r_p.clone(),
                    brid,
                },
            ));
        }
        per_booth.push(tokens);
    }
    // publish the ephemeral keys in random order so BB0 reveals no booth
    bb0.shuffle(rng);
    Ok((per_booth, bb0))
}

/// Per-check results of a public token audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub lambda_ok: bool,
    pub rid_opening_ok: bool,
    pub u_opening_ok: bool,
    pub u_prime_ok: bool,
    pub brid_ok: bool,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.lambda_ok && self.rid_opening_ok && self.u_opening_ok && self.u_prime_ok && self.brid_ok
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.lambda_ok {
            out.push("authority signature");
        }
        if !self.rid_opening_ok {
            out.push("rid commitment opening");
        }
        if !self.u_opening_ok {
            out.push("obfuscation commitment opening");
        }
        if !self.u_prime_ok {
            out.push("u' residue");
        }
        if !self.brid_ok {
            out.push("blinded rid");
        }
        out
    }
}

/// Audits a full (three-part) token and marks it consumed; audited tokens
/// cannot be used for voting.
pub fn audit_token(
    ctx: &GroupContext,
    token: &mut Token,
    ea_public: &GroupElement,
    m: u32,
) -> Result<AuditReport> {
    let secrets = token
        .secrets
        .as_ref()
        .ok_or_else(|| Error::TokenRejected("audit requires the secrets part".into()))?;
    let chit = token
        .chit
        .as_ref()
        .ok_or_else(|| Error::TokenRejected("audit requires the chit part".into()))?;
    let lambda_ok = verify(
        ctx,
        ea_public,
        &token_certificate_message(ctx, &token.commitments.c_rid, &token.commitments.c_u),
        &token.commitments.lambda,
    );
    let rid_opening_ok = verify_opening(
        ctx,
        &token.commitments.c_rid,
        &Opening {
            message: secrets.rid.clone(),
            randomness: secrets.r_rid.clone(),
        },
    );
    let u_opening_ok = verify_opening(
        ctx,
        &token.commitments.c_u,
        &Opening {
            message: secrets.u.clone(),
            randomness: secrets.r_u.clone(),
        },
    );
    let u_prime_ok = BigUint::from(secrets.u_prime) == secrets.u.value() % BigUint::from(m);
    let brid_ok = {
        let recomputed = blind(
            ctx,
            &secrets.rid,
            &secrets.blinding,
            &secrets.ephemeral_pk,
            &secrets.nonce_commitment,
        );
        recomputed == secrets.brid && chit.brid == secrets.brid
    };
    token.audited = true;
    Ok(AuditReport {
        lambda_ok,
        rid_opening_ok,
        u_opening_ok,
        u_prime_ok,
        brid_ok,
    })
}

impl Token {
    /// The three printed parts as length-prefixed binary segments, in order.
    pub fn segment_bytes(&self, ctx: &GroupContext) -> Result<[Vec<u8>; 3]> {
        let secrets = self
            .secrets
            .as_ref()
            .ok_or_else(|| Error::TokenRejected("secrets part missing".into()))?;
        let chit = self
            .chit
            .as_ref()
            .ok_or_else(|| Error::TokenRejected("chit part missing".into()))?;

        let mut part1 = Vec::new();
        part1.extend_from_slice(&self.commitments.c_rid.to_bytes(ctx));
        part1.extend_from_slice(&self.commitments.c_u.to_bytes(ctx));
        part1.extend_from_slice(&self.commitments.lambda.to_bytes(ctx));

        let mut part2 = Vec::new();
        part2.extend_from_slice(&ctx.scalar_to_bytes(&secrets.r_rid));
        part2.extend_from_slice(&ctx.scalar_to_bytes(&secrets.r_u));
        part2.extend_from_slice(&ctx.scalar_to_bytes(&secrets.rid));
        part2.extend_from_slice(&ctx.scalar_to_bytes(&secrets.u));
        part2.extend_from_slice(&secrets.u_prime.to_be_bytes());
        put_field(&mut part2, &secrets.brid);
        part2.extend_from_slice(&ctx.scalar_to_bytes(&secrets.blinding.alpha));
        part2.extend_from_slice(&ctx.scalar_to_bytes(&secrets.blinding.beta));
        part2.extend_from_slice(&ctx.element_to_bytes(&secrets.ephemeral_pk));
        part2.extend_from_slice(&ctx.element_to_bytes(&secrets.nonce_commitment));

        let mut part3 = Vec::new();
        part3.extend_from_slice(&ctx.scalar_to_bytes(&chit.r_p));
        put_field(&mut part3, &chit.brid);

        Ok([part1, part2, part3])
    }

    /// Full binary artifact: header plus the three length-prefixed segments.
    pub fn to_bytes(&self, ctx: &GroupContext) -> Result<Vec<u8>> {
        let [p1, p2, p3] = self.segment_bytes(ctx)?;
        let mut out = Vec::new();
        ArtifactHeader::for_ctx(ArtifactKind::Token, ctx).write(&mut out);
        put_field(&mut out, &p1);
        put_field(&mut out, &p2);
        put_field(&mut out, &p3);
        Ok(out)
    }

    pub fn from_bytes(ctx: &GroupContext, bytes: &[u8]) -> Result<Token> {
        let mut r = Reader::new(bytes);
        ArtifactHeader::read(&mut r)?.check(ctx, ArtifactKind::Token)?;
        let part1 = r.field()?;
        let part2 = r.field()?;
        let part3 = r.field()?;
        r.finish()?;

        let ew = ctx.element_width();
        let sw = ctx.scalar_width();
        let mut r1 = Reader::new(part1);
        let c_rid = Commitment(ctx.element_from_bytes(r1.fixed(ew)?)?);
        let c_u = Commitment(ctx.element_from_bytes(r1.fixed(ew)?)?);
        let lambda = SchnorrSig::from_bytes(ctx, r1.fixed(2 * sw)?)?;
        r1.finish()?;

        let mut r2 = Reader::new(part2);
        let r_rid = ctx.scalar_from_bytes(r2.fixed(sw)?)?;
        let r_u = ctx.scalar_from_bytes(r2.fixed(sw)?)?;
        let rid = ctx.scalar_from_bytes(r2.fixed(sw)?)?;
        let u = ctx.scalar_from_bytes(r2.fixed(sw)?)?;
        let u_prime = u32::from_be_bytes(r2.fixed(4)?.try_into().unwrap());
        let brid = r2.field()?.to_vec();
        let alpha = ctx.scalar_from_bytes(r2.fixed(sw)?)?;
        let beta = ctx.scalar_from_bytes(r2.fixed(sw)?)?;
        let ephemeral_pk = ctx.element_from_bytes(r2.fixed(ew)?)?;
        let nonce_commitment = ctx.element_from_bytes(r2.fixed(ew)?)?;
        r2.finish()?;

        let mut r3 = Reader::new(part3);
        let r_p = ctx.scalar_from_bytes(r3.fixed(sw)?)?;
        let chit_brid = r3.field()?.to_vec();
        r3.finish()?;

        Ok(Token::from_parts(
            TokenCommitments { c_rid, c_u, lambda },
            TokenSecrets {
                r_rid,
                r_u,
                rid,
                u,
                u_prime,
                brid,
                blinding: BlindingPair { alpha, beta },
                ephemeral_pk,
                nonce_commitment,
            },
            TokenChit {
                r_p,
                brid: chit_brid,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::SecurityProfile;
    use crate::rng::derive_rng;
    use crate::sig::{derive_nonce, keygen};
    use crate::GroupContext;

    fn pregen(
        ctx: &GroupContext,
        n_booths: usize,
        per_booth: usize,
        tag: &str,
    ) -> (KeyPair, Vec<(KeyPair, [u8; 32])>, Vec<BoothPregen>, Vec<Vec<Token>>, Vec<GroupElement>) {
        let mut rng = derive_rng(b"token-pregen", tag);
        let ea = keygen(ctx, &mut rng);
        let mut po_materials = Vec::new();
        let mut booths = Vec::new();
        for b in 0..n_booths {
            let po = keygen(ctx, &mut rng);
            let seed = [b as u8 + 1; 32];
            let r_ps: Vec<_> = (0..per_booth)
                .map(|_| ctx.random_nonzero_scalar(&mut rng))
                .collect();
            let nonce_commitments: Vec<_> = r_ps
                .iter()
                .map(|r_p| ctx.exp_g(&derive_nonce(ctx, &seed, r_p)))
                .collect();
            booths.push(BoothPregen {
                po_public: po.public.clone(),
                r_ps,
                nonce_commitments,
            });
            po_materials.push((po, seed));
        }
        let (tokens, bb0) = generate_tokens(ctx, &ea, &booths, 5, &mut rng).unwrap();
        (ea, po_materials, booths, tokens, bb0)
    }

    #[test]
    fn generated_tokens_satisfy_all_invariants() {
        let ctx = GroupContext::setup_group(SecurityProfile::Test, b"tok").unwrap();
        let (ea, _pos, _booths, tokens, bb0) = pregen(&ctx, 2, 5, "invariants");
        assert_eq!(tokens.iter().map(Vec::len).sum::<usize>(), 10);
        assert_eq!(bb0.len(), 10);
        for booth_tokens in &tokens {
            for token in booth_tokens {
                let mut t = token.clone();
                let report = audit_token(&ctx, &mut t, &ea.public, 5).unwrap();
                assert!(report.passed(), "failures: {:?}", report.failures());
                // every ephemeral key appears on BB0
                assert!(bb0.contains(&token.secrets().unwrap().ephemeral_pk));
            }
        }
    }

    #[test]
    fn audit_flags_each_mutation() {
        let ctx = GroupContext::setup_group(SecurityProfile::Test, b"tok").unwrap();
        let (ea, _pos, _booths, mut tokens, _) = pregen(&ctx, 1, 3, "mutations");
        let mut rng = derive_rng(b"token-mutate", "t");

        // replaced C_u: opening check must flag
        let mut t = tokens[0][0].clone();
        t.commitments.c_u = commit(&ctx, &ctx.random_scalar(&mut rng), &ctx.random_scalar(&mut rng));
        let report = audit_token(&ctx, &mut t, &ea.public, 5).unwrap();
        assert!(!report.u_opening_ok);
        assert!(!report.lambda_ok); // signature covered C_u as well
        assert!(!report.passed());

        // u' off by one
        let mut t2 = tokens[0][1].clone();
        t2.secrets.as_mut().unwrap().u_prime = (t2.secrets().unwrap().u_prime + 1) % 5;
        let report2 = audit_token(&ctx, &mut t2, &ea.public, 5).unwrap();
        assert!(!report2.u_prime_ok);
        assert!(report2.lambda_ok);

        // honest token passes and becomes consumed
        let t3 = &mut tokens[0][2];
        assert!(!t3.is_audited());
        let report3 = audit_token(&ctx, t3, &ea.public, 5).unwrap();
        assert!(report3.passed());
        assert!(t3.is_audited());
    }

    #[test]
    fn audit_requires_all_parts() {
        let ctx = GroupContext::setup_group(SecurityProfile::Test, b"tok").unwrap();
        let (ea, _pos, _booths, mut tokens, _) = pregen(&ctx, 1, 1, "parts");
        let t = &mut tokens[0][0];
        t.tear_chit().unwrap();
        assert!(audit_token(&ctx, t, &ea.public, 5).is_err());
    }

    #[test]
    fn binary_round_trip_and_header_check() {
        let ctx = GroupContext::setup_group(SecurityProfile::Test, b"tok").unwrap();
        let (_ea, _pos, _booths, tokens, _) = pregen(&ctx, 1, 1, "roundtrip");
        let token = &tokens[0][0];
        let bytes = token.to_bytes(&ctx).unwrap();
        let parsed = Token::from_bytes(&ctx, &bytes).unwrap();
        assert_eq!(parsed.commitments, token.commitments);
        assert_eq!(parsed.secrets(), token.secrets());
        assert_eq!(parsed.chit(), token.chit());
        let mock = GroupContext::setup_mock(SecurityProfile::Test, b"tok").unwrap();
        assert!(Token::from_bytes(&mock, &bytes).is_err());
    }

    #[test]
    fn torn_parts_become_unreadable() {
        let ctx = GroupContext::setup_group(SecurityProfile::Test, b"tok").unwrap();
        let (_ea, _pos, _booths, mut tokens, _) = pregen(&ctx, 1, 1, "torn");
        let t = &mut tokens[0][0];
        let chit = t.tear_chit().unwrap();
        assert!(t.chit().is_none());
        assert!(t.tear_chit().is_err());
        let secrets = t.take_secrets().unwrap();
        assert!(t.secrets().is_none());
        assert!(t.take_secrets().is_err());
        assert_eq!(chit.brid, secrets.brid);
        secrets.destroy();
    }

    #[test]
    fn vote_space_must_have_two_candidates() {
        let ctx = GroupContext::setup_group(SecurityProfile::Test, b"tok").unwrap();
        let mut rng = derive_rng(b"token-m", "t");
        let ea = keygen(&ctx, &mut rng);
        assert!(generate_tokens(&ctx, &ea, &[], 1, &mut rng).is_err());
    }
}
