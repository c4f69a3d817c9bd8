//! Deterministic end-to-end election simulation.
//!
//! One master seed expands into labeled per-stage (and per-booth) streams, so
//! any stage can be replayed in isolation and reruns are byte-identical.
//! Ground truth (who voted what) is retained outside the protocol path, for
//! acceptance checks only.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::boards::{Bb0, Bb1, Bb1Row, Bb2, Bb3};
use crate::booth::{close_booth, BoothLedger, EvmBooth, PoDesk, VoterReceipt, VvpatSlip};
use crate::group::{BackendId, GroupContext, GroupElement, Scalar, SecurityProfile};
use crate::pipeline::{
    collect_envelopes, ea_ingest, publish_boards, shuffle, tally, EaExpectations, EaStore,
    EncryptedRecordEnvelope, TallyResult,
};
use crate::rng::derive_rng;
use crate::sig::{keygen, KeyPair};
use crate::token::{audit_token, generate_tokens, AuditReport, BoothPregen, Token};
use crate::{Error, Result};

/// Everything that fixes an election run. The seed determines the entire
/// run; two runs with the same config are identical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElectionConfig {
    pub booths: usize,
    pub voters_per_booth: usize,
    /// Number of candidates m; votes are 0..m.
    pub candidates: u32,
    /// Tokens printed per booth = voters_per_booth * token_multiple.
    pub token_multiple: usize,
    pub profile: SecurityProfile,
    pub backend: BackendId,
    pub seed: String,
    /// Relative weights for the simulated vote distribution; uniform if None.
    pub vote_weights: Option<Vec<u64>>,
    /// Tokens publicly audited per booth before polling.
    pub audit_per_booth: usize,
    /// Whether the optional receipt board BB2 is published.
    pub with_bb2: bool,
}

impl Default for ElectionConfig {
    fn default() -> Self {
        ElectionConfig {
            booths: 2,
            voters_per_booth: 10,
            candidates: 3,
            token_multiple: 2,
            profile: SecurityProfile::Test,
            backend: BackendId::Mock,
            seed: "veribooth-demo".into(),
            vote_weights: None,
            audit_per_booth: 1,
            with_bb2: true,
        }
    }
}

impl ElectionConfig {
    fn validate(&self) -> Result<()> {
        if self.candidates < 2 {
            return Err(Error::VoteOutOfRange {
                v: 0,
                m: self.candidates,
            });
        }
        if self.booths == 0 || self.voters_per_booth == 0 || self.token_multiple < 1 {
            return Err(Error::StageInput {
                stage: "setup",
                detail: "booths, voters and token multiple must be positive".into(),
            });
        }
        if let Some(w) = &self.vote_weights {
            if w.len() != self.candidates as usize || w.iter().sum::<u64>() == 0 {
                return Err(Error::StageInput {
                    stage: "setup",
                    detail: "vote weights must have one positive-sum entry per candidate".into(),
                });
            }
        }
        Ok(())
    }

    pub fn master_seed(&self) -> &[u8] {
        self.seed.as_bytes()
    }
}

/// Long-lived key material of all parties.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartySetup {
    pub ea_sign: KeyPair,
    pub ea_enc: KeyPair,
    pub po_desks: Vec<PoDesk>,
    pub evms: Vec<EvmBooth>,
    pub evm_ring: Vec<GroupElement>,
    pub po_ring: Vec<GroupElement>,
}

/// One voter's view of the election plus the retained ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoterRecord {
    pub booth: usize,
    pub voter: usize,
    pub receipt: VoterReceipt,
    pub vvpat: VvpatSlip,
    /// Ground truth, never used on the protocol path.
    pub truth_vote: u32,
    pub truth_rid: Scalar,
}

/// The complete state of a finished (simulated) election.
#[derive(Debug, Clone)]
pub struct ElectionArtifacts {
    pub config: ElectionConfig,
    pub ctx: GroupContext,
    pub parties: PartySetup,
    pub tokens: Vec<Vec<Token>>,
    pub audit_reports: Vec<AuditReport>,
    pub bb0: Bb0,
    pub voters: Vec<VoterRecord>,
    pub ledgers: Vec<BoothLedger>,
    pub bb1: Bb1,
    pub envelopes: Vec<EncryptedRecordEnvelope>,
    pub store: EaStore,
    pub bb2: Option<Bb2>,
    pub bb3: Bb3,
    pub tally: TallyResult,
}

impl ElectionArtifacts {
    pub fn expectations(&self) -> EaExpectations {
        EaExpectations {
            ea_sign_public: self.parties.ea_sign.public.clone(),
            evm_ring: self.parties.evm_ring.clone(),
            m: self.config.candidates,
        }
    }

    /// Ground-truth tally, computed outside the protocol path.
    pub fn truth_tally(&self) -> TallyResult {
        let mut counts = vec![0u64; self.config.candidates as usize];
        for v in &self.voters {
            counts[v.truth_vote as usize] += 1;
        }
        TallyResult {
            total: self.voters.len() as u64,
            counts,
        }
    }
}

/// Pre-polling attacks the tamper harness can inject into a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageAttack {
    /// Two voters receive tokens carrying the same identity (a duplicated
    /// token with fresh blinding). `same_vote` forces identical votes.
    ReplayToken { same_vote: bool },
    /// One voter's token has its printed u' corrupted.
    MalformToken,
    /// Two voters receive tokens whose rids are within m of each other.
    CollideRid,
    /// One voter's acknowledgment never reaches the polling officer.
    DropAck,
}

/// What the harness should expect after a stage attack.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub attack: StageAttack,
    /// (booth, voter) pairs affected by the attack.
    pub victims: Vec<(usize, usize)>,
    /// Whether every victim must fail, or at least one (collision clusters
    /// keep their earliest record, so which victim fails is order-dependent).
    pub all_victims_fail: bool,
    /// Whether the honest authority must flag records at ingest.
    pub expect_ea_flags: bool,
    /// Whether the universal suite must fail.
    pub expect_universal_failure: bool,
    /// Victims manifest as a missing record rather than a failing proof.
    pub expect_missing: bool,
    /// Sessions expected to abort at the EVM.
    pub expected_aborted_sessions: u32,
}

/// Token-box riggings: which voter must draw which token index.
struct Rigging {
    assignments: std::collections::HashMap<(usize, usize), usize>,
    reserved: std::collections::HashSet<(usize, usize)>,
}

impl Rigging {
    fn none() -> Self {
        Rigging {
            assignments: Default::default(),
            reserved: Default::default(),
        }
    }

    fn assign(&mut self, booth: usize, voter: usize, token_index: usize) {
        self.assignments.insert((booth, voter), token_index);
        self.reserved.insert((booth, token_index));
    }
}

pub fn run_election(config: &ElectionConfig) -> Result<ElectionArtifacts> {
    run_election_with(config, None).map(|(artifacts, _)| artifacts)
}

pub fn run_election_with(
    config: &ElectionConfig,
    attack: Option<StageAttack>,
) -> Result<(ElectionArtifacts, Option<StageOutcome>)> {
    config.validate()?;
    let master = config.master_seed();
    let ctx = GroupContext::setup(config.profile, config.backend, master)?;

    // ---- setup: party keys ------------------------------------------------
    let mut rng = derive_rng(master, "setup");
    let ea_sign = keygen(&ctx, &mut rng);
    let ea_enc = keygen(&ctx, &mut rng);
    let mut po_desks = Vec::with_capacity(config.booths);
    let mut evm_keys = Vec::with_capacity(config.booths);
    for k in 0..config.booths {
        let po_keys = keygen(&ctx, &mut rng);
        let mut nonce_seed = [0u8; 32];
        rng.fill(&mut nonce_seed);
        po_desks.push(PoDesk::new(
            format!("booth-{k}"),
            k,
            po_keys,
            nonce_seed,
        ));
        evm_keys.push(keygen(&ctx, &mut rng));
    }
    let evm_ring: Vec<GroupElement> = evm_keys.iter().map(|k| k.public.clone()).collect();
    let po_ring: Vec<GroupElement> = po_desks.iter().map(|d| d.public().clone()).collect();
    let mut evms: Vec<EvmBooth> = evm_keys
        .into_iter()
        .enumerate()
        .map(|(k, keys)| {
            EvmBooth::new(
                format!("booth-{k}"),
                k,
                keys,
                evm_ring.clone(),
                ea_sign.public.clone(),
                ea_enc.public.clone(),
                config.candidates,
            )
        })
        .collect();

    // ---- token pre-generation ---------------------------------------------
    let mut rng = derive_rng(master, "gen-tokens");
    let per_booth = config.voters_per_booth * config.token_multiple;
    let mut pregen = Vec::with_capacity(config.booths);
    for desk in &po_desks {
        let r_ps: Vec<Scalar> = (0..per_booth)
            .map(|_| ctx.random_nonzero_scalar(&mut rng))
            .collect();
        let nonce_commitments = desk.nonce_commitments(&ctx, &r_ps);
        pregen.push(BoothPregen {
            po_public: desk.public().clone(),
            r_ps,
            nonce_commitments,
        });
    }
    let (mut tokens, bb0_keys) = generate_tokens(&ctx, &ea_sign, &pregen, config.candidates, &mut rng)?;
    let bb0 = Bb0 { keys: bb0_keys };
    for (desk, booth_tokens) in po_desks.iter_mut().zip(&tokens) {
        desk.register_box(
            booth_tokens
                .iter()
                .map(|t| t.chit().expect("fresh token").brid.clone()),
        );
    }

    // ---- stage attacks on the token boxes ----------------------------------
    let mut outcome = None;
    let mut rigging = Rigging::none();
    if let Some(attack) = attack {
        outcome = Some(apply_stage_attack_to_tokens(
            &ctx,
            config,
            attack,
            &ea_sign,
            &mut tokens,
            &mut po_desks,
            &mut rigging,
        )?);
    }

    // ---- public audit of random tokens -------------------------------------
    let mut rng = derive_rng(master, "audit");
    let mut audit_reports = Vec::new();
    for (k, booth_tokens) in tokens.iter_mut().enumerate() {
        for _ in 0..config.audit_per_booth.min(booth_tokens.len()) {
            // never audit the reserved first voters_per_booth tokens so the
            // box cannot run dry mid-simulation
            let idx = rng.gen_range(config.voters_per_booth..booth_tokens.len());
            let token = &mut booth_tokens[idx];
            if token.is_audited() {
                continue;
            }
            let brid = token.chit().expect("unused token").brid.clone();
            let report = audit_token(&ctx, token, &ea_sign.public, config.candidates)?;
            po_desks[k].mark_audited(&brid);
            audit_reports.push(report);
        }
    }

    // ---- polling ------------------------------------------------------------
    let mut voters: Vec<VoterRecord> = Vec::new();
    for k in 0..config.booths {
        let mut rng = derive_rng(master, &format!("election/booth-{k}"));
        for voter in 0..config.voters_per_booth {
            let vote = match attack {
                Some(StageAttack::ReplayToken { same_vote: true })
                    if k == 0 && voter == 1 && !voters.is_empty() =>
                {
                    voters[0].truth_vote
                }
                _ => draw_vote(config, &mut rng),
            };
            // the voter picks a random unused, unaudited token (or a rigged
            // one under a stage attack)
            let pick = match rigging.assignments.get(&(k, voter)) {
                Some(&idx) => idx,
                None => {
                    let fresh: Vec<usize> = tokens[k]
                        .iter()
                        .enumerate()
                        .filter(|(i, t)| {
                            !t.is_audited()
                                && t.chit().is_some()
                                && t.secrets().is_some()
                                && !rigging.reserved.contains(&(k, *i))
                        })
                        .map(|(i, _)| i)
                        .collect();
                    fresh[rng.gen_range(0..fresh.len())]
                }
            };
            let token = &mut tokens[k][pick];
            let truth_rid = token.secrets().expect("fresh token").rid.clone();
            let u_prime_seen = token.secrets().expect("fresh token").u_prime;

            let chit = token.tear_chit()?;
            let slot = po_desks[k].receive_chit(&ctx, &chit, true)?;

            let mut session = evms[k].start_session();
            session.cast_vote(&ctx, vote, &mut rng)?;
            let commitments = token.commitments.clone();
            let secrets = token.take_secrets()?;
            let printed = match session.scan_token(&ctx, commitments, secrets) {
                Ok(p) => p,
                Err(err) => {
                    // the booth aborts this voter's session; the harness
                    // observes the abort through the EVM counter
                    drop(session);
                    if attack == Some(StageAttack::MalformToken) && k == 0 && voter == 0 {
                        continue;
                    }
                    return Err(err);
                }
            };
            // the voter checks the printed residue against the remembered u'
            let accepted = printed.w_prime == (u_prime_seen + vote) % config.candidates;
            let output = match session.acknowledge(&ctx, accepted, &mut rng) {
                Ok(out) => out,
                // declined sums abort without a recorded vote, flagged for
                // manual procedure through the EVM's abort counter
                Err(Error::AckDeclined) => continue,
                Err(err) => return Err(err),
            };
            // the acknowledgment reaches the officer on an independent channel
            let ack_dropped =
                attack == Some(StageAttack::DropAck) && k == 0 && voter == 0;
            if !ack_dropped {
                po_desks[k].record_ack(&ctx, slot)?;
            }
            voters.push(VoterRecord {
                booth: k,
                voter,
                receipt: output.receipt,
                vvpat: output.vvpat,
                truth_vote: vote,
                truth_rid,
            });
        }
    }

    // ---- close-out ------------------------------------------------------------
    let mut rng = derive_rng(master, "close");
    let mut ledgers = Vec::with_capacity(config.booths);
    let mut bb1_rows = Vec::with_capacity(config.booths);
    for k in 0..config.booths {
        let printouts = po_desks[k].ack_printouts();
        let ledger = close_booth(&ctx, &evms[k], &printouts, &mut rng)?;
        let sigma_n_k = po_desks[k].sign_count(&ctx, &po_ring, ledger.n_k, &mut rng)?;
        bb1_rows.push(Bb1Row {
            booth_label: ledger.booth_label.clone(),
            h_k: ledger.h_k,
            mu_h_k: ledger.mu_h_k.clone(),
            n_k: ledger.n_k,
            sigma_n_k,
        });
        ledgers.push(ledger);
    }
    let bb1 = Bb1 { rows: bb1_rows };

    // ---- collection and shuffling ----------------------------------------------
    let mut rng = derive_rng(master, "collect");
    let mut envelopes = collect_envelopes(&ledgers)?;
    shuffle(&mut envelopes, &mut rng);

    // ---- the election authority --------------------------------------------------
    let parties = PartySetup {
        ea_sign,
        ea_enc,
        po_desks,
        evms,
        evm_ring,
        po_ring,
    };
    let expectations = EaExpectations {
        ea_sign_public: parties.ea_sign.public.clone(),
        evm_ring: parties.evm_ring.clone(),
        m: config.candidates,
    };
    let store = ea_ingest(
        &ctx,
        &envelopes,
        &parties.ea_enc.secret,
        &bb0.keys,
        &expectations,
    );
    let (bb3, bb2) = publish_boards(&ctx, &store, config.with_bb2);
    let tally = tally(&bb3, config.candidates)?;

    Ok((
        ElectionArtifacts {
            config: config.clone(),
            ctx,
            parties,
            tokens,
            audit_reports,
            bb0,
            voters,
            ledgers,
            bb1,
            envelopes,
            store,
            bb2,
            bb3,
            tally,
        },
        outcome,
    ))
}

fn draw_vote(config: &ElectionConfig, rng: &mut ChaCha20Rng) -> u32 {
    match &config.vote_weights {
        None => rng.gen_range(0..config.candidates),
        Some(weights) => {
            let total: u64 = weights.iter().sum();
            let mut point = rng.gen_range(0..total);
            for (candidate, w) in weights.iter().enumerate() {
                if point < *w {
                    return candidate as u32;
                }
                point -= w;
            }
            unreachable!("weights sum checked at validation")
        }
    }
}

/// Mutates booth 0's token box before polling according to the chosen
/// attack and rigs which tokens the first voters draw, so deltas are
/// deterministic.
fn apply_stage_attack_to_tokens(
    ctx: &GroupContext,
    config: &ElectionConfig,
    attack: StageAttack,
    ea_sign: &KeyPair,
    tokens: &mut [Vec<Token>],
    po_desks: &mut [PoDesk],
    rigging: &mut Rigging,
) -> Result<StageOutcome> {
    use crate::sig::{blind, sign, BlindingPair};
    use crate::token::{token_certificate_message, TokenChit, TokenCommitments, TokenSecrets};

    if config.voters_per_booth < 2 {
        return Err(Error::AttackInapplicable(
            "stage attacks need at least two voters in booth 0".into(),
        ));
    }
    let mut rng = derive_rng(config.master_seed(), "stage-attack");
    match attack {
        // A dishonest pre-generation duplicates token 0's identity into a
        // second physical token with fresh blinding; voters 0 and 1 of booth
        // 0 draw the colliding pair.
        StageAttack::ReplayToken { .. } | StageAttack::CollideRid => {
            let source = tokens[0][0].clone();
            let src_secrets = source.secrets().expect("fresh").clone();
            let target = tokens[0][1].clone();
            let tgt_secrets = target.secrets().expect("fresh").clone();
            let tgt_chit = target.chit().expect("fresh").clone();

            let (rid, r_rid, c_rid, u, r_u, u_prime, c_u, lambda) =
                if attack == StageAttack::CollideRid {
                    // a fresh token whose rid lands within m of the source's
                    let rid = ctx.scalar_add(&src_secrets.rid, &ctx.scalar_from_u64(1));
                    let r_rid = ctx.random_scalar(&mut rng);
                    let c_rid = crate::commit::commit(ctx, &rid, &r_rid);
                    let c_u = target.commitments.c_u.clone();
                    let lambda = sign(
                        ctx,
                        &ea_sign.secret,
                        &token_certificate_message(ctx, &c_rid, &c_u),
                        &mut rng,
                    );
                    (
                        rid,
                        r_rid,
                        c_rid,
                        tgt_secrets.u.clone(),
                        tgt_secrets.r_u.clone(),
                        tgt_secrets.u_prime,
                        c_u,
                        lambda,
                    )
                } else {
                    // a verbatim identity copy
                    (
                        src_secrets.rid.clone(),
                        src_secrets.r_rid.clone(),
                        source.commitments.c_rid.clone(),
                        src_secrets.u.clone(),
                        src_secrets.r_u.clone(),
                        src_secrets.u_prime,
                        source.commitments.c_u.clone(),
                        source.commitments.lambda.clone(),
                    )
                };
            let blinding = BlindingPair::random(ctx, &mut rng);
            let brid = blind(
                ctx,
                &rid,
                &blinding,
                &tgt_secrets.ephemeral_pk,
                &tgt_secrets.nonce_commitment,
            );
            tokens[0][1] = Token::from_parts(
                TokenCommitments { c_rid, c_u, lambda },
                TokenSecrets {
                    r_rid,
                    r_u,
                    rid,
                    u,
                    u_prime,
                    brid: brid.clone(),
                    blinding,
                    ephemeral_pk: tgt_secrets.ephemeral_pk,
                    nonce_commitment: tgt_secrets.nonce_commitment,
                },
                TokenChit {
                    r_p: tgt_chit.r_p,
                    brid: brid.clone(),
                },
            );
            po_desks[0].register_box([brid]);
            rigging.assign(0, 0, 0);
            rigging.assign(0, 1, 1);
            Ok(StageOutcome {
                attack,
                victims: vec![(0, 0), (0, 1)],
                all_victims_fail: false,
                expect_ea_flags: true,
                expect_universal_failure: true,
                expect_missing: true,
                expected_aborted_sessions: 0,
            })
        }
        // Corrupt the printed u' on the token voter 0 draws: the EVM's
        // residue check fails at scan and the session aborts without a
        // recorded vote. Public audit flags the same token.
        StageAttack::MalformToken => {
            let victim = &mut tokens[0][0];
            let mut secrets = victim.secrets().expect("fresh").clone();
            secrets.u_prime = (secrets.u_prime + 1) % config.candidates;
            let chit = victim.chit().expect("fresh").clone();
            *victim = Token::from_parts(victim.commitments.clone(), secrets, chit);
            rigging.assign(0, 0, 0);
            Ok(StageOutcome {
                attack,
                victims: vec![(0, 0)],
                all_victims_fail: true,
                expect_ea_flags: false,
                expect_universal_failure: false,
                expect_missing: true,
                expected_aborted_sessions: 1,
            })
        }
        StageAttack::DropAck => Ok(StageOutcome {
            attack,
            victims: vec![(0, 0)],
            all_victims_fail: true,
            expect_ea_flags: false,
            expect_universal_failure: false,
            expect_missing: true,
            expected_aborted_sessions: 0,
        }),
    }
}
