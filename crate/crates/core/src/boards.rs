//! The four public bulletin boards and their file format.
//!
//! Every board file is a header line followed by one record per line, fields
//! hex-encoded and pipe-separated. The header declares the backend, the
//! scalar and element widths, the candidate count, and a SHA-256 of the body;
//! readers refuse files whose header does not match their group context or
//! whose body hash fails.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commit::Commitment;
use crate::group::{BackendId, GroupContext, GroupElement, Scalar};
use crate::sig::{BlindSig, RecordHash, RingSig};
use crate::{Error, Result};

const FORMAT_TAG: &str = "veribooth-board/1";

/// BB0: the ephemeral acknowledgment keys of all booths, in random order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bb0 {
    pub keys: Vec<GroupElement>,
}

/// BB1: one row per booth with the signed XOR aggregate and count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bb1Row {
    pub booth_label: String,
    pub h_k: RecordHash,
    pub mu_h_k: RingSig,
    pub n_k: u32,
    pub sigma_n_k: RingSig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bb1 {
    pub rows: Vec<Bb1Row>,
}

/// BB2 (optional): `[C_rid, w]` pairs sorted by the serialized commitment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bb2Row {
    pub c_rid: Commitment,
    #[serde(with = "crate::hexbig")]
    pub w: BigUint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bb2 {
    pub rows: Vec<Bb2Row>,
}

/// A polling-officer acknowledgment as published: the unblinded signature
/// together with the ephemeral key it verifies under (the key must appear on
/// BB0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AckSig {
    pub key: GroupElement,
    pub sig: BlindSig,
}

impl AckSig {
    pub fn to_bytes(&self, ctx: &GroupContext) -> Vec<u8> {
        let mut out = ctx.element_to_bytes(&self.key);
        out.extend_from_slice(&self.sig.to_bytes(ctx));
        out
    }

    pub fn from_bytes(ctx: &GroupContext, bytes: &[u8]) -> Result<AckSig> {
        let ew = ctx.element_width();
        let sw = ctx.scalar_width();
        if bytes.len() != ew + 2 * sw {
            return Err(Error::BadEncoding("acknowledgment signature length".into()));
        }
        Ok(AckSig {
            key: ctx.element_from_bytes(&bytes[..ew])?,
            sig: BlindSig::from_bytes(ctx, &bytes[ew..])?,
        })
    }
}

/// BB3: the full tally table, sorted by rid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bb3Row {
    pub rid: Scalar,
    pub vote: u32,
    /// `rid + vote mod q`; column three, the set Phi.
    pub rho: Scalar,
    pub h: RecordHash,
    pub mu_h: RingSig,
    pub sigma_ack: AckSig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bb3 {
    pub rows: Vec<Bb3Row>,
}

impl Bb3 {
    /// Column one: the rid set Psi.
    pub fn psi(&self) -> Vec<Scalar> {
        self.rows.iter().map(|r| r.rid.clone()).collect()
    }

    /// Column three: the rho set Phi.
    pub fn phi(&self) -> Vec<Scalar> {
        self.rows.iter().map(|r| r.rho.clone()).collect()
    }
}

// ---- text format -------------------------------------------------------------

fn header_line(board: &str, ctx: &GroupContext, m: u32, body: &str) -> String {
    let digest = Sha256::digest(body.as_bytes());
    format!(
        "{FORMAT_TAG} board={board} backend={} qwidth={} ewidth={} m={m} sha256={}",
        ctx.backend().as_str(),
        ctx.scalar_width(),
        ctx.element_width(),
        hex::encode(digest),
    )
}

fn parse_header(line: &str, board: &str, ctx: &GroupContext, body: &str) -> Result<u32> {
    let mut parts = line.split(' ');
    if parts.next() != Some(FORMAT_TAG) {
        return Err(Error::BoardFormat("missing format tag".into()));
    }
    let mut fields = std::collections::HashMap::new();
    for part in parts {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::BoardFormat(format!("bad header token {part:?}")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| {
        fields
            .get(k)
            .cloned()
            .ok_or_else(|| Error::BoardFormat(format!("header missing {k}")))
    };
    if get("board")? != board {
        return Err(Error::HeaderMismatch(format!(
            "expected board {board}, file says {}",
            get("board")?
        )));
    }
    let backend: BackendId = get("backend")?.parse()?;
    let qwidth: usize = get("qwidth")?
        .parse()
        .map_err(|_| Error::BoardFormat("qwidth not a number".into()))?;
    let ewidth: usize = get("ewidth")?
        .parse()
        .map_err(|_| Error::BoardFormat("ewidth not a number".into()))?;
    if backend != ctx.backend() || qwidth != ctx.scalar_width() || ewidth != ctx.element_width() {
        return Err(Error::HeaderMismatch(format!(
            "file is for backend={} qwidth={qwidth} ewidth={ewidth}, context has backend={} qwidth={} ewidth={}",
            backend.as_str(),
            ctx.backend().as_str(),
            ctx.scalar_width(),
            ctx.element_width(),
        )));
    }
    let m: u32 = get("m")?
        .parse()
        .map_err(|_| Error::BoardFormat("m not a number".into()))?;
    let declared = get("sha256")?;
    let actual = hex::encode(Sha256::digest(body.as_bytes()));
    if declared != actual {
        return Err(Error::BoardFormat("body hash mismatch".into()));
    }
    Ok(m)
}

fn split_board(text: &str) -> Result<(&str, &str)> {
    match text.split_once('\n') {
        Some((header, body)) => Ok((header, body)),
        None => Ok((text, "")),
    }
}

fn hex_field(s: &str) -> Result<Vec<u8>> {
    hex::decode(s).map_err(|e| Error::BoardFormat(format!("bad hex field: {e}")))
}

fn u32_field(s: &str) -> Result<u32> {
    let bytes = hex_field(s)?;
    let arr: [u8; 4] = bytes
        .as_slice()
        .try_into()
        .map_err(|_| Error::BoardFormat("expected 4-byte integer field".into()))?;
    Ok(u32::from_be_bytes(arr))
}

impl Bb0 {
    pub fn to_text(&self, ctx: &GroupContext, m: u32) -> String {
        let body: String = self
            .keys
            .iter()
            .map(|k| format!("{}\n", hex::encode(ctx.element_to_bytes(k))))
            .collect();
        format!("{}\n{}", header_line("bb0", ctx, m, &body), body)
    }

    pub fn from_text(ctx: &GroupContext, m: u32, text: &str) -> Result<Bb0> {
        let (header, body) = split_board(text)?;
        let file_m = parse_header(header, "bb0", ctx, body)?;
        if file_m != m {
            return Err(Error::HeaderMismatch(format!("m={file_m}, expected {m}")));
        }
        let keys = body
            .lines()
            .map(|line| ctx.element_from_bytes(&hex_field(line)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Bb0 { keys })
    }
}

impl Bb1 {
    pub fn to_text(&self, ctx: &GroupContext, m: u32) -> String {
        let body: String = self
            .rows
            .iter()
            .map(|r| {
                format!(
                    "{}|{}|{}|{}|{}\n",
                    hex::encode(r.booth_label.as_bytes()),
                    r.h_k.to_hex(),
                    hex::encode(r.mu_h_k.to_bytes(ctx)),
                    hex::encode(r.n_k.to_be_bytes()),
                    hex::encode(r.sigma_n_k.to_bytes(ctx)),
                )
            })
            .collect();
        format!("{}\n{}", header_line("bb1", ctx, m, &body), body)
    }

    pub fn from_text(ctx: &GroupContext, m: u32, text: &str) -> Result<Bb1> {
        let (header, body) = split_board(text)?;
        let file_m = parse_header(header, "bb1", ctx, body)?;
        if file_m != m {
            return Err(Error::HeaderMismatch(format!("m={file_m}, expected {m}")));
        }
        let rows = body
            .lines()
            .map(|line| {
                let fields: Vec<&str> = line.split('|').collect();
                if fields.len() != 5 {
                    return Err(Error::BoardFormat("bb1 row needs 5 fields".into()));
                }
                Ok(Bb1Row {
                    booth_label: String::from_utf8(hex_field(fields[0])?)
                        .map_err(|_| Error::BoardFormat("booth label not utf-8".into()))?,
                    h_k: RecordHash::from_hex(fields[1])?,
                    mu_h_k: RingSig::from_bytes(ctx, &hex_field(fields[2])?)?,
                    n_k: u32_field(fields[3])?,
                    sigma_n_k: RingSig::from_bytes(ctx, &hex_field(fields[4])?)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Bb1 { rows })
    }
}

impl Bb2 {
    pub fn to_text(&self, ctx: &GroupContext, m: u32) -> String {
        let body: String = self
            .rows
            .iter()
            .map(|r| {
                format!(
                    "{}|{}\n",
                    hex::encode(r.c_rid.to_bytes(ctx)),
                    hex::encode(r.w.to_bytes_be()),
                )
            })
            .collect();
        format!("{}\n{}", header_line("bb2", ctx, m, &body), body)
    }

    pub fn from_text(ctx: &GroupContext, m: u32, text: &str) -> Result<Bb2> {
        let (header, body) = split_board(text)?;
        let file_m = parse_header(header, "bb2", ctx, body)?;
        if file_m != m {
            return Err(Error::HeaderMismatch(format!("m={file_m}, expected {m}")));
        }
        let rows = body
            .lines()
            .map(|line| {
                let fields: Vec<&str> = line.split('|').collect();
                if fields.len() != 2 {
                    return Err(Error::BoardFormat("bb2 row needs 2 fields".into()));
                }
                Ok(Bb2Row {
                    c_rid: Commitment::from_bytes(ctx, &hex_field(fields[0])?)?,
                    w: BigUint::from_bytes_be(&hex_field(fields[1])?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Bb2 { rows })
    }
}

impl Bb3 {
    pub fn to_text(&self, ctx: &GroupContext, m: u32) -> String {
        let body: String = self
            .rows
            .iter()
            .map(|r| {
                format!(
                    "{}|{}|{}|{}|{}|{}\n",
                    hex::encode(ctx.scalar_to_bytes(&r.rid)),
                    hex::encode(r.vote.to_be_bytes()),
                    hex::encode(ctx.scalar_to_bytes(&r.rho)),
                    r.h.to_hex(),
                    hex::encode(r.mu_h.to_bytes(ctx)),
                    hex::encode(r.sigma_ack.to_bytes(ctx)),
                )
            })
            .collect();
        format!("{}\n{}", header_line("bb3", ctx, m, &body), body)
    }

    pub fn from_text(ctx: &GroupContext, m: u32, text: &str) -> Result<Bb3> {
        let (header, body) = split_board(text)?;
        let file_m = parse_header(header, "bb3", ctx, body)?;
        if file_m != m {
            return Err(Error::HeaderMismatch(format!("m={file_m}, expected {m}")));
        }
        let rows = body
            .lines()
            .map(|line| {
                let fields: Vec<&str> = line.split('|').collect();
                if fields.len() != 6 {
                    return Err(Error::BoardFormat("bb3 row needs 6 fields".into()));
                }
                Ok(Bb3Row {
                    rid: ctx.scalar_from_bytes(&hex_field(fields[0])?)?,
                    vote: u32_field(fields[1])?,
                    rho: ctx.scalar_from_bytes(&hex_field(fields[2])?)?,
                    h: RecordHash::from_hex(fields[3])?,
                    mu_h: RingSig::from_bytes(ctx, &hex_field(fields[4])?)?,
                    sigma_ack: AckSig::from_bytes(ctx, &hex_field(fields[5])?)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Bb3 { rows })
    }
}
