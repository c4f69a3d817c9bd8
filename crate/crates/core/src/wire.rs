//! Binary artifact framing: a fixed header declaring backend and widths,
//! followed by length-prefixed fields. Tokens, receipts and membership-proof
//! files all use this envelope so readers can reject artifacts from a
//! mismatched group context.

use crate::group::{BackendId, GroupContext};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"VBA1";

/// What a binary artifact contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactKind {
    Token = 1,
    Receipt = 2,
    MembershipProof = 3,
}

impl ArtifactKind {
    fn from_u8(v: u8) -> Result<Self> {
        match v {
            1 => Ok(ArtifactKind::Token),
            2 => Ok(ArtifactKind::Receipt),
            3 => Ok(ArtifactKind::MembershipProof),
            other => Err(Error::BadEncoding(format!("unknown artifact kind {other}"))),
        }
    }
}

/// Declares the backend and the fixed scalar/element widths of the artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactHeader {
    pub kind: ArtifactKind,
    pub backend: BackendId,
    pub scalar_width: u16,
    pub element_width: u16,
}

impl ArtifactHeader {
    pub fn for_ctx(kind: ArtifactKind, ctx: &GroupContext) -> Self {
        ArtifactHeader {
            kind,
            backend: ctx.backend(),
            scalar_width: ctx.scalar_width() as u16,
            element_width: ctx.element_width() as u16,
        }
    }

    pub fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.push(self.kind as u8);
        out.push(match self.backend {
            BackendId::Mock => 0,
            BackendId::Production => 1,
        });
        out.extend_from_slice(&self.scalar_width.to_be_bytes());
        out.extend_from_slice(&self.element_width.to_be_bytes());
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self> {
        let magic = r.fixed(4)?;
        if magic != MAGIC {
            return Err(Error::BadEncoding("bad artifact magic".into()));
        }
        let kind = ArtifactKind::from_u8(r.u8()?)?;
        let backend = match r.u8()? {
            0 => BackendId::Mock,
            1 => BackendId::Production,
            other => return Err(Error::BadEncoding(format!("unknown backend byte {other}"))),
        };
        let scalar_width = r.u16()?;
        let element_width = r.u16()?;
        Ok(ArtifactHeader {
            kind,
            backend,
            scalar_width,
            element_width,
        })
    }

    /// Rejects artifacts whose declared backend or widths differ from `ctx`.
    pub fn check(&self, ctx: &GroupContext, kind: ArtifactKind) -> Result<()> {
        let expected = ArtifactHeader::for_ctx(kind, ctx);
        if *self != expected {
            return Err(Error::HeaderMismatch(format!(
                "artifact declares {:?}, context expects {:?}",
                self, expected
            )));
        }
        Ok(())
    }
}

/// Appends a u32-BE length prefix and the field bytes.
pub fn put_field(out: &mut Vec<u8>, field: &[u8]) {
    out.extend_from_slice(&(field.len() as u32).to_be_bytes());
    out.extend_from_slice(field);
}

/// Sequential reader over a byte slice.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn fixed(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::BadEncoding("truncated artifact".into()));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.fixed(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.fixed(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.fixed(4)?.try_into().unwrap()))
    }

    /// Reads one length-prefixed field.
    pub fn field(&mut self) -> Result<&'a [u8]> {
        let len = self.u32()? as usize;
        self.fixed(len)
    }

    /// Errors unless the whole buffer has been consumed.
    pub fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::BadEncoding("trailing bytes in artifact".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::SecurityProfile;

    #[test]
    fn header_round_trip_and_mismatch() {
        let ctx = GroupContext::setup_group(SecurityProfile::Toy, b"x").unwrap();
        let header = ArtifactHeader::for_ctx(ArtifactKind::Token, &ctx);
        let mut buf = Vec::new();
        header.write(&mut buf);
        put_field(&mut buf, b"payload");
        let mut r = Reader::new(&buf);
        let parsed = ArtifactHeader::read(&mut r).unwrap();
        assert_eq!(parsed, header);
        assert_eq!(r.field().unwrap(), b"payload");
        r.finish().unwrap();

        parsed.check(&ctx, ArtifactKind::Token).unwrap();
        assert!(parsed.check(&ctx, ArtifactKind::Receipt).is_err());
        let mock = GroupContext::setup_mock(SecurityProfile::Toy, b"x").unwrap();
        assert!(parsed.check(&mock, ArtifactKind::Token).is_err());
    }
}
