use thiserror::Error;

/// Errors surfaced by the protocol library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported security profile: {0}")]
    UnsupportedProfile(String),
    #[error("setup seed must be nonempty")]
    EmptySeed,
    #[error("pairing unavailable on a non-pairing backend")]
    PairingUnavailable,
    #[error("element is not a member of the group")]
    NotInGroup,
    #[error("mixed elements from different group contexts")]
    ContextMismatch,
    #[error("bad encoding: {0}")]
    BadEncoding(String),
    #[error("scalar encoding out of range")]
    ScalarOutOfRange,
    #[error("denominator is zero in the exponent group; re-draw key or message")]
    ZeroDenominator,
    #[error("blinding factor malformed")]
    MalformedBlinding,
    #[error("signature verification failed: {0}")]
    SignatureInvalid(String),
    #[error("ring index {index} out of range for ring of {len}")]
    RingIndexOutOfRange { index: usize, len: usize },
    #[error("ring member secret does not match the public key at its index")]
    RingKeyMismatch,
    #[error("ciphertext authentication tag mismatch")]
    TagMismatch,
    #[error("malformed ciphertext: {0}")]
    MalformedCiphertext(String),
    #[error("vote {v} out of range for {m} candidates")]
    VoteOutOfRange { v: u32, m: u32 },
    #[error("duplicate element in membership set")]
    DuplicateSetElement,
    #[error("committed value is not in the membership set")]
    NotInSet,
    #[error("token rejected: {0}")]
    TokenRejected(String),
    #[error("token is not freshly drawn (already used or audited)")]
    TokenNotFresh,
    #[error("voter identity not verified")]
    IdentityUnverified,
    #[error("session phase error: cannot {action} in phase {phase}")]
    PhaseOrder {
        action: &'static str,
        phase: &'static str,
    },
    #[error("voter declined the printed sum; session aborted without a recorded vote")]
    AckDeclined,
    #[error("no record indexed by that commitment")]
    UnknownCommitment,
    #[error("bulletin board format error: {0}")]
    BoardFormat(String),
    #[error("artifact header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("attack not applicable: {0}")]
    AttackInapplicable(String),
    #[error("missing or corrupt input for stage {stage}: {detail}")]
    StageInput { stage: &'static str, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
