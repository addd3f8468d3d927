//! Crate-wide error and reject types.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Operational failures. Protocol-level rejections of an authenticated
/// message are not errors; they are reported as [`RejectReason`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus size of {0} bits is below the 16-bit minimum")]
    ModulusTooSmall(u32),
    #[error("public exponent must be odd and greater than 2")]
    BadPublicExponent,
    #[error("public exponent shares a factor with (p-1)(q-1); gave up after {0} attempts")]
    ExponentNotInvertible(u32),
    #[error("identity value shares a factor with the modulus")]
    IdentityNotInvertible,
    #[error("identity must be non-empty")]
    EmptyIdentity,
    #[error("digest must be non-empty")]
    EmptyDigest,
    #[error("nonce outside [1, N-1]")]
    NonceOutOfRange,
    #[error("challenge outside the configured range")]
    ChallengeOutOfRange,

    #[error("invalid puzzle parameters: {0}")]
    BadPuzzleParams(String),
    #[error("no key decrypts the puzzle")]
    UnsolvablePuzzle,
    #[error("solve-all budget exceeded: {0} trials requested, limit {1}")]
    BudgetExceeded(u64, u64),
    #[error("empty puzzle set")]
    EmptyPuzzleSet,

    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("truncated frame")]
    TruncatedFrame,

    #[error("bootstrap unreachable")]
    BootstrapUnreachable,
    #[error("bootstrap refused to sign: {0}")]
    SignatureDenied(String),
    #[error("init signature invalid")]
    InvalidSignature,
    #[error("unknown conversation")]
    UnknownConversation,
    #[error("conversation id mismatch")]
    ConversationMismatch,
    #[error("a challenge is already pending")]
    ChallengePending,
    #[error("puzzle id was already consumed in this conversation")]
    ReplayedPuzzle,
    #[error("no puzzle secret stored for this puzzle id")]
    UnknownPuzzle,
    #[error("puzzle id was already answered")]
    ReusedPuzzle,

    #[error("issue count must be at least 1")]
    BadIssueCount,
    #[error("conversation already registered")]
    AlreadyRegistered,
    #[error("identity was not issued by this bootstrap")]
    UnknownId,

    #[error("address already in use")]
    AddressInUse,
    #[error("broken path: {0}")]
    BrokenPath(String),
    #[error("unknown node: {0}")]
    UnknownNode(String),
    #[error("no credential available for {0}")]
    NoCredential(String),
    #[error("scenario parse error at line {line}: {message}")]
    ScenarioParse { line: usize, message: String },
    #[error("scenario error at line {line}: {message}")]
    ScenarioRun { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Why a responder rejected an authenticated message. Every failure mode of
/// `verify_and_open` maps here; none of them is an operational error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// The GQ equation J^b * v^K_P = u (mod N) did not hold.
    BadProof,
    /// The integrity tag over the sealed payload did not verify.
    BadTag,
    /// No challenge was outstanding for this conversation.
    NoPending,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RejectReason::BadProof => "bad-proof",
            RejectReason::BadTag => "bad-tag",
            RejectReason::NoPending => "no-pending",
        };
        f.write_str(s)
    }
}

impl Error {
    /// Short kebab-case tag used by scenario `expect reject:<reason>` clauses.
    pub fn reason_tag(&self) -> &'static str {
        match self {
            Error::UnsolvablePuzzle => "unsolvable-puzzle",
            Error::InvalidSignature => "invalid-signature",
            Error::UnknownConversation => "unknown-conversation",
            Error::ConversationMismatch => "conversation-mismatch",
            Error::ChallengePending => "challenge-pending",
            Error::ReplayedPuzzle => "replayed-puzzle",
            Error::UnknownPuzzle => "unknown-puzzle",
            Error::ReusedPuzzle => "reused-puzzle",
            Error::ChallengeOutOfRange => "challenge-out-of-range",
            Error::AlreadyRegistered => "already-registered",
            Error::UnknownId => "unknown-id",
            Error::AddressInUse => "address-in-use",
            Error::MalformedFrame(_) | Error::TruncatedFrame => "malformed",
            Error::BootstrapUnreachable => "bootstrap-unreachable",
            Error::SignatureDenied(_) => "signature-denied",
            Error::NoCredential(_) => "no-credential",
            Error::BrokenPath(_) => "broken-path",
            _ => "error",
        }
    }
}
