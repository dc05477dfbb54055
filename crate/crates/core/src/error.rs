use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// An instance or one of its parts failed validation.
    #[error("invalid instance: {0}")]
    Validation(String),

    /// An operation that requires a complete plan received a partial one.
    #[error("incomplete plan")]
    IncompletePlan,

    /// A pattern has more blocks than there are users.
    #[error("pattern unrealisable: {blocks} blocks but only {users} users")]
    PatternUnrealisable { blocks: usize, users: u32 },

    /// An exhaustive computation was refused because the instance exceeds
    /// its size guard.
    #[error("instance too large for {what}: {detail}")]
    TooLarge { what: &'static str, detail: String },

    /// The requested export cannot represent the instance.
    #[error("not MIP-encodable: {0}")]
    Unsupported(String),

    /// An instance file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// The MIP cross-check found an inconsistent row.
    #[error("MIP consistency failure in row {row}: {detail}")]
    MipInconsistent { row: String, detail: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
