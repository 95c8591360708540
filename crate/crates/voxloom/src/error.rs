//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A decoder or session configuration violates one of its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An operation was called with arguments outside its contract.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An active reward component has no weight assigned.
    #[error("no weight configured for active reward component `{0}`")]
    MissingWeight(String),

    /// A token store file is malformed.
    #[error("malformed token store: {0}")]
    StoreFormat(String),

    /// A token store record failed its CRC-32 check.
    #[error("token store record `{id}` failed checksum verification")]
    StoreCorrupt { id: String },

    /// Lookup of a record id that is not present in the store.
    #[error("unknown record id `{0}`")]
    UnknownRecordId(String),

    /// Two records in one pack request share an id.
    #[error("duplicate record id `{0}`")]
    DuplicateRecordId(String),

    /// A malformed frame or request on the streaming wire.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }
}
