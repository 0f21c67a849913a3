use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {lhs} is {lhs_shape:?}, {rhs} is {rhs_shape:?}")]
    Dimension {
        op: &'static str,
        lhs: &'static str,
        lhs_shape: (usize, usize),
        rhs: &'static str,
        rhs_shape: (usize, usize),
    },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("spec error: {0}")]
    Spec(String),
    #[error("label {label} out of range for {classes} classes at frame {frame}")]
    Label { frame: usize, label: usize, classes: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown factor `{name}`; available factors: {available:?}")]
    UnknownFactor { name: String, available: Vec<String> },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Failures while reading checkpoint or corpus bytes.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("truncated input while reading {0}")]
    Truncated(&'static str),
    #[error("malformed field {0}")]
    Malformed(&'static str),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn spec(msg: impl Into<String>) -> Self {
        Error::Spec(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
