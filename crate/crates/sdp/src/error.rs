use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("entry refers to block {block}, but the problem has {count} blocks")]
    UnknownBlock { block: usize, count: usize },
    #[error("entry ({row}, {col}) is outside block {block} of size {size}")]
    EntryOutOfRange {
        block: usize,
        row: usize,
        col: usize,
        size: usize,
    },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("malformed triplet file at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
