use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("no nonsingular candidate within {0} draws")]
    DrawCapExceeded(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("word width {0} is not supported")]
    UnsupportedWidth(usize),
    #[error("permutation table for m = {0} exceeds the 2^16 entry limit")]
    Capacity(usize),
    #[error("word {0:#x} has no preimage")]
    NoPreimage(u32),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("malformed encoding: {0}")]
    Malformed(String),
    #[error("truncated encoding: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("parse error: {0}")]
    Parse(String),
}
