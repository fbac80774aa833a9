use thiserror::Error;

use crate::simnet::ServerId;

/// Errors raised by the simulated network and the protocols running on it.
///
/// Nearly all of these indicate a protocol bug or a violated precondition on
/// the client side; the servers never observe them.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OramError {
    #[error("block width mismatch: expected {expected} bytes, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("index {index} out of range for array of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("server {server} holds no array in slot {slot}")]
    UnknownArray { server: ServerId, slot: u32 },

    #[error("malformed block encoding: {0}")]
    Decode(String),

    #[error("one-time memory capacity of {capacity} lookups exhausted")]
    CapacityExhausted { capacity: usize },

    #[error("physical index {index} on server {server} was read twice in one epoch")]
    NonRecurrence { server: ServerId, index: usize },

    #[error("address {addr} out of range for capacity {capacity}")]
    AddressOutOfRange { addr: u64, capacity: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = OramError> = std::result::Result<T, E>;

/// Bail out with an [`OramError::Invariant`] when `cond` does not hold.
macro_rules! ensure_invariant {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::OramError::Invariant(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure_invariant;
