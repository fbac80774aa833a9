//! A perfectly secure three-server ORAM over XOR-shared blocks, simulated
//! in process: the servers, their storage and the wire live in a [`simnet::Net`]
//! that meters bandwidth and can record the full message trace.

pub mod block;
pub mod error;
pub mod harness;
pub mod obliv;
pub mod otm;
pub mod perm;
pub mod pos_oram;
pub mod recursive;
pub mod rng;
pub mod sharing;
pub mod simnet;

pub use error::{OramError, Result};
pub use recursive::{OramConfig, OramSystem, Request};
