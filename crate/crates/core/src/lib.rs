//! Firmware integrity verification on a deterministic simulated ledger.
//!
//! Firmware images are fingerprinted with SHA-256 ([`fingerprint`]), the
//! reference digest is registered with the FirmwareIntegrity contract
//! ([`contract`]) running on an in-process Ethereum-like ledger
//! ([`ledger`]), and candidates are verified against it either through a
//! free read-only call or a logged transaction. The ledger is reachable in
//! process ([`node::LocalNode`]) or over HTTP ([`gateway`]). [`anchor`]
//! commits whole fleets under a single Merkle root and [`harness`] replays
//! the threat scenarios and cost/latency measurements.

pub mod anchor;
pub mod cli;
pub mod codec;
pub mod contract;
pub mod fingerprint;
pub mod gateway;
pub mod harness;
pub mod ledger;
pub mod node;
pub mod serde_util;

pub use fingerprint::{compute_digest, digest_file, parse_hex_digest, Digest, FirmwareImage};
pub use node::{LocalNode, MiningMode, Node, NodeError};
