//! Anonymous, revocable authentication for ad-hoc networks.
//!
//! A node proves it is entitled to continue a private conversation by
//! answering a GQ identification challenge whose commitment travels inside a
//! Merkle puzzle set. Peers never learn who the node is; the issuing
//! bootstrap authority can map any identity back to its user.
//!
//! The crate is organized as:
//! - [`gqid`] - modular-arithmetic core of the GQ scheme (keys, credentials,
//!   commit / respond / verify, and the bootstrap signature primitive),
//! - [`puzzle`] - Merkle puzzle sets carrying GQ commitments,
//! - [`session`] - the three-phase initiator / responder state machines,
//! - [`bootstrap`] - the trusted issuer, conversation registry and
//!   revocation map,
//! - [`simnet`] - a deterministic simulated ad-hoc network with scripted
//!   adversaries,
//! - [`chatapp`] - the model chat workload (broadcast and private messages),
//! - [`wire`] - bit-exact frame encodings shared by everything above.

pub mod bootstrap;
pub mod chatapp;
pub mod error;
pub mod gqid;
pub mod puzzle;
pub mod session;
pub mod simnet;
pub mod wire;

pub use error::{Error, RejectReason, Result};
