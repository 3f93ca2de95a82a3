//! Simulator and analysis toolkit for anonymous private parameter estimation
//! (APPE) over an `n`-agent GHZ sensor network.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`]: dense statevector engine plus an `O(n)` honest-round sampler.
//! * [`subprotocols`]: classical NOTIFICATION, PARITY and VOTE over simulated
//!   private channels and a commit-then-reveal broadcast.
//! * [`oracles`]: stand-ins for state verification and anonymous key agreement.
//! * [`adversary`]: attack strategies attached to the protocol hooks.
//! * [`protocol`]: the end-to-end run: rounds, transcripts and reports.
//! * [`estimation`], [`privacy`], [`anonymity`]: analytic quantities and the
//!   statistical checks of integrity, privacy and anonymity.
//!
//! Agents are indexed from zero in the Rust API. Agent `k` owns bit position
//! `k` counted from the most significant bit of a basis-state index. Files
//! written for humans (run configs) use one-based agent numbers.

pub mod adversary;
pub mod anonymity;
pub mod bits;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod oracles;
pub mod privacy;
pub mod protocol;
pub mod quantum;
pub mod rng;
pub mod stats;
pub mod subprotocols;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};

/// Version tag carried by every JSON and CSV artifact.
pub const SCHEMA_VERSION: u32 = 1;
