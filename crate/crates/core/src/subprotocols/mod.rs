//! Classical anonymous sub-protocols: NOTIFICATION, PARITY and VOTE.
//!
//! Private pairwise channels are in-memory deliveries recorded in the
//! returned transcripts; the simultaneous broadcast is a commit-then-reveal
//! barrier ([`broadcast::SimultaneousBroadcast`]).

pub mod broadcast;
mod notification;
mod parity;
mod roles;
mod vote;

pub use notification::{notification, NotificationTranscript, NotificationView};
pub use parity::{parity_protocol, ParityOptions, ParityOutcome};
pub use roles::{RoleAssignment, MAX_AGENTS};
pub use vote::{tally_probability, vote, vote_window, VoteError, VoteOptions, VoteOutcome};

use rand::Rng;

/// Uniform `n`-bit string (agent 0 in the most significant of the `n` bits)
/// with the requested parity.
pub(crate) fn random_with_parity<R: Rng + ?Sized>(rng: &mut R, n: usize, parity: u8) -> u64 {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut w = rng.random::<u64>() & mask;
    if (w.count_ones() as u8 & 1) != (parity & 1) {
        w ^= 1; // agent n-1
    }
    w
}

/// Bit of agent `k` in an `n`-bit packed string.
#[inline]
pub(crate) fn bit_at(word: u64, n: usize, k: usize) -> u8 {
    ((word >> (n - 1 - k)) & 1) as u8
}
