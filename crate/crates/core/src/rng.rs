//! Reproducible randomness.
//!
//! A run owns a single root seed. Every consumer asks for a stream keyed by
//! `(domain, agent, round)`; the key picks a ChaCha8 seed from
//! `(root, domain, agent)` and the ChaCha stream id from `round`. Streams are
//! therefore independent of the order in which agents or rounds are visited.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent purposes that draw randomness during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Notification = 1,
    Parity = 2,
    Vote = 3,
    KeyAgreement = 4,
    Verification = 5,
    Measurement = 6,
    AgentPrivate = 7,
    Adversary = 8,
    Sampling = 9,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    root: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// Child tree for an independent replicate (seed sweeps, Monte Carlo trials).
    pub fn child(&self, index: u64) -> SeedTree {
        let mut s = self.root ^ 0x5eed_0000_0000_0000 ^ index.rotate_left(17);
        splitmix64(&mut s);
        SeedTree { root: splitmix64(&mut s) }
    }

    pub fn stream(&self, domain: Domain, agent: usize, round: u64) -> StreamRng {
        let mut state = self.root;
        state ^= (domain as u64).wrapping_mul(0xa076_1d64_78bd_642f);
        splitmix64(&mut state);
        state ^= (agent as u64).wrapping_mul(0xe703_7ed1_a0b4_28db);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(round);
        rng
    }
}
