use rand::Rng;
use serde::Serialize;

use super::{bit_at, RoleAssignment};
use crate::bits::BitString;
use crate::rng::{Domain, SeedTree};

/// Every message exchanged during one NOTIFICATION run.
///
/// `shares[i][j]` is the `n`-bit block `r_ij·` sent from agent `i` to agent
/// `j` (bit `k` is `r_ijk`), `relays[j]` is `t_j·`, whose bit `k` agent `j`
/// forwards to agent `k`, and `outputs[k]` is `z_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NotificationTranscript {
    pub shares: Vec<Vec<BitString>>,
    pub relays: Vec<BitString>,
    pub outputs: Vec<u8>,
}

/// What agent `a` sees of a NOTIFICATION run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NotificationView {
    pub sent: Vec<BitString>,
    pub received: Vec<BitString>,
    pub relay: BitString,
    pub relayed_to_me: Vec<u8>,
    pub output: u8,
}

impl NotificationTranscript {
    pub fn n(&self) -> usize {
        self.outputs.len()
    }

    pub fn view(&self, agent: usize) -> NotificationView {
        let n = self.n();
        NotificationView {
            sent: self.shares[agent].clone(),
            received: (0..n).map(|i| self.shares[i][agent].clone()).collect(),
            relay: self.relays[agent].clone(),
            relayed_to_me: (0..n).map(|j| self.relays[j].get(agent)).collect(),
            output: self.outputs[agent],
        }
    }
}

fn to_bits(word: u64, n: usize) -> BitString {
    BitString::from_bits((0..n).map(|k| bit_at(word, n, k)))
}

/// Alice privately tells each agent whether it participates.
///
/// Each sender draws `n - 1` blocks uniformly and fixes the last so that the
/// column XOR over recipients equals Alice's indicator (for Alice) or zero.
pub fn notification(roles: &RoleAssignment, seeds: &SeedTree, session: u64) -> NotificationTranscript {
    let n = roles.n();
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let indicator = roles
        .participants()
        .iter()
        .fold(0u64, |acc, &p| (acc << 1) | p as u64);

    let words: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut rng = seeds.stream(Domain::Notification, i, session);
            let target = if i == roles.alice() { indicator } else { 0 };
            let mut row: Vec<u64> = (0..n - 1).map(|_| rng.random::<u64>() & mask).collect();
            let last = row.iter().fold(target, |acc, w| acc ^ w);
            row.push(last);
            row
        })
        .collect();

    let relays: Vec<u64> = (0..n).map(|j| words.iter().fold(0, |acc, row| acc ^ row[j])).collect();
    let combined = relays.iter().fold(0u64, |acc, t| acc ^ t);
    NotificationTranscript {
        shares: words.iter().map(|row| row.iter().map(|&w| to_bits(w, n)).collect()).collect(),
        relays: relays.iter().map(|&t| to_bits(t, n)).collect(),
        outputs: (0..n).map(|k| bit_at(combined, n, k)).collect(),
    }
}
