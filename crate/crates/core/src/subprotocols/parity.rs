use serde::Serialize;

use super::broadcast::SimultaneousBroadcast;
use super::{bit_at, random_with_parity, MAX_AGENTS};
use crate::bits::BitString;
use crate::rng::{Domain, SeedTree};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParityOptions {
    /// Agent that never commits to the broadcast (fault injection).
    pub silent_agent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParityOutcome {
    pub y: u8,
    /// Broadcast `z_i`, one per agent.
    pub announcements: Vec<u8>,
    /// `shares[i]` is agent `i`'s random string; bit `j` went to agent `j`.
    pub shares: Vec<BitString>,
}

/// XOR of the per-agent strings; bit `j` is agent `j`'s announcement.
pub(crate) fn combine_shares(shares: &[u64]) -> u64 {
    shares.iter().fold(0, |acc, s| acc ^ s)
}

/// Global parity of the inputs without revealing any single input.
pub fn parity_protocol(inputs: &[u8], seeds: &SeedTree, session: u64, options: ParityOptions) -> Result<ParityOutcome> {
    let n = inputs.len();
    if n == 0 || n > MAX_AGENTS {
        return Err(Error::invalid(format!("agent count {n} outside 1..={MAX_AGENTS}")));
    }
    if inputs.iter().any(|&x| x > 1) {
        return Err(Error::invalid("inputs must be bits"));
    }
    let words: Vec<u64> = inputs
        .iter()
        .enumerate()
        .map(|(i, &x)| random_with_parity(&mut seeds.stream(Domain::Parity, i, session), n, x))
        .collect();
    let z = combine_shares(&words);

    let mut channel = SimultaneousBroadcast::new(n);
    for i in 0..n {
        if options.silent_agent != Some(i) {
            channel.commit(i, bit_at(z, n, i))?;
        }
    }
    let announcements = channel.reveal()?;
    let y = announcements.iter().fold(0, |acc, z| acc ^ z);
    Ok(ParityOutcome {
        y,
        announcements,
        shares: words
            .iter()
            .map(|&w| BitString::from_bits((0..n).map(|j| bit_at(w, n, j))))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subprotocols::broadcast::BroadcastError;
    use std::collections::BTreeMap;

    fn run(inputs: &[u8], session: u64) -> ParityOutcome {
        parity_protocol(inputs, &SeedTree::new(1), session, ParityOptions::default()).unwrap()
    }

    #[test]
    fn small_examples() {
        assert_eq!(run(&[0, 0, 0, 0], 0).y, 0);
        assert_eq!(run(&[1, 1, 0, 0], 0).y, 0);
        assert_eq!(run(&[1, 0, 0, 0], 0).y, 1);
    }

    #[test]
    fn exhaustive_inputs() {
        for n in 1..=5usize {
            for mask in 0u32..(1 << n) {
                let inputs: Vec<u8> = (0..n).map(|i| (mask >> i & 1) as u8).collect();
                let expect = inputs.iter().fold(0, |a, b| a ^ b);
                for session in 0..4 {
                    let out = run(&inputs, session + 100 * mask as u64);
                    assert_eq!(out.y, expect);
                    for (i, s) in out.shares.iter().enumerate() {
                        assert_eq!(s.count_ones() as u8 & 1, inputs[i]);
                    }
                }
            }
        }
    }

    #[test]
    fn random_larger_networks() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for t in 0..1000u64 {
            let n = rng.random_range(6..=40);
            let inputs: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let expect = inputs.iter().fold(0, |a, b| a ^ b);
            assert_eq!(run(&inputs, t).y, expect);
        }
    }

    #[test]
    fn announcements_are_uniform() {
        let inputs = [1u8, 0, 1, 1, 0];
        let runs = 10_000u64;
        let mut ones = [0u64; 5];
        for s in 0..runs {
            for (i, &z) in run(&inputs, s).announcements.iter().enumerate() {
                ones[i] += z as u64;
            }
        }
        let sigma = crate::stats::bernoulli_sigma(0.5, runs as usize);
        for c in ones {
            assert!((c as f64 / runs as f64 - 0.5).abs() < 4.0 * sigma, "{c}");
        }
    }

    // Enumerate every share choice: any n-1 announcements are uniform given
    // the global parity.
    #[test]
    fn exact_anonymity_by_enumeration() {
        for n in 2..=4usize {
            let strings = |p: u8| -> Vec<u64> { (0..1u64 << n).filter(|w| (w.count_ones() as u8 & 1) == p).collect() };
            for mask in 0u32..(1 << n) {
                let inputs: Vec<u8> = (0..n).map(|i| (mask >> i & 1) as u8).collect();
                let choices: Vec<Vec<u64>> = inputs.iter().map(|&x| strings(x)).collect();
                for dropped in 0..n {
                    let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
                    let mut idx = vec![0usize; n];
                    loop {
                        let words: Vec<u64> = (0..n).map(|i| choices[i][idx[i]]).collect();
                        let z = combine_shares(&words);
                        let kept = (0..n)
                            .filter(|&j| j != dropped)
                            .fold(0u64, |acc, j| (acc << 1) | bit_at(z, n, j) as u64);
                        *hist.entry(kept).or_default() += 1;
                        let mut i = 0;
                        while i < n {
                            idx[i] += 1;
                            if idx[i] < choices[i].len() {
                                break;
                            }
                            idx[i] = 0;
                            i += 1;
                        }
                        if i == n {
                            break;
                        }
                    }
                    assert_eq!(hist.len(), 1 << (n - 1));
                    let first = *hist.values().next().unwrap();
                    assert!(hist.values().all(|&c| c == first));
                }
            }
        }
    }

    #[test]
    fn silent_agent_aborts() {
        let opts = ParityOptions { silent_agent: Some(2) };
        let err = parity_protocol(&[0, 1, 0], &SeedTree::new(0), 0, opts).unwrap_err();
        assert_eq!(err, Error::Broadcast(BroadcastError::MissingCommit { agent: 2 }));
    }
}
