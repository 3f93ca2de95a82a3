use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use super::broadcast::{BroadcastError, SimultaneousBroadcast};
use super::{bit_at, random_with_parity, MAX_AGENTS};
use crate::bits::BitString;
use crate::rng::{Domain, SeedTree};
use crate::{Error as CrateError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoteOptions {
    /// Parity rounds per candidate (`s`).
    pub rounds: usize,
    pub silent_agent: Option<usize>,
}

impl VoteOptions {
    pub fn new(rounds: usize) -> Self {
        Self { rounds, silent_agent: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoteOutcome {
    /// `(y[0], y[1])`.
    pub tally: [usize; 2],
    pub sigma: [f64; 2],
    /// Phase B broadcasts, indexed `[candidate][agent]`, one bit per round.
    pub broadcasts: [Vec<BitString>; 2],
}

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum VoteError {
    #[error("broadcast failed: {0}")]
    Broadcast(
        #[from]
        #[serde(serialize_with = "display")]
        BroadcastError,
    ),
    #[error("no tally value fits sigma = {sigma} for candidate {candidate}")]
    NoTally { candidate: u8, sigma: f64 },
    #[error("tally for candidate {candidate} is ambiguous (sigma = {sigma}, values {values:?})")]
    Ambiguous { candidate: u8, sigma: f64, values: Vec<usize> },
    #[error("tally {tally:?} does not sum to {n}")]
    TallyMismatch { tally: [usize; 2], n: usize },
}

fn display<S: serde::Serializer>(e: &BroadcastError, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(e)
}

/// Probability that one masked parity round is odd when `v` agents vote for
/// the candidate.
pub fn tally_probability(n: usize, v: usize) -> f64 {
    let r = (n as f64 - 2.0) / n as f64;
    0.5 * (1.0 - r.powi(v as i32))
}

/// Half-width of the acceptance window around each `p_v`.
pub fn vote_window(n: usize) -> f64 {
    1.0 / (2.0 * std::f64::consts::E.powi(2) * n as f64)
}

fn decode(n: usize, candidate: u8, sigma: f64) -> std::result::Result<usize, VoteError> {
    let w = vote_window(n);
    let values: Vec<usize> = (0..=n)
        .filter(|&v| (sigma - tally_probability(n, v)).abs() < w)
        .collect();
    match values.as_slice() {
        [] => Err(VoteError::NoTally { candidate, sigma }),
        [v] => Ok(*v),
        _ => Err(VoteError::Ambiguous { candidate, sigma, values }),
    }
}

/// Anonymous two-candidate tally.
///
/// `Err(CrateError)` signals bad arguments; `Ok(Err(VoteError))` is a
/// protocol abort.
pub fn vote(
    choices: &[u8],
    options: VoteOptions,
    seeds: &SeedTree,
    session: u64,
) -> Result<std::result::Result<VoteOutcome, VoteError>> {
    let n = choices.len();
    if n == 0 || n > MAX_AGENTS {
        return Err(CrateError::invalid(format!("agent count {n} outside 1..={MAX_AGENTS}")));
    }
    if options.rounds == 0 {
        return Err(CrateError::invalid("vote needs at least one round"));
    }
    if choices.iter().any(|&x| x > 1) {
        return Err(CrateError::invalid("choices must be bits"));
    }
    let s = options.rounds;
    let mask_p = 1.0 / n as f64;

    let mut sigma = [0.0; 2];
    let mut broadcasts: [Vec<BitString>; 2] = Default::default();
    for b in 0..2u8 {
        // Phase A
        let mut rngs: Vec<_> = (0..n)
            .map(|i| seeds.stream(Domain::Vote, i, session * 2 + b as u64))
            .collect();
        let mut stored: Vec<BitString> = (0..n).map(|_| BitString::with_capacity(s)).collect();
        for _ in 0..s {
            let mut z = 0u64;
            for (i, rng) in rngs.iter_mut().enumerate() {
                let p = choices[i] == b && rng.random_bool(mask_p);
                z ^= random_with_parity(rng, n, p as u8);
            }
            for (i, bits) in stored.iter_mut().enumerate() {
                bits.push(bit_at(z, n, i));
            }
        }

        // Phase B
        let mut channel = SimultaneousBroadcast::new(n);
        for (i, bits) in stored.into_iter().enumerate() {
            if options.silent_agent != Some(i) {
                if let Err(e) = channel.commit(i, bits) {
                    return Ok(Err(e.into()));
                }
            }
        }
        let revealed = match channel.reveal() {
            Ok(r) => r,
            Err(e) => return Ok(Err(e.into())),
        };

        // Phase C
        let odd = (0..s)
            .filter(|&j| revealed.iter().fold(0, |acc, bits| acc ^ bits.get(j)) == 1)
            .count();
        sigma[b as usize] = odd as f64 / s as f64;
        broadcasts[b as usize] = revealed;
    }

    let mut tally = [0usize; 2];
    for b in 0..2u8 {
        match decode(n, b, sigma[b as usize]) {
            Ok(v) => tally[b as usize] = v,
            Err(e) => return Ok(Err(e)),
        }
    }
    if tally[0] + tally[1] != n {
        return Ok(Err(VoteError::TallyMismatch { tally, n }));
    }
    Ok(Ok(VoteOutcome { tally, sigma, broadcasts }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_probability_shape() {
        for n in 3..12 {
            assert_eq!(tally_probability(n, 0), 0.0);
            for v in 0..n {
                assert!(tally_probability(n, v + 1) > tally_probability(n, v));
            }
        }
        assert!((tally_probability(6, 4) - 0.401_234_567_901_234_6).abs() < 1e-15);
    }

    #[test]
    fn printed_form_simplifies() {
        for n in 3..10usize {
            for v in 0..=n {
                let r = (n as f64 - 2.0) / n as f64;
                let printed = 0.5 * r.powi(v as i32) * ((1.0 / r).powi(v as i32) - 1.0);
                assert!((printed - tally_probability(n, v)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decodes_exact_probabilities() {
        for n in 3..8 {
            for v in 0..=n {
                if let Ok(got) = decode(n, 1, tally_probability(n, v)) {
                    assert_eq!(got, v);
                }
            }
        }
        assert_eq!(decode(6, 0, 0.0), Ok(0));
        assert!(matches!(decode(6, 0, 0.9), Err(VoteError::NoTally { .. })));
    }

    #[test]
    fn ambiguous_window_aborts() {
        // Consecutive p_v close together at large v for n = 6.
        let n = 6;
        let mid = 0.5 * (tally_probability(n, 5) + tally_probability(n, 6));
        assert!(matches!(decode(n, 1, mid), Err(VoteError::Ambiguous { .. })));
    }

    #[test]
    fn long_vote_counts_correctly() {
        let choices = [0u8, 1, 1, 1, 0, 1];
        let out = vote(&choices, VoteOptions::new(20_000), &SeedTree::new(42), 0).unwrap().unwrap();
        assert_eq!(out.tally, [2, 4]);
        assert_eq!(out.broadcasts[1][3].len(), 20_000);
    }

    #[test]
    fn silent_agent_aborts() {
        let opts = VoteOptions { rounds: 10, silent_agent: Some(1) };
        let out = vote(&[1, 0, 1], opts, &SeedTree::new(0), 0).unwrap();
        assert_eq!(out, Err(VoteError::Broadcast(BroadcastError::MissingCommit { agent: 1 })));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(vote(&[], VoteOptions::new(1), &SeedTree::new(0), 0).is_err());
        assert!(vote(&[0, 1], VoteOptions::new(0), &SeedTree::new(0), 0).is_err());
        assert!(vote(&[0, 2], VoteOptions::new(1), &SeedTree::new(0), 0).is_err());
    }
}
