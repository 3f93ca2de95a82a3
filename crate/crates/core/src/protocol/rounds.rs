use rand::Rng;

use super::config::Mutation;
use super::transcript::{RoundKind, RoundRecord};
use crate::adversary::{AttackSpec, RoundContext};
use crate::oracles::TargetState;
use crate::quantum::{complement, sample_ghz_phase_fastpath, OutcomeVector};
use crate::rng::{Domain, SeedTree};
use crate::Result;

/// Fixed per-run inputs to every round.
#[derive(Debug, Clone)]
pub struct RoundEnv {
    pub n: usize,
    pub alice: usize,
    /// `θ_i / m` per agent, zero for non-participants.
    pub angles: Vec<f64>,
    pub attack: AttackSpec,
    pub mutation: Option<Mutation>,
}

impl RoundEnv {
    pub fn new(n: usize, alice: usize, angles: Vec<f64>, attack: AttackSpec, mutation: Option<Mutation>) -> Self {
        Self { n, alice, angles, attack, mutation }
    }

    /// Honest agents in agent order, then delayed dishonest agents.
    fn announce_order(&self) -> Vec<usize> {
        if self.attack.delayed() {
            let mut order: Vec<usize> = (0..self.n).filter(|&a| !self.attack.is_dishonest(a)).collect();
            order.extend(self.attack.dishonest.iter().copied());
            order
        } else {
            (0..self.n).collect()
        }
    }
}

fn encode_phases(state: TargetState, env: &RoundEnv) -> Result<TargetState> {
    Ok(match state {
        TargetState::Ghz { n, phase } => TargetState::Ghz { n, phase: phase + env.angles.iter().sum::<f64>() },
        TargetState::Dense(mut s) => {
            for (agent, &angle) in env.angles.iter().enumerate() {
                if angle != 0.0 {
                    s = s.apply_phase_angle(agent, angle)?;
                }
            }
            TargetState::Dense(s)
        }
    })
}

fn measure<R: Rng + ?Sized>(state: &TargetState, env: &RoundEnv, rng: &mut R) -> Result<Vec<u8>> {
    match state {
        TargetState::Ghz { n, phase } => Ok(sample_ghz_phase_fastpath(*n, *phase, rng)?.bits().to_vec()),
        TargetState::Dense(s) => {
            if env.attack.delayed() && !env.attack.dishonest.is_empty() {
                // honest agents first; the dishonest ones measure what is left
                let mut late = env.attack.dishonest.clone();
                late.sort_unstable();
                let early = complement(env.n, &late);
                let mut bits = vec![0u8; env.n];
                let (first, residual) = s.measure_x_subset(&early, rng)?;
                for (&a, &b) in early.iter().zip(first.bits()) {
                    bits[a] = b;
                }
                if let Some(rest) = residual {
                    for (&a, &b) in late.iter().zip(rest.measure_x_all(rng).bits()) {
                        bits[a] = b;
                    }
                }
                Ok(bits)
            } else {
                Ok(s.measure_x_all(rng).bits().to_vec())
            }
        }
    }
}

fn run_round(
    kind: RoundKind,
    state: TargetState,
    env: &RoundEnv,
    round: usize,
    ctx: RoundContext,
    seeds: &SeedTree,
) -> Result<RoundRecord> {
    let r = round as u64;
    let mut adv_rng = seeds.stream(Domain::Adversary, 0, r);
    let state = env.attack.hook_on_source(state)?;
    let state = match kind {
        RoundKind::Pe => encode_phases(state, env)?,
        RoundKind::Pv => state,
    };
    let (state, mut triggered) = env.attack.hook_local_unitaries(state, ctx, &mut adv_rng)?;
    let outcomes = measure(&state, env, &mut seeds.stream(Domain::Measurement, 0, r))?;

    let mut announced = vec![0u8; env.n];
    let mut heard = Vec::with_capacity(env.n);
    let order = env.announce_order();
    for (pos, &a) in order.iter().enumerate() {
        let bit = if a == env.alice {
            match env.mutation {
                Some(Mutation::AliceTrueBit) => outcomes[a],
                None => u8::from(seeds.stream(Domain::AgentPrivate, a, r).random::<bool>()),
            }
        } else if env.attack.is_dishonest(a) {
            let last = pos + 1 == order.len();
            let (bit, fired) = env.attack.hook_on_announce(a, outcomes[a], &heard, last, ctx, &mut adv_rng);
            triggered |= fired;
            bit
        } else {
            outcomes[a]
        };
        announced[a] = bit;
        heard.push(bit);
    }

    let others = (0..env.n).filter(|&a| a != env.alice).fold(0, |acc, a| acc ^ announced[a]);
    let alice_true = outcomes[env.alice];
    Ok(RoundRecord {
        round,
        kind,
        announcements: OutcomeVector::new(announced)?,
        alice_true_outcome: alice_true,
        result_bit: others ^ alice_true,
        true_outcomes: OutcomeVector::new(outcomes)?,
        attack_triggered: triggered,
    })
}

/// Phase-encoded round; the result bit is `χ`.
pub fn run_pe_round(state: TargetState, env: &RoundEnv, round: usize, ctx: RoundContext, seeds: &SeedTree) -> Result<RoundRecord> {
    run_round(RoundKind::Pe, state, env, round, ctx, seeds)
}

/// Verification round without phases; the result bit is `γ`.
pub fn run_pv_round(state: TargetState, env: &RoundEnv, round: usize, ctx: RoundContext, seeds: &SeedTree) -> Result<RoundRecord> {
    run_round(RoundKind::Pv, state, env, round, ctx, seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{AgentGate, Gate, Strategy};
    use crate::stats::bernoulli_sigma;
    use std::f64::consts::PI;

    fn env(angles: Vec<f64>, attack: AttackSpec) -> RoundEnv {
        RoundEnv::new(angles.len(), 2, angles, attack, None)
    }

    fn ghz(n: usize) -> TargetState {
        TargetState::Ghz { n, phase: 0.0 }
    }

    fn even_fraction(kind: RoundKind, env: &RoundEnv, rounds: usize, dense: bool) -> f64 {
        let seeds = SeedTree::new(77);
        let even = (0..rounds)
            .filter(|&j| {
                let st = if dense { TargetState::Dense(ghz(env.n).to_dense().unwrap()) } else { ghz(env.n) };
                let rec = run_round(kind, st, env, j, RoundContext::default(), &seeds).unwrap();
                rec.result_bit == 0
            })
            .count();
        even as f64 / rounds as f64
    }

    #[test]
    fn zero_phase_never_odd() {
        let e = env(vec![0.0; 5], AttackSpec::honest());
        assert_eq!(even_fraction(RoundKind::Pe, &e, 2000, false), 1.0);
        assert_eq!(even_fraction(RoundKind::Pe, &e, 300, true), 1.0);
    }

    #[test]
    fn pi_phase_always_odd() {
        let e = env(vec![PI / 4.0; 4], AttackSpec::honest());
        assert_eq!(even_fraction(RoundKind::Pe, &e, 2000, false), 0.0);
        assert_eq!(even_fraction(RoundKind::Pe, &e, 300, true), 0.0);
        assert_eq!(even_fraction(RoundKind::Pv, &e, 300, false), 1.0);
    }

    #[test]
    fn half_pi_phase_is_fair() {
        let e = env(vec![PI / 8.0; 4], AttackSpec::honest());
        let rounds = 100_000;
        let p = even_fraction(RoundKind::Pe, &e, rounds, false);
        assert!((p - 0.5).abs() < 4.0 * bernoulli_sigma(0.5, rounds));
    }

    #[test]
    fn result_uses_alice_true_outcome() {
        let e = env(vec![0.3; 4], AttackSpec::honest());
        let seeds = SeedTree::new(1);
        let mut cover_differs = 0;
        for j in 0..500 {
            let rec = run_pe_round(ghz(4), &e, j, RoundContext::default(), &seeds).unwrap();
            let mut bits = rec.announcements.bits().to_vec();
            cover_differs += usize::from(bits[2] != rec.alice_true_outcome);
            bits[2] = rec.alice_true_outcome;
            assert_eq!(bits.iter().fold(0, |a, b| a ^ b), rec.result_bit);
        }
        assert!(cover_differs > 150 && cover_differs < 350);
    }

    #[test]
    fn z_on_non_participant_flips_verification() {
        let attack = AttackSpec::new(
            vec![0],
            vec![Strategy::LocalUnitary { gates: vec![AgentGate { agent: 0, gate: Gate::Z }], trigger: 1.0 }],
        );
        let e = env(vec![0.0; 5], attack);
        let seeds = SeedTree::new(5);
        for j in 0..300 {
            let rec = run_pv_round(ghz(5), &e, j, RoundContext::default(), &seeds).unwrap();
            assert_eq!(rec.result_bit, 1);
            assert!(rec.attack_triggered);
        }
    }

    #[test]
    fn announce_flip_rate() {
        let alpha = 0.2;
        let attack = AttackSpec::new(vec![4], vec![Strategy::AnnounceFlip { alpha }]);
        let e = env(vec![0.0; 6], attack);
        let seeds = SeedTree::new(9);
        let rounds = 20_000;
        let odd = (0..rounds)
            .filter(|&j| run_pv_round(ghz(6), &e, j, RoundContext::default(), &seeds).unwrap().result_bit == 1)
            .count();
        let rate = odd as f64 / rounds as f64;
        assert!((rate - alpha).abs() < 4.0 * bernoulli_sigma(alpha, rounds));
    }

    #[test]
    fn delayed_adversary_announces_last() {
        let attack = AttackSpec::new(
            vec![0],
            vec![Strategy::DelayedMeasurement(crate::adversary::DelayPolicy::ForceParity { parity: 0 })],
        );
        let e = env(vec![0.0, 0.0, 0.0, 0.0], attack);
        assert_eq!(e.announce_order(), vec![1, 2, 3, 0]);
        let seeds = SeedTree::new(2);
        for j in 0..200 {
            let dense = TargetState::Dense(ghz(4).to_dense().unwrap());
            let rec = run_pv_round(dense, &e, j, RoundContext::default(), &seeds).unwrap();
            assert_eq!(rec.announcements.parity(), 0);
        }
    }
}
