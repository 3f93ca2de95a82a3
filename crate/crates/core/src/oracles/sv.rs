use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::quantum::{PauliString, PureState, MAX_DENSE_QUBITS};
use crate::{Error, Result};

/// What the (possibly malicious) source emits each time a state is requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateFactory {
    Ghz,
    AllZeros,
    PlusProduct,
    /// `(|0…0⟩ + e^{iφ}|1…1⟩)/√2`.
    PhaseRotatedGhz { phase: f64 },
    /// Amplitudes as `[re, im]` pairs in the standard index order.
    Custom { amplitudes: Vec<[f64; 2]> },
}

impl StateFactory {
    pub fn is_honest(&self) -> bool {
        matches!(self, StateFactory::Ghz)
    }

    pub fn prepare(&self, n: usize) -> Result<TargetState> {
        Ok(match self {
            StateFactory::Ghz => TargetState::Ghz { n, phase: 0.0 },
            StateFactory::PhaseRotatedGhz { phase } => TargetState::Ghz { n, phase: *phase },
            StateFactory::AllZeros => TargetState::Dense(PureState::basis(n, 0)?),
            StateFactory::PlusProduct => TargetState::Dense(PureState::plus_product(n)?),
            StateFactory::Custom { amplitudes } => {
                if amplitudes.len() != 1usize.checked_shl(n as u32).unwrap_or(0) {
                    return Err(Error::invalid(format!(
                        "custom source has {} amplitudes, expected 2^{n}",
                        amplitudes.len()
                    )));
                }
                let amps = amplitudes.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                TargetState::Dense(PureState::from_amplitudes(n, amps)?)
            }
        })
    }
}

/// A state handed to a round: either the GHZ family (sampled in `O(n)`) or a
/// dense statevector.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetState {
    Ghz { n: usize, phase: f64 },
    Dense(PureState),
}

impl TargetState {
    pub fn n(&self) -> usize {
        match self {
            TargetState::Ghz { n, .. } => *n,
            TargetState::Dense(s) => s.n(),
        }
    }

    pub fn to_dense(&self) -> Result<PureState> {
        match self {
            TargetState::Ghz { n, phase } => PureState::ghz_with_phase(*n, *phase),
            TargetState::Dense(s) => Ok(s.clone()),
        }
    }

    /// `⟨g⟩` for a GHZ stabilizer generator.
    fn expectation(&self, g: &PauliString) -> Result<f64> {
        match self {
            TargetState::Ghz { phase, .. } => {
                let all_x = g.0.iter().all(|p| *p == crate::quantum::Pauli::X);
                Ok(if all_x { phase.cos() } else { 1.0 })
            }
            TargetState::Dense(s) => s.expectation(g),
        }
    }
}

/// GHZ stabilizer generators: `X^⊗n` followed by `Z_i Z_{i+1}`.
pub fn stabilizer_generators(n: usize) -> Vec<PauliString> {
    std::iter::once(PauliString::all_x(n))
        .chain((0..n.saturating_sub(1)).map(|i| PauliString::zz(n, i, i + 1)))
        .collect()
}

/// A source with an optional budget; pass probabilities of every generator
/// are computed once since the factory is deterministic.
#[derive(Debug, Clone)]
pub struct StateSource {
    factory: StateFactory,
    target: TargetState,
    generators: Vec<PauliString>,
    pass_prob: Vec<f64>,
    remaining: Option<usize>,
    consumed: usize,
}

impl StateSource {
    pub fn new(factory: StateFactory, n: usize) -> Result<Self> {
        let target = factory.prepare(n)?;
        if matches!(target, TargetState::Dense(_)) && n > MAX_DENSE_QUBITS {
            return Err(Error::invalid(format!("non-GHZ sources need n <= {MAX_DENSE_QUBITS}")));
        }
        let generators = stabilizer_generators(n);
        let pass_prob = generators
            .iter()
            .map(|g| target.expectation(g).map(|e| ((1.0 + e) / 2.0).clamp(0.0, 1.0)))
            .collect::<Result<_>>()?;
        Ok(Self { factory, target, generators, pass_prob, remaining: None, consumed: 0 })
    }

    pub fn with_budget(mut self, states: usize) -> Self {
        self.remaining = Some(states);
        self
    }

    pub fn factory(&self) -> &StateFactory {
        &self.factory
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    fn take(&mut self, count: usize) -> Result<()> {
        if let Some(r) = self.remaining.as_mut() {
            if *r < count {
                self.consumed += *r;
                *r = 0;
                return Err(Error::SourceExhausted(self.consumed));
            }
            *r -= count;
        }
        self.consumed += count;
        Ok(())
    }

    /// Exact probability that `copies - 1` random generator tests all pass.
    pub fn acceptance_probability(&self, copies: usize) -> f64 {
        let per_test = self.pass_prob.iter().sum::<f64>() / self.pass_prob.len() as f64;
        per_test.powi(copies.saturating_sub(1) as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilizerTest {
    pub generator: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifiedStateClaim {
    #[serde(skip)]
    pub target: TargetState,
    pub epsilon_sv: f64,
    pub accepted: bool,
    pub tests: Vec<StabilizerTest>,
}

/// Consume `copies` states, test all but one against random stabilizer
/// generators and release the untested one as the round's target.
///
/// An honest accept claims `ε_SV = 0`; an accept from any other source claims
/// `noisy_epsilon`.
pub fn sv_stabilizer_verify<R: Rng + ?Sized>(
    source: &mut StateSource,
    copies: usize,
    noisy_epsilon: f64,
    rng: &mut R,
) -> Result<VerifiedStateClaim> {
    if copies < 2 {
        return Err(Error::invalid("state verification needs at least two copies"));
    }
    if !(0.0..=1.0).contains(&noisy_epsilon) {
        return Err(Error::invalid("epsilon_sv must lie in [0, 1]"));
    }
    source.take(copies)?;
    let mut tests = Vec::with_capacity(copies - 1);
    let mut accepted = true;
    for _ in 0..copies - 1 {
        let g = rng.random_range(0..source.generators.len());
        let p = source.pass_prob[g];
        let passed = p >= 1.0 || rng.random_bool(p);
        accepted &= passed;
        tests.push(StabilizerTest { generator: source.generators[g].to_string(), passed });
    }
    let epsilon_sv = if source.factory.is_honest() { 0.0 } else { noisy_epsilon };
    Ok(VerifiedStateClaim { target: source.target.clone(), epsilon_sv, accepted, tests })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Domain, SeedTree};
    use std::f64::consts::PI;

    fn rng(seed: u64) -> crate::rng::StreamRng {
        SeedTree::new(seed).stream(Domain::Verification, 0, 0)
    }

    #[test]
    fn honest_source_always_accepted() {
        let mut src = StateSource::new(StateFactory::Ghz, 6).unwrap();
        let mut r = rng(1);
        for _ in 0..10_000 {
            let c = sv_stabilizer_verify(&mut src, 4, 0.1, &mut r).unwrap();
            assert!(c.accepted);
            assert_eq!(c.epsilon_sv, 0.0);
        }
        assert_eq!(src.consumed(), 40_000);
        let c = sv_stabilizer_verify(&mut src, 2, 0.1, &mut r).unwrap();
        assert_eq!(c.target.to_dense().unwrap(), PureState::ghz(6).unwrap());
    }

    #[test]
    fn large_honest_networks_avoid_dense_states() {
        let src = StateSource::new(StateFactory::Ghz, 40).unwrap();
        assert_eq!(src.acceptance_probability(10), 1.0);
        assert!(StateSource::new(StateFactory::AllZeros, 40).is_err());
    }

    #[test]
    fn all_zeros_fails_x_checks_half_the_time() {
        let src = StateSource::new(StateFactory::AllZeros, 4).unwrap();
        assert_eq!(src.pass_prob[0], 0.5);
        assert!(src.pass_prob[1..].iter().all(|&p| p == 1.0));
        let expected = (0.5 / 4.0 + 3.0 / 4.0f64).powi(5);
        assert!((src.acceptance_probability(6) - expected).abs() < 1e-12);
    }

    #[test]
    fn rotated_ghz_x_check() {
        let phi = 2.0 * PI / 3.0;
        let src = StateSource::new(StateFactory::PhaseRotatedGhz { phase: phi }, 3).unwrap();
        assert!((1.0 - src.pass_prob[0] - (1.0 - phi.cos()) / 2.0).abs() < 1e-12);
        let dense = StateSource::new(
            StateFactory::Custom {
                amplitudes: PureState::ghz_with_phase(3, phi)
                    .unwrap()
                    .amplitudes()
                    .iter()
                    .map(|a| [a.re, a.im])
                    .collect(),
            },
            3,
        )
        .unwrap();
        for (a, b) in src.pass_prob.iter().zip(&dense.pass_prob) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn monte_carlo_matches_analytic_acceptance() {
        let cases = [
            StateFactory::AllZeros,
            StateFactory::PlusProduct,
            StateFactory::PhaseRotatedGhz { phase: 1.0 },
        ];
        let trials = 20_000;
        for (i, f) in cases.into_iter().enumerate() {
            for n in [2usize, 4, 6] {
                let mut src = StateSource::new(f.clone(), n).unwrap();
                let p = src.acceptance_probability(3);
                let mut r = rng(10 + i as u64 * 7 + n as u64);
                let hits = (0..trials)
                    .filter(|_| sv_stabilizer_verify(&mut src, 3, 0.05, &mut r).unwrap().accepted)
                    .count();
                let sigma = crate::stats::bernoulli_sigma(p, trials);
                assert!((hits as f64 / trials as f64 - p).abs() <= 4.0 * sigma + 1e-12, "{f:?} n={n}");
            }
        }
    }

    #[test]
    fn noisy_accept_reports_configured_epsilon() {
        let mut src = StateSource::new(StateFactory::PhaseRotatedGhz { phase: 0.0 }, 3).unwrap();
        let c = sv_stabilizer_verify(&mut src, 2, 0.03, &mut rng(2)).unwrap();
        assert!(c.accepted);
        assert_eq!(c.epsilon_sv, 0.03);
    }

    #[test]
    fn budget_exhaustion() {
        let mut src = StateSource::new(StateFactory::Ghz, 3).unwrap().with_budget(5);
        let mut r = rng(0);
        sv_stabilizer_verify(&mut src, 3, 0.0, &mut r).unwrap();
        assert_eq!(sv_stabilizer_verify(&mut src, 3, 0.0, &mut r), Err(Error::SourceExhausted(5)));
    }

    #[test]
    fn argument_checks() {
        let mut src = StateSource::new(StateFactory::Ghz, 3).unwrap();
        assert!(sv_stabilizer_verify(&mut src, 1, 0.0, &mut rng(0)).is_err());
        assert!(sv_stabilizer_verify(&mut src, 2, 1.5, &mut rng(0)).is_err());
        assert!(StateFactory::Custom { amplitudes: vec![[1.0, 0.0]] }.prepare(2).is_err());
    }

    #[test]
    fn factory_config_roundtrip() {
        let f: StateFactory = serde_json::from_str(r#"{"kind":"phase-rotated-ghz","phase":0.5}"#).unwrap();
        assert_eq!(f, StateFactory::PhaseRotatedGhz { phase: 0.5 });
        assert!(serde_json::from_str::<StateFactory>(r#"{"kind":"phase-rotated-ghz","phase":0.5,"extra":1}"#).is_err());
    }
}
