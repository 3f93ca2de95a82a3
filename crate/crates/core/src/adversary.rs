//! Attack strategies and the hooks through which they act on a round.
//!
//! State hooks run before announce hooks. A malicious source replaces the
//! verified state; local unitaries act on dishonest qubits after the phase
//! encoding; announce hooks decide what dishonest agents publish.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::oracles::{StateFactory, TargetState};
use crate::quantum::Unitary2;
use crate::{Error, Result};

/// Serde helpers writing agent indices one-based.
pub mod one_based {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &usize, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*v as u64 + 1)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        let v = u64::deserialize(d)?;
        if v == 0 {
            return Err(de::Error::custom("agent numbers start at 1"));
        }
        Ok(v as usize - 1)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for a in v {
                seq.serialize_element(&(*a as u64 + 1))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
            let v = Vec::<u64>::deserialize(d)?;
            v.into_iter()
                .map(|a| {
                    if a == 0 {
                        Err(de::Error::custom("agent numbers start at 1"))
                    } else {
                        Ok(a as usize - 1)
                    }
                })
                .collect()
        }
    }
}

/// Single-qubit gate as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Gate {
    X,
    Y,
    Z,
    H,
    Phase { phi: f64 },
    Rz { phi: f64 },
    Rx { phi: f64 },
    /// Rows of `[re, im]` entries.
    Matrix { entries: [[[f64; 2]; 2]; 2] },
}

impl Gate {
    pub fn unitary(&self) -> Result<Unitary2> {
        Ok(match self {
            Gate::X => Unitary2::pauli_x(),
            Gate::Y => Unitary2::pauli_y(),
            Gate::Z => Unitary2::pauli_z(),
            Gate::H => Unitary2::hadamard(),
            Gate::Phase { phi } => Unitary2::phase(*phi),
            Gate::Rz { phi } => Unitary2::rz(*phi),
            Gate::Rx { phi } => Unitary2::rx(*phi),
            Gate::Matrix { entries } => {
                let c = |[re, im]: [f64; 2]| Complex64::new(re, im);
                Unitary2::new([
                    [c(entries[0][0]), c(entries[0][1])],
                    [c(entries[1][0]), c(entries[1][1])],
                ])?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentGate {
    #[serde(with = "one_based")]
    pub agent: usize,
    pub gate: Gate,
}

/// What a delayed-measurement agent announces after hearing everyone else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DelayPolicy {
    Truthful,
    /// Choose the bit making the parity of all public announcements equal
    /// `parity`.
    ForceParity { parity: u8 },
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Strategy {
    HonestAll,
    AnnounceFlip { alpha: f64 },
    LocalUnitary { gates: Vec<AgentGate>, trigger: f64 },
    DelayedMeasurement(DelayPolicy),
    MaliciousSource { source: StateFactory },
    KeyLeak { fraction: f64 },
}

/// Dishonest set plus an ordered list of strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    #[serde(with = "one_based::vec", default)]
    pub dishonest: Vec<usize>,
    #[serde(default)]
    pub strategies: Vec<Strategy>,
}

/// What the adversary knows about the current round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RoundContext {
    /// `Some(is_verification)` when the key bit of this round leaked.
    pub leaked_kind: Option<bool>,
}

fn unit_interval(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must lie in [0, 1], got {x}")))
    }
}

impl AttackSpec {
    pub fn honest() -> Self {
        Self::default()
    }

    pub fn new(dishonest: Vec<usize>, strategies: Vec<Strategy>) -> Self {
        Self { dishonest, strategies }
    }

    /// Reject Alice in the dishonest set, bad indices and bad parameters.
    pub fn validate(&self, n: usize, alice: usize) -> Result<()> {
        for (idx, &a) in self.dishonest.iter().enumerate() {
            if a >= n {
                return Err(Error::invalid(format!("dishonest agent {} out of range", a + 1)));
            }
            if a == alice {
                return Err(Error::invalid("Alice cannot be in the dishonest set"));
            }
            if self.dishonest[..idx].contains(&a) {
                return Err(Error::invalid(format!("dishonest agent {} repeated", a + 1)));
            }
        }
        for s in &self.strategies {
            match s {
                Strategy::HonestAll | Strategy::DelayedMeasurement(DelayPolicy::Truthful | DelayPolicy::Random) => {}
                Strategy::DelayedMeasurement(DelayPolicy::ForceParity { parity }) => {
                    if *parity > 1 {
                        return Err(Error::invalid("forced parity must be 0 or 1"));
                    }
                }
                Strategy::AnnounceFlip { alpha } => unit_interval(*alpha, "flip probability")?,
                Strategy::KeyLeak { fraction } => unit_interval(*fraction, "leak fraction")?,
                Strategy::LocalUnitary { gates, trigger } => {
                    unit_interval(*trigger, "trigger probability")?;
                    for g in gates {
                        if !self.dishonest.contains(&g.agent) {
                            return Err(Error::invalid(format!(
                                "unitary on agent {} who is not dishonest",
                                g.agent + 1
                            )));
                        }
                        g.gate.unitary()?;
                    }
                }
                Strategy::MaliciousSource { source } => {
                    source.prepare(n)?;
                }
            }
        }
        if !self.strategies.iter().all(|s| matches!(s, Strategy::HonestAll | Strategy::MaliciousSource { .. }))
            && self.dishonest.is_empty()
        {
            return Err(Error::invalid("agent-level strategies need a nonempty dishonest set"));
        }
        Ok(())
    }

    pub fn is_dishonest(&self, agent: usize) -> bool {
        self.dishonest.contains(&agent)
    }

    /// Replacement source, if any (the last one wins).
    pub fn source_override(&self) -> Option<&StateFactory> {
        self.strategies.iter().rev().find_map(|s| match s {
            Strategy::MaliciousSource { source } => Some(source),
            _ => None,
        })
    }

    pub fn leak_fraction(&self) -> f64 {
        self.strategies
            .iter()
            .filter_map(|s| match s {
                Strategy::KeyLeak { fraction } => Some(*fraction),
                _ => None,
            })
            .fold(0.0, f64::max)
    }

    fn targeted(&self) -> bool {
        self.strategies.iter().any(|s| matches!(s, Strategy::KeyLeak { .. }))
    }

    /// With leaked key bits the adversary strikes only rounds it knows to be
    /// estimation rounds.
    pub fn may_attack(&self, ctx: RoundContext) -> bool {
        !self.targeted() || ctx.leaked_kind == Some(false)
    }

    pub fn delayed(&self) -> bool {
        self.strategies.iter().any(|s| matches!(s, Strategy::DelayedMeasurement(_)))
    }

    pub fn needs_dense_state(&self) -> bool {
        self.strategies.iter().any(|s| matches!(s, Strategy::LocalUnitary { .. }))
    }

    /// Swap in the malicious source's state. Idempotent.
    pub fn hook_on_source(&self, target: TargetState) -> Result<TargetState> {
        match self.source_override() {
            Some(f) => f.prepare(target.n()),
            None => Ok(target),
        }
    }

    /// Local unitaries on dishonest qubits. Returns the new state and whether
    /// any attack fired.
    pub fn hook_local_unitaries<R: Rng + ?Sized>(
        &self,
        target: TargetState,
        ctx: RoundContext,
        rng: &mut R,
    ) -> Result<(TargetState, bool)> {
        let mut state = target;
        let mut fired = false;
        for s in &self.strategies {
            if let Strategy::LocalUnitary { gates, trigger } = s {
                let go = rng.random_bool(*trigger);
                if go && self.may_attack(ctx) && !gates.is_empty() {
                    let mut dense = state.to_dense()?;
                    for g in gates {
                        dense = dense.apply_single_qubit_unitary(g.agent, &g.gate.unitary()?)?;
                    }
                    state = TargetState::Dense(dense);
                    fired = true;
                }
            }
        }
        Ok((state, fired))
    }

    /// Source replacement followed by local unitaries.
    pub fn hook_on_state<R: Rng + ?Sized>(
        &self,
        target: TargetState,
        ctx: RoundContext,
        rng: &mut R,
    ) -> Result<(TargetState, bool)> {
        let replaced = self.hook_on_source(target)?;
        self.hook_local_unitaries(replaced, ctx, rng)
    }

    /// Bit that dishonest `agent` publishes. `heard` holds every announcement
    /// made before this one (in announcement order, including Alice's).
    /// Returns the bit and whether an attack fired.
    pub fn hook_on_announce<R: Rng + ?Sized>(
        &self,
        agent: usize,
        true_outcome: u8,
        heard: &[u8],
        last_to_announce: bool,
        ctx: RoundContext,
        rng: &mut R,
    ) -> (u8, bool) {
        let mut bit = true_outcome;
        let mut fired = false;
        if !self.is_dishonest(agent) {
            return (bit, fired);
        }
        for s in &self.strategies {
            match s {
                Strategy::AnnounceFlip { alpha } => {
                    if rng.random_bool(*alpha) && self.may_attack(ctx) {
                        bit ^= 1;
                        fired = true;
                    }
                }
                Strategy::DelayedMeasurement(policy) => match policy {
                    DelayPolicy::Truthful => {}
                    DelayPolicy::ForceParity { parity } => {
                        if last_to_announce {
                            let heard_parity = heard.iter().fold(0, |a, b| a ^ b);
                            let forced = heard_parity ^ parity;
                            fired |= forced != bit;
                            bit = forced;
                        }
                    }
                    DelayPolicy::Random => {
                        let r = u8::from(rng.random::<bool>());
                        fired |= r != bit;
                        bit = r;
                    }
                },
                _ => {}
            }
        }
        (bit, fired)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::PureState;
    use crate::rng::{Domain, SeedTree};

    fn rng() -> crate::rng::StreamRng {
        SeedTree::new(0).stream(Domain::Adversary, 0, 0)
    }

    #[test]
    fn alice_cannot_be_dishonest() {
        let spec = AttackSpec::new(vec![2], vec![Strategy::AnnounceFlip { alpha: 0.1 }]);
        assert!(spec.validate(4, 2).is_err());
        assert!(spec.validate(4, 1).is_ok());
        assert!(AttackSpec::new(vec![7], vec![]).validate(4, 0).is_err());
        assert!(AttackSpec::new(vec![1], vec![Strategy::AnnounceFlip { alpha: 1.5 }]).validate(4, 0).is_err());
        assert!(AttackSpec::new(vec![], vec![Strategy::AnnounceFlip { alpha: 0.5 }]).validate(4, 0).is_err());
    }

    #[test]
    fn honest_is_identity() {
        let spec = AttackSpec::honest();
        let t = TargetState::Ghz { n: 3, phase: 0.2 };
        let (out, fired) = spec.hook_on_state(t.clone(), RoundContext::default(), &mut rng()).unwrap();
        assert_eq!(out, t);
        assert!(!fired);
        assert_eq!(spec.hook_on_announce(1, 1, &[], true, RoundContext::default(), &mut rng()), (1, false));
    }

    #[test]
    fn z_on_one_qubit_flips_parity() {
        let spec = AttackSpec::new(
            vec![1],
            vec![Strategy::LocalUnitary { gates: vec![AgentGate { agent: 1, gate: Gate::Z }], trigger: 1.0 }],
        );
        let mut r = rng();
        let (out, fired) = spec.hook_on_state(TargetState::Ghz { n: 4, phase: 0.0 }, RoundContext::default(), &mut r).unwrap();
        assert!(fired);
        let dense = out.to_dense().unwrap();
        for _ in 0..500 {
            assert_eq!(dense.measure_x_all(&mut r).parity(), 1);
        }
    }

    #[test]
    fn malicious_plus_source_gives_uniform_parity_dist() {
        let spec = AttackSpec::new(vec![], vec![Strategy::MaliciousSource { source: StateFactory::PlusProduct }]);
        let out = spec.hook_on_source(TargetState::Ghz { n: 3, phase: 0.0 }).unwrap();
        assert_eq!(out.to_dense().unwrap(), PureState::plus_product(3).unwrap());
        assert_eq!(spec.hook_on_source(out.clone()).unwrap(), out);
    }

    #[test]
    fn flip_extremes() {
        let never = AttackSpec::new(vec![0], vec![Strategy::AnnounceFlip { alpha: 0.0 }]);
        let always = AttackSpec::new(vec![0], vec![Strategy::AnnounceFlip { alpha: 1.0 }]);
        let ctx = RoundContext::default();
        let mut r = rng();
        for b in 0..2 {
            assert_eq!(never.hook_on_announce(0, b, &[], false, ctx, &mut r).0, b);
            assert_eq!(always.hook_on_announce(0, b, &[], false, ctx, &mut r).0, b ^ 1);
            assert_eq!(always.hook_on_announce(1, b, &[], false, ctx, &mut r).0, b);
        }
    }

    #[test]
    fn key_leak_restricts_attacks() {
        let spec = AttackSpec::new(
            vec![0],
            vec![Strategy::AnnounceFlip { alpha: 1.0 }, Strategy::KeyLeak { fraction: 1.0 }],
        );
        let mut r = rng();
        let on_pe = RoundContext { leaked_kind: Some(false) };
        let on_pv = RoundContext { leaked_kind: Some(true) };
        assert_eq!(spec.hook_on_announce(0, 0, &[], false, on_pe, &mut r), (1, true));
        assert_eq!(spec.hook_on_announce(0, 0, &[], false, on_pv, &mut r), (0, false));
        assert_eq!(spec.hook_on_announce(0, 0, &[], false, RoundContext::default(), &mut r), (0, false));
    }

    #[test]
    fn force_parity() {
        let spec = AttackSpec::new(vec![3], vec![Strategy::DelayedMeasurement(DelayPolicy::ForceParity { parity: 0 })]);
        let (bit, _) = spec.hook_on_announce(3, 0, &[1, 0, 0], true, RoundContext::default(), &mut rng());
        assert_eq!(bit, 1);
    }

    #[test]
    fn config_syntax() {
        let text = r#"{
            "dishonest": [2, 5],
            "strategies": [
                {"type": "announce-flip", "alpha": 0.05},
                {"type": "local-unitary", "trigger": 0.5, "gates": [{"agent": 2, "gate": {"name": "rz", "phi": 0.1}}]},
                {"type": "delayed-measurement", "policy": "force-parity", "parity": 1},
                {"type": "malicious-source", "source": {"kind": "all-zeros"}},
                {"type": "key-leak", "fraction": 0.25}
            ]
        }"#;
        let spec: AttackSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.dishonest, vec![1, 4]);
        assert!(spec.validate(6, 0).is_ok());
        assert_eq!(spec.leak_fraction(), 0.25);
        let back: AttackSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<AttackSpec>(r#"{"dishonest": [0]}"#).is_err());
        assert!(serde_json::from_str::<AttackSpec>(r#"{"dishonest": [1], "bogus": 1}"#).is_err());
    }
}
