use serde::{Deserialize, Serialize};

use crate::adversary::{one_based, AttackSpec};
use crate::quantum::MAX_DENSE_QUBITS;
use crate::subprotocols::RoleAssignment;
use crate::{Error, Result};

/// Deliberate protocol defects used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Alice announces her true outcome instead of a random bit.
    AliceTrueBit,
}

impl std::str::FromStr for Mutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alice-true-bit" => Ok(Mutation::AliceTrueBit),
            other => Err(Error::invalid(format!("unknown mutation {other:?}"))),
        }
    }
}

/// Smallest participant count each agent accepts. Either one value for
/// everyone or one per agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MinParticipants {
    Uniform(usize),
    PerAgent(Vec<usize>),
}

impl Default for MinParticipants {
    fn default() -> Self {
        MinParticipants::Uniform(3)
    }
}

impl MinParticipants {
    pub fn for_agent(&self, agent: usize) -> usize {
        match self {
            MinParticipants::Uniform(m) => *m,
            MinParticipants::PerAgent(v) => v[agent],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSettings {
    /// States consumed per verification (`N`); `N − 1` are tested.
    pub sv_copies: usize,
    /// `ε_SV` claimed when a non-GHZ source passes verification.
    pub sv_epsilon: f64,
    /// Confidence parameter of the verification guarantee.
    pub sv_confidence: f64,
    /// Total states the source can produce; unlimited when absent.
    pub source_budget: Option<usize>,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { sv_copies: 2, sv_epsilon: 0.0, sv_confidence: 0.0, source_budget: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: Option<String>,
}

fn default_delta_threshold() -> f64 {
    0.5
}

fn default_vote_rounds() -> usize {
    20_000
}

fn default_eta_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.05).collect()
}

/// Everything a run needs. Agents are numbered from 1 in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub n: usize,
    #[serde(with = "one_based")]
    pub alice: usize,
    #[serde(with = "one_based::vec")]
    pub participants: Vec<usize>,
    /// One parameter per agent; non-participants' entries are ignored.
    pub theta: Vec<f64>,
    /// `L`.
    pub total_rounds: usize,
    /// `k`.
    pub verification_rounds: usize,
    #[serde(default = "default_delta_threshold")]
    pub delta_threshold: f64,
    /// `s`, parity rounds per candidate in VOTE.
    #[serde(default = "default_vote_rounds")]
    pub vote_rounds: usize,
    #[serde(default)]
    pub min_participants: MinParticipants,
    #[serde(default)]
    pub oracles: OracleSettings,
    #[serde(default)]
    pub adversary: AttackSpec,
    #[serde(default)]
    pub seed: u64,
    /// Undo the observed verification failure rate in the estimate.
    #[serde(default)]
    pub correct_bias: bool,
    #[serde(default = "default_eta_grid")]
    pub eta_grid: Vec<f64>,
    #[serde(default)]
    pub mutation: Option<Mutation>,
    #[serde(default)]
    pub output: OutputSettings,
}

impl ProtocolConfig {
    /// Minimal honest config with library defaults.
    pub fn new(n: usize, alice: usize, participants: Vec<usize>, theta: Vec<f64>, total_rounds: usize, verification_rounds: usize) -> Self {
        Self {
            n,
            alice,
            participants,
            theta,
            total_rounds,
            verification_rounds,
            delta_threshold: default_delta_threshold(),
            vote_rounds: default_vote_rounds(),
            min_participants: MinParticipants::default(),
            oracles: OracleSettings::default(),
            adversary: AttackSpec::default(),
            seed: 0,
            correct_bias: false,
            eta_grid: default_eta_grid(),
            mutation: None,
            output: OutputSettings::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    /// `ν = L − k`.
    pub fn nu(&self) -> usize {
        self.total_rounds.saturating_sub(self.verification_rounds)
    }

    /// Check every invariant and return the role assignment.
    pub fn validate(&self) -> Result<RoleAssignment> {
        let roles = RoleAssignment::from_indices(self.n, self.alice, &self.participants)?;
        let mut sorted = self.participants.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.participants.len() {
            return Err(Error::invalid("participants repeated"));
        }
        if self.theta.len() != self.n {
            return Err(Error::invalid(format!("theta has {} entries, expected {}", self.theta.len(), self.n)));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("theta entries must be finite"));
        }
        if self.verification_rounds > self.total_rounds {
            return Err(Error::invalid(format!(
                "verification rounds {} exceed total rounds {}",
                self.verification_rounds, self.total_rounds
            )));
        }
        if self.nu() == 0 {
            return Err(Error::invalid("need at least one estimation round"));
        }
        if !(0.0..=1.0).contains(&self.delta_threshold) {
            return Err(Error::invalid("delta threshold must lie in [0, 1]"));
        }
        if self.vote_rounds == 0 {
            return Err(Error::invalid("vote rounds must be positive"));
        }
        if let MinParticipants::PerAgent(v) = &self.min_participants {
            if v.len() != self.n {
                return Err(Error::invalid("per-agent participant minimum needs one entry per agent"));
            }
        }
        if self.oracles.sv_copies < 2 {
            return Err(Error::invalid("sv_copies must be at least 2"));
        }
        for (v, what) in [(self.oracles.sv_epsilon, "sv_epsilon"), (self.oracles.sv_confidence, "sv_confidence")] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{what} must lie in [0, 1]")));
            }
        }
        self.adversary.validate(self.n, self.alice)?;
        let dense = self.adversary.needs_dense_state()
            || self.adversary.source_override().is_some_and(|f| !matches!(f, crate::oracles::StateFactory::Ghz | crate::oracles::StateFactory::PhaseRotatedGhz { .. }));
        if dense && self.n > MAX_DENSE_QUBITS {
            return Err(Error::invalid(format!("this adversary needs n <= {MAX_DENSE_QUBITS}")));
        }
        Ok(roles)
    }
}
