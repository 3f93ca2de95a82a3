use serde::{Deserialize, Serialize};

use crate::adversary::one_based;
use crate::{Error, Result};

/// Alice and the participant set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    #[serde(with = "one_based")]
    pub alice: usize,
    #[serde(with = "one_based::vec")]
    pub participants: Vec<usize>,
}

impl Assignment {
    pub fn new(alice: usize, participants: Vec<usize>) -> Self {
        Self { alice, participants }
    }
}

/// The constraint a pair of assignments violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    /// Alice must lie outside the probe and dishonest sets.
    AliceObserved,
    /// Participants among the dishonest agents must agree.
    DishonestParticipantsDiffer,
    /// Participants among the probe set must agree.
    ProbeParticipantsDiffer,
    /// Both assignments need the same number of participants.
    WeightDiffers,
}

impl std::fmt::Display for Clause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Clause::AliceObserved => "alice must not be in the probe or dishonest set",
            Clause::DishonestParticipantsDiffer => "participants within the dishonest set differ",
            Clause::ProbeParticipantsDiffer => "participants within the probe set differ",
            Clause::WeightDiffers => "participant counts differ",
        })
    }
}

/// Two role assignments compared from the viewpoint of the probe set `G`
/// together with the dishonest set `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnonymityTestConfig {
    pub n: usize,
    pub first: Assignment,
    pub second: Assignment,
    #[serde(with = "one_based::vec")]
    pub probe: Vec<usize>,
    #[serde(with = "one_based::vec")]
    pub dishonest: Vec<usize>,
    pub samples: usize,
    pub significance: f64,
}

fn indicator(n: usize, set: &[usize]) -> Vec<bool> {
    let mut v = vec![false; n];
    for &a in set {
        v[a] = true;
    }
    v
}

impl AnonymityTestConfig {
    /// First violated clause, if any.
    pub fn violated_clause(&self) -> Option<Clause> {
        let n = self.n;
        let j1 = indicator(n, &self.first.participants);
        let j2 = indicator(n, &self.second.participants);
        let observed = |a: usize| self.probe.contains(&a) || self.dishonest.contains(&a);
        if observed(self.first.alice) || observed(self.second.alice) {
            return Some(Clause::AliceObserved);
        }
        if self.dishonest.iter().any(|&d| j1[d] != j2[d]) {
            return Some(Clause::DishonestParticipantsDiffer);
        }
        if self.probe.iter().any(|&g| j1[g] != j2[g]) {
            return Some(Clause::ProbeParticipantsDiffer);
        }
        if j1.iter().filter(|&&b| b).count() != j2.iter().filter(|&&b| b).count() {
            return Some(Clause::WeightDiffers);
        }
        None
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |v: &[usize]| v.iter().all(|&a| a < self.n);
        if self.n == 0
            || self.first.alice >= self.n
            || self.second.alice >= self.n
            || !in_range(&self.first.participants)
            || !in_range(&self.second.participants)
            || !in_range(&self.probe)
            || !in_range(&self.dishonest)
        {
            return Err(Error::invalid("agent index out of range"));
        }
        if self.samples == 0 {
            return Err(Error::invalid("sample count must be positive"));
        }
        if !(0.0..1.0).contains(&self.significance) {
            return Err(Error::invalid("significance must lie in [0, 1)"));
        }
        match self.violated_clause() {
            Some(c) => Err(Error::invalid(format!("assignment pair rejected: {c}"))),
            None => Ok(()),
        }
    }

    /// Agents whose views are compared, ascending.
    pub fn observers(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.probe.iter().chain(&self.dishonest).copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}
