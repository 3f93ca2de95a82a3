use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Packed bit strings carry one bit per agent in a `u64`.
pub const MAX_AGENTS: usize = 64;

/// Who Alice is and who participates. Alice may or may not be a participant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoleAssignment {
    n: usize,
    alice: usize,
    participants: Vec<bool>,
}

impl RoleAssignment {
    pub fn new(n: usize, alice: usize, participants: Vec<bool>) -> Result<Self> {
        if n == 0 || n > MAX_AGENTS {
            return Err(Error::invalid(format!("agent count {n} outside 1..={MAX_AGENTS}")));
        }
        if alice >= n {
            return Err(Error::invalid(format!("alice {alice} out of range for {n} agents")));
        }
        if participants.len() != n {
            return Err(Error::invalid(format!(
                "participant vector has length {}, expected {n}",
                participants.len()
            )));
        }
        if !participants.iter().any(|&p| p) {
            return Err(Error::invalid("participant set is empty"));
        }
        Ok(Self { n, alice, participants })
    }

    pub fn from_indices(n: usize, alice: usize, participants: &[usize]) -> Result<Self> {
        let mut v = vec![false; n];
        for &p in participants {
            if p >= n {
                return Err(Error::invalid(format!("participant {p} out of range for {n} agents")));
            }
            v[p] = true;
        }
        Self::new(n, alice, v)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alice(&self) -> usize {
        self.alice
    }

    pub fn participants(&self) -> &[bool] {
        &self.participants
    }

    pub fn is_participant(&self, agent: usize) -> bool {
        self.participants[agent]
    }

    pub fn participant_indices(&self) -> Vec<usize> {
        (0..self.n).filter(|&k| self.participants[k]).collect()
    }

    /// Hamming weight of the participant vector.
    pub fn m(&self) -> usize {
        self.participants.iter().filter(|&&p| p).count()
    }

    /// Participant vector as bits (`1` = participant).
    pub fn indicator(&self) -> Vec<u8> {
        self.participants.iter().map(|&p| p as u8).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(RoleAssignment::from_indices(3, 0, &[]).is_err());
        assert!(RoleAssignment::from_indices(3, 3, &[1]).is_err());
        assert!(RoleAssignment::from_indices(3, 0, &[4]).is_err());
        assert!(RoleAssignment::new(3, 0, vec![true]).is_err());
        assert!(RoleAssignment::from_indices(0, 0, &[]).is_err());
        let r = RoleAssignment::from_indices(6, 2, &[1, 2, 3, 5]).unwrap();
        assert_eq!(r.m(), 4);
        assert_eq!(r.indicator(), vec![0, 1, 1, 1, 0, 1]);
        assert!(!r.is_participant(0));
    }

    #[test]
    fn alice_need_not_participate() {
        let r = RoleAssignment::from_indices(4, 0, &[2, 3]).unwrap();
        assert!(!r.is_participant(r.alice()));
    }
}
