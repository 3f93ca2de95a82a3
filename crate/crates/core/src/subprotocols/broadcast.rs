use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BroadcastError {
    #[error("agent {agent} did not commit before the reveal barrier")]
    MissingCommit { agent: usize },
    #[error("value of agent {agent} read before the reveal barrier")]
    ReadBeforeReveal { agent: usize },
    #[error("agent {agent} committed twice")]
    DuplicateCommit { agent: usize },
    #[error("agent {agent} is not part of the broadcast")]
    UnknownAgent { agent: usize },
}

/// Commit-then-reveal channel: no value is readable until every agent has
/// committed and [`reveal`](Self::reveal) succeeded.
#[derive(Debug, Clone)]
pub struct SimultaneousBroadcast<T> {
    slots: Vec<Option<T>>,
}

impl<T> SimultaneousBroadcast<T> {
    pub fn new(agents: usize) -> Self {
        Self { slots: (0..agents).map(|_| None).collect() }
    }

    pub fn commit(&mut self, agent: usize, value: T) -> Result<(), BroadcastError> {
        let slot = self.slots.get_mut(agent).ok_or(BroadcastError::UnknownAgent { agent })?;
        if slot.is_some() {
            return Err(BroadcastError::DuplicateCommit { agent });
        }
        *slot = Some(value);
        Ok(())
    }

    pub fn committed(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    /// Reading before the barrier is always an error, even after a commit.
    pub fn peek(&self, agent: usize) -> Result<&T, BroadcastError> {
        if agent >= self.slots.len() {
            return Err(BroadcastError::UnknownAgent { agent });
        }
        Err(BroadcastError::ReadBeforeReveal { agent })
    }

    pub fn reveal(self) -> Result<Vec<T>, BroadcastError> {
        self.slots
            .into_iter()
            .enumerate()
            .map(|(agent, v)| v.ok_or(BroadcastError::MissingCommit { agent }))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reveal_requires_every_commit() {
        let mut b = SimultaneousBroadcast::new(3);
        b.commit(0, 1u8).unwrap();
        b.commit(2, 0u8).unwrap();
        assert_eq!(b.clone().reveal(), Err(BroadcastError::MissingCommit { agent: 1 }));
        b.commit(1, 1).unwrap();
        assert_eq!(b.reveal().unwrap(), vec![1, 1, 0]);
    }

    #[test]
    fn sentinel_cannot_be_read_early() {
        const SENTINEL: u32 = 0xdead_beef;
        let mut b = SimultaneousBroadcast::new(2);
        b.commit(0, SENTINEL).unwrap();
        assert_eq!(b.peek(0), Err(BroadcastError::ReadBeforeReveal { agent: 0 }));
        b.commit(1, 0).unwrap();
        assert_eq!(b.peek(0), Err(BroadcastError::ReadBeforeReveal { agent: 0 }));
        assert_eq!(b.reveal().unwrap()[0], SENTINEL);
    }

    #[test]
    fn duplicate_and_unknown_commits() {
        let mut b = SimultaneousBroadcast::new(1);
        b.commit(0, ()).unwrap();
        assert_eq!(b.commit(0, ()), Err(BroadcastError::DuplicateCommit { agent: 0 }));
        assert_eq!(b.commit(4, ()), Err(BroadcastError::UnknownAgent { agent: 4 }));
    }
}
