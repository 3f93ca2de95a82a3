use serde::{Serialize, Serializer};

use crate::adversary::one_based;
use crate::bits::BitString;
use crate::oracles::StabilizerTest;
use crate::quantum::OutcomeVector;
use crate::subprotocols::NotificationView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundKind {
    /// Parity estimation.
    Pe,
    /// Parity verification.
    Pv,
}

impl RoundKind {
    pub fn from_key_bit(bit: u8) -> Self {
        if bit == 1 {
            RoundKind::Pv
        } else {
            RoundKind::Pe
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RoundKind::Pe => "PE",
            RoundKind::Pv => "PV",
        }
    }
}

impl Serialize for RoundKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Ground truth of one executed round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub kind: RoundKind,
    /// Public bits, one slot per agent; Alice's slot holds her cover bit.
    pub announcements: OutcomeVector,
    pub alice_true_outcome: u8,
    pub true_outcomes: OutcomeVector,
    /// Parity of all true outcomes as Alice computes it (`χ` or `γ`).
    pub result_bit: u8,
    pub attack_triggered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoteRecord {
    pub tally: [usize; 2],
    pub sigma: [f64; 2],
    pub broadcasts: [Vec<BitString>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvRecord {
    pub round: usize,
    pub accepted: bool,
    pub epsilon_sv: f64,
    pub tests: Vec<StabilizerTest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PublicRound {
    pub round: usize,
    pub announcements: OutcomeVector,
}

/// Registers everyone can read.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct PublicRegisters {
    /// Public part of NOTIFICATION and VOTE (only VOTE broadcasts anything).
    pub c_nv: Option<VoteRecord>,
    pub c_sv: Vec<SvRecord>,
    pub c_pp: Vec<PublicRound>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AliceView {
    #[serde(with = "one_based::vec")]
    pub participants: Vec<usize>,
    pub true_outcomes: BitString,
    pub results: BitString,
}

/// Private registers of one agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentView {
    #[serde(with = "one_based")]
    pub agent: usize,
    pub notification: NotificationView,
    pub participant: bool,
    /// Parameter actually encoded (0 for non-participants).
    pub theta: f64,
    pub key: Option<BitString>,
    /// True outcome of every executed round.
    pub outcomes: BitString,
    pub alice: Option<AliceView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeakedBit {
    pub position: usize,
    pub bit: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct AdversaryView {
    #[serde(with = "one_based::vec")]
    pub dishonest: Vec<usize>,
    pub leaked: Vec<LeakedBit>,
    pub attacked_rounds: Vec<usize>,
}

/// Everything a run produced, split by who may see it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transcript {
    pub schema_version: u32,
    pub public: PublicRegisters,
    pub agents: Vec<AgentView>,
    pub adversary: AdversaryView,
    /// Simulator ground truth, not visible to any agent as a whole.
    pub rounds: Vec<RoundRecord>,
}

impl Transcript {
    /// `round,kind,announcements,result_bit` rows.
    pub fn write_rounds_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "kind", "announcements", "result_bit"])?;
        for r in &self.rounds {
            w.write_record([
                r.round.to_string(),
                r.kind.as_str().to_string(),
                r.announcements.to_bitstring(),
                r.result_bit.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
