//! End-to-end protocol execution.

mod appe;
mod config;
mod rounds;
mod transcript;

pub use appe::{run_appe, AbortReason, RunOutput, RunReport, SvSummary};
pub use config::{MinParticipants, Mutation, OracleSettings, OutputSettings, ProtocolConfig};
pub use rounds::{run_pe_round, run_pv_round, RoundEnv};
pub use transcript::{
    AdversaryView, AgentView, AliceView, LeakedBit, PublicRegisters, PublicRound, RoundKind, RoundRecord, SvRecord,
    Transcript, VoteRecord,
};
