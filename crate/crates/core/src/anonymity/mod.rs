//! Checks that nothing observable depends on who Alice is or who
//! participates, beyond the participant count.

mod definition;
mod states;
mod transcripts;

pub use definition::{AnonymityTestConfig, Assignment, Clause};
pub use states::{
    conditional_state_closed_form, dishonest_conditional_state, dishonest_conditional_state_for, marginal_distribution,
    uniform_marginal_check, MarginalReport,
};
pub use transcripts::{
    ideal_output_check, restricted_record, transcript_indistinguishability, AnonymitySettings, IdealOutputReport,
    IndistinguishabilityReport,
};
