//! Stand-ins for state verification (SV) and anonymous conference key
//! agreement (ACKA). Each exposes only its guarantee parameters, so any
//! concrete scheme can replace it.

mod acka;
mod sv;

pub use acka::{acka_generate, key_entropy_length, KeyGrant, RoundKey};
pub use sv::{
    sv_stabilizer_verify, stabilizer_generators, StabilizerTest, StateFactory, StateSource, TargetState,
    VerifiedStateClaim,
};
