//! Minimal statevector engine for GHZ-family states.
//!
//! Basis-state index convention: agent `k` (zero-based) owns bit `n - 1 - k`
//! of the index, i.e. agent 0 is the most significant bit. `|1 0⟩` on two
//! qubits therefore means agent 0 in `|1⟩` and has index `0b10`.

mod density;
mod measure;
mod state;

pub use density::{trace_distance, DensityMatrix};
pub(crate) use density::{hermitian_eigen, trace_norm};
pub use measure::{sample_ghz_phase_fastpath, OutcomeVector};
pub use state::{Pauli, PauliString, PureState, Unitary2, MAX_DENSE_QUBITS};

pub use num_complex::Complex64;

/// Norm and unitarity tolerance.
pub const NORM_TOL: f64 = 1e-10;

#[inline]
pub(crate) fn agent_mask(n: usize, agent: usize) -> usize {
    1usize << (n - 1 - agent)
}

/// Pack the bits of `index` at the given agents into a new index, first agent
/// most significant.
#[inline]
pub(crate) fn gather_bits(index: usize, n: usize, agents: &[usize]) -> usize {
    agents
        .iter()
        .fold(0usize, |acc, &a| (acc << 1) | ((index >> (n - 1 - a)) & 1))
}

pub(crate) fn validate_subset(n: usize, subset: &[usize]) -> crate::Result<()> {
    if subset.is_empty() {
        return Err(crate::Error::invalid("subset must be nonempty"));
    }
    let mut seen = vec![false; n];
    for &a in subset {
        if a >= n {
            return Err(crate::Error::invalid(format!(
                "agent {a} out of range for {n} qubits"
            )));
        }
        if std::mem::replace(&mut seen[a], true) {
            return Err(crate::Error::invalid(format!("agent {a} repeated in subset")));
        }
    }
    Ok(())
}

pub(crate) fn complement(n: usize, subset: &[usize]) -> Vec<usize> {
    (0..n).filter(|a| !subset.contains(a)).collect()
}
