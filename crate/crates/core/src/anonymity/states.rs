use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::quantum::{complement, sample_ghz_phase_fastpath, OutcomeVector, PureState, Unitary2, MAX_DENSE_QUBITS};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalReport {
    /// `max |Pr(o) − 2^−|A||` from the exact distribution, when `n` is small
    /// enough for a dense state.
    pub exact_max_deviation: Option<f64>,
    pub empirical_max_deviation: f64,
    /// One standard deviation of a single empirical cell.
    pub empirical_sigma: f64,
    pub samples: usize,
}

/// Outcome statistics of a proper subset `A` of a phase-encoded GHZ state.
pub fn uniform_marginal_check<R: Rng + ?Sized>(
    n: usize,
    subset: &[usize],
    phase: f64,
    samples: usize,
    rng: &mut R,
) -> Result<MarginalReport> {
    crate::quantum::validate_subset(n, subset)?;
    if subset.len() == n {
        return Err(Error::invalid("the full set has correlated parity; use a proper subset"));
    }
    if samples == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let cells = 1usize << subset.len();
    let uniform = 1.0 / cells as f64;
    let exact_max_deviation = if n <= MAX_DENSE_QUBITS {
        let probs = PureState::ghz_with_phase(n, phase)?.x_outcome_distribution(subset)?;
        Some(probs.iter().map(|p| (p - uniform).abs()).fold(0.0, f64::max))
    } else {
        None
    };
    let mut counts = vec![0u64; cells];
    for _ in 0..samples {
        let o = sample_ghz_phase_fastpath(n, phase, rng)?;
        let idx = subset.iter().fold(0usize, |acc, &a| (acc << 1) | o.bits()[a] as usize);
        counts[idx] += 1;
    }
    let empirical_max_deviation = counts
        .iter()
        .map(|&c| (c as f64 / samples as f64 - uniform).abs())
        .fold(0.0, f64::max);
    Ok(MarginalReport {
        exact_max_deviation,
        empirical_max_deviation,
        empirical_sigma: crate::stats::bernoulli_sigma(uniform, samples),
        samples,
    })
}

/// Amplitudes `∝ 1 ± e^{iθ̄}` over X-basis strings of the dishonest agents,
/// `+` where a string's parity equals `honest_parity`.
pub fn conditional_state_closed_form(theta_bar: f64, honest_parity: u8, d: usize) -> Result<PureState> {
    let e = Complex64::from_polar(1.0, theta_bar);
    let amps = (0..1usize << d)
        .map(|x| {
            if (x.count_ones() as u8 & 1) == (honest_parity & 1) {
                Complex64::new(1.0, 0.0) + e
            } else {
                Complex64::new(1.0, 0.0) - e
            }
        })
        .collect();
    PureState::normalized(d, amps)
}

fn project_dishonest(state: &PureState, honest_outcomes: &OutcomeVector, dishonest: &[usize]) -> Result<PureState> {
    let n = state.n();
    crate::quantum::validate_subset(n, dishonest)?;
    let mut d = dishonest.to_vec();
    d.sort_unstable();
    let honest = complement(n, &d);
    if honest.is_empty() {
        return Err(Error::invalid("at least one honest agent is needed"));
    }
    let raw = state.project_x(&honest, honest_outcomes)?;
    let norm: f64 = raw.iter().map(|a| a.norm_sqr()).sum();
    if norm < 1e-24 {
        return Err(Error::Internal("honest outcomes have zero probability".into()));
    }
    let mut residual = PureState::normalized(d.len(), raw)?;
    let h = Unitary2::hadamard();
    for q in 0..d.len() {
        residual = residual.apply_single_qubit_unitary(q, &h)?;
    }
    Ok(residual)
}

/// State of the dishonest agents `D` (ascending, X-basis coordinates) after
/// the honest agents obtained `honest_outcomes`, starting from the GHZ state
/// with total phase `theta_bar`. Checked against the closed form.
pub fn dishonest_conditional_state(
    n: usize,
    theta_bar: f64,
    honest_outcomes: &OutcomeVector,
    dishonest: &[usize],
) -> Result<PureState> {
    let state = PureState::ghz_with_phase(n, theta_bar)?;
    let out = project_dishonest(&state, honest_outcomes, dishonest)?;
    let closed = conditional_state_closed_form(theta_bar, honest_outcomes.parity(), dishonest.len())?;
    let gap = out
        .amplitudes()
        .iter()
        .zip(closed.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if gap > 1e-10 {
        return Err(Error::Internal(format!("conditional state departs from closed form by {gap:e}")));
    }
    Ok(out)
}

/// As [`dishonest_conditional_state`] but encoding each participant's own
/// parameter with divisor `m = H(j)`.
pub fn dishonest_conditional_state_for(
    theta: &[f64],
    participants: &[bool],
    honest_outcomes: &OutcomeVector,
    dishonest: &[usize],
) -> Result<PureState> {
    let n = theta.len();
    if participants.len() != n {
        return Err(Error::invalid("participant vector length differs from parameter count"));
    }
    let m = participants.iter().filter(|&&p| p).count();
    if m == 0 {
        return Err(Error::invalid("no participants"));
    }
    let mut state = PureState::ghz(n)?;
    for a in (0..n).filter(|&a| participants[a]) {
        state = state.apply_local_phase(a, theta[a], m)?;
    }
    project_dishonest(&state, honest_outcomes, dishonest)
}

/// Marginal of a distribution over `bits`-bit strings (first bit most
/// significant) onto the positions in `keep`.
pub fn marginal_distribution(probs: &[f64], bits: usize, keep: &[usize]) -> Result<Vec<f64>> {
    if probs.len() != 1 << bits {
        return Err(Error::invalid("distribution length must be 2^bits"));
    }
    if keep.iter().any(|&k| k >= bits) {
        return Err(Error::invalid("kept position out of range"));
    }
    let mut out = vec![0.0; 1 << keep.len()];
    for (x, &p) in probs.iter().enumerate() {
        let idx = keep.iter().fold(0usize, |acc, &k| (acc << 1) | ((x >> (bits - 1 - k)) & 1));
        out[idx] += p;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{trace_distance, DensityMatrix};
    use crate::rng::{Domain, SeedTree};
    use std::f64::consts::PI;

    #[test]
    fn exact_marginals_are_uniform() {
        let mut rng = SeedTree::new(0).stream(Domain::Sampling, 0, 0);
        let r = uniform_marginal_check(4, &[0, 2], 0.7, 10_000, &mut rng).unwrap();
        assert!(r.exact_max_deviation.unwrap() <= 1e-12);
        assert!(r.empirical_max_deviation <= 4.0 * r.empirical_sigma);
        for k in 0..10 {
            let r = uniform_marginal_check(5, &[1, 3, 4], k as f64 * 0.6, 1000, &mut rng).unwrap();
            assert!(r.exact_max_deviation.unwrap() <= 1e-12);
        }
        assert!(uniform_marginal_check(3, &[0, 1, 2], 0.0, 10, &mut rng).is_err());
    }

    #[test]
    fn conditional_state_examples() {
        let honest_even = OutcomeVector::new(vec![0, 1, 1]).unwrap();
        let s = dishonest_conditional_state(5, 0.0, &honest_even, &[3, 4]).unwrap();
        for (x, a) in s.amplitudes().iter().enumerate() {
            if x.count_ones() % 2 == 1 {
                assert!(a.norm() < 1e-12);
            }
        }
        let s = dishonest_conditional_state(5, PI, &honest_even, &[3, 4]).unwrap();
        for (x, a) in s.amplitudes().iter().enumerate() {
            if x.count_ones() % 2 == 0 {
                assert!(a.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn independent_of_participant_choice() {
        let theta_bar = PI / 3.0;
        let d = [1usize, 3];
        let honest = OutcomeVector::new(vec![1, 0, 0]).unwrap();
        let reference = dishonest_conditional_state(5, theta_bar, &honest, &d).unwrap();
        for mask in 1u32..32 {
            let parts: Vec<bool> = (0..5).map(|a| mask >> a & 1 == 1).collect();
            let m = mask.count_ones() as f64;
            // arbitrary parameters shifted to the common mean
            let raw: Vec<f64> = (0..5).map(|a| 0.37 * a as f64 + 0.1 * mask as f64).collect();
            let mean = (0..5).filter(|&a| parts[a]).map(|a| raw[a]).sum::<f64>() / m;
            let theta: Vec<f64> = raw.iter().map(|t| t - mean + theta_bar).collect();
            let s = dishonest_conditional_state_for(&theta, &parts, &honest, &d).unwrap();
            let gap = s.amplitudes().iter().zip(reference.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(gap <= 1e-10, "mask {mask:b}: {gap:e}");
        }
    }

    #[test]
    fn data_processing_on_nested_marginals() {
        // Announcement distributions when Alice reveals her true bit.
        let n = 4;
        let dist = |theta: f64| -> Vec<f64> {
            (0..1usize << n)
                .map(|x| (1.0 + if x.count_ones() % 2 == 0 { theta.cos() } else { -theta.cos() }) / 16.0)
                .collect()
        };
        let (p, q) = (dist(0.75), dist(1.05));
        let td = |keep: &[usize]| {
            let a = DensityMatrix::from_diagonal(&marginal_distribution(&p, n, keep).unwrap()).unwrap();
            let b = DensityMatrix::from_diagonal(&marginal_distribution(&q, n, keep).unwrap()).unwrap();
            trace_distance(&a, &b).unwrap()
        };
        let chains: [&[&[usize]]; 2] = [&[&[0, 1, 2, 3], &[0, 1, 2], &[0, 1], &[0]], &[&[0, 1, 2, 3], &[1, 3], &[3]]];
        for chain in chains {
            for w in chain.windows(2) {
                assert!(td(w[1]) <= td(w[0]) + 1e-12);
            }
        }
        assert!(td(&[0, 1, 2, 3]) > 0.1);
        assert!(td(&[0, 1, 2]) < 1e-12);
    }
}
