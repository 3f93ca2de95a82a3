use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{complement, gather_bits, validate_subset, PureState, Unitary2};
use crate::{Error, Result};

/// Measurement outcomes, one bit per measured agent in measurement order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct OutcomeVector {
    bits: Vec<u8>,
}

impl OutcomeVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::invalid("outcome bits must be 0 or 1"));
        }
        Ok(Self { bits })
    }

    /// Unpack `len` bits of `packed`, most significant first.
    pub fn from_packed(packed: usize, len: usize) -> Self {
        let bits = (0..len).map(|i| ((packed >> (len - 1 - i)) & 1) as u8).collect();
        Self { bits }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn parity(&self) -> u8 {
        self.bits.iter().fold(0, |acc, b| acc ^ b)
    }

    pub fn packed(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::invalid(format!("bad outcome character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self { bits })
    }
}

impl Serialize for OutcomeVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_bitstring())
    }
}

impl<'de> Deserialize<'de> for OutcomeVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        OutcomeVector::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl PureState {
    fn hadamard_on(&self, subset: &[usize]) -> PureState {
        let mut h = self.clone();
        let had = Unitary2::hadamard();
        for &a in subset {
            h.apply_unitary_in_place(a, &had);
        }
        h
    }

    /// Exact probability of every X-basis outcome on `subset`, indexed by the
    /// packed outcome (first subset agent most significant).
    pub fn x_outcome_distribution(&self, subset: &[usize]) -> Result<Vec<f64>> {
        validate_subset(self.n(), subset)?;
        let rotated = self.hadamard_on(subset);
        let mut probs = vec![0.0; 1 << subset.len()];
        for (i, a) in rotated.amplitudes().iter().enumerate() {
            probs[gather_bits(i, self.n(), subset)] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Measure `subset` in the X basis.
    ///
    /// Returns the outcomes (subset order) and the renormalized post-measurement
    /// state of the remaining agents in ascending agent order, or `None` when
    /// every qubit was measured.
    pub fn measure_x_subset<R: Rng + ?Sized>(
        &self,
        subset: &[usize],
        rng: &mut R,
    ) -> Result<(OutcomeVector, Option<PureState>)> {
        let n = self.n();
        validate_subset(n, subset)?;
        let rotated = self.hadamard_on(subset);
        let index = rotated.sample_index(rng);
        let outcome = gather_bits(index, n, subset);
        let outcomes = OutcomeVector::from_packed(outcome, subset.len());
        if subset.len() == n {
            return Ok((outcomes, None));
        }
        let rest = complement(n, subset);
        let mut residual = vec![Complex64::new(0.0, 0.0); 1 << rest.len()];
        for (i, &a) in rotated.amplitudes().iter().enumerate() {
            if gather_bits(i, n, subset) == outcome {
                residual[gather_bits(i, n, &rest)] = a;
            }
        }
        let residual = PureState::normalized(rest.len(), residual)
            .map_err(|_| Error::Internal("sampled a zero-probability outcome".into()))?;
        Ok((outcomes, Some(residual)))
    }

    /// Measure every qubit in the X basis.
    pub fn measure_x_all<R: Rng + ?Sized>(&self, rng: &mut R) -> OutcomeVector {
        let all: Vec<usize> = (0..self.n()).collect();
        let rotated = self.hadamard_on(&all);
        OutcomeVector::from_packed(rotated.sample_index(rng), self.n())
    }

    /// Project `agents` onto the X-basis outcome `outcomes` without
    /// renormalizing; returns the unnormalized state of the other agents.
    pub(crate) fn project_x(&self, agents: &[usize], outcomes: &OutcomeVector) -> Result<Vec<Complex64>> {
        let n = self.n();
        validate_subset(n, agents)?;
        if outcomes.len() != agents.len() {
            return Err(Error::invalid("outcome length differs from projected agents"));
        }
        let rotated = self.hadamard_on(agents);
        let target = outcomes.packed();
        let rest = complement(n, agents);
        let mut out = vec![Complex64::new(0.0, 0.0); 1 << rest.len()];
        for (i, &a) in rotated.amplitudes().iter().enumerate() {
            if gather_bits(i, n, agents) == target {
                out[gather_bits(i, n, &rest)] = a;
            }
        }
        Ok(out)
    }
}

/// Sample an X-basis measurement of every qubit of
/// `(|0…0⟩ + e^{iφ}|1…1⟩)/√2` in `O(n)`.
///
/// The parity is even with probability `(1 + cos φ)/2`; given the parity the
/// string is uniform. Only valid for the honest GHZ-diagonal family.
pub fn sample_ghz_phase_fastpath<R: Rng + ?Sized>(n: usize, phase: f64, rng: &mut R) -> Result<OutcomeVector> {
    if n == 0 {
        return Err(Error::invalid("qubit count must be at least 1"));
    }
    let p_even = ((1.0 + phase.cos()) / 2.0).clamp(0.0, 1.0);
    let parity = u8::from(!rng.random_bool(p_even));
    let mut bits: Vec<u8> = (0..n - 1).map(|_| u8::from(rng.random::<bool>())).collect();
    let partial = bits.iter().fold(0, |acc, b| acc ^ b);
    bits.push(partial ^ parity);
    Ok(OutcomeVector { bits })
}
