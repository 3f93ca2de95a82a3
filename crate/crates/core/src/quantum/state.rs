use num_complex::Complex64;
use rand::Rng;

use super::{agent_mask, NORM_TOL};
use crate::{Error, Result};

/// Dense states above this size are refused; honest rounds use the fast path.
pub const MAX_DENSE_QUBITS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("qubit count must be at least 1"));
    }
    if n > MAX_DENSE_QUBITS {
        return Err(Error::invalid(format!(
            "dense statevector limited to {MAX_DENSE_QUBITS} qubits, got {n}"
        )));
    }
    Ok(())
}

impl PureState {
    pub fn from_amplitudes(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_size(n)?;
        if amplitudes.len() != 1 << n {
            return Err(Error::invalid(format!(
                "expected {} amplitudes, got {}",
                1usize << n,
                amplitudes.len()
            )));
        }
        let state = Self { n, amplitudes };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state not normalized: |psi|^2 = {norm}")));
        }
        Ok(state)
    }

    /// Normalizes `amplitudes` first; fails on a zero vector.
    pub fn normalized(n: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::invalid("cannot normalize the zero vector"));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(n, amplitudes)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_size(n)?;
        if index >= 1 << n {
            return Err(Error::invalid("basis index out of range"));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amplitudes })
    }

    /// `(|0…0⟩ + |1…1⟩)/√2`.
    pub fn ghz(n: usize) -> Result<Self> {
        Self::ghz_with_phase(n, 0.0)
    }

    /// `(|0…0⟩ + e^{iφ}|1…1⟩)/√2`.
    pub fn ghz_with_phase(n: usize, phase: f64) -> Result<Self> {
        check_size(n)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        amplitudes[0] = Complex64::new(h, 0.0);
        amplitudes[(1 << n) - 1] += Complex64::from_polar(h, phase);
        Ok(Self { n, amplitudes })
    }

    /// `|+⟩^⊗n`.
    pub fn plus_product(n: usize) -> Result<Self> {
        check_size(n)?;
        let a = (1.0 / (1u64 << n) as f64).sqrt();
        Ok(Self { n, amplitudes: vec![Complex64::new(a, 0.0); 1 << n] })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.n != other.n {
            return Err(Error::invalid("inner product of states with different sizes"));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    fn check_agent(&self, agent: usize) -> Result<()> {
        if agent >= self.n {
            return Err(Error::invalid(format!(
                "agent {agent} out of range for {} qubits",
                self.n
            )));
        }
        Ok(())
    }

    /// Apply `|0⟩⟨0| + e^{iθ/m}|1⟩⟨1|` to `agent`.
    pub fn apply_local_phase(&self, agent: usize, theta: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("phase divisor m must be at least 1"));
        }
        self.apply_phase_angle(agent, theta / m as f64)
    }

    pub(crate) fn apply_phase_angle(&self, agent: usize, angle: f64) -> Result<Self> {
        self.check_agent(agent)?;
        let mask = agent_mask(self.n, agent);
        let factor = Complex64::from_polar(1.0, angle);
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &a)| if i & mask != 0 { a * factor } else { a })
            .collect();
        Ok(Self { n: self.n, amplitudes })
    }

    pub fn apply_single_qubit_unitary(&self, agent: usize, u: &Unitary2) -> Result<Self> {
        self.check_agent(agent)?;
        let mut out = self.clone();
        out.apply_unitary_in_place(agent, u);
        Ok(out)
    }

    pub(crate) fn apply_unitary_in_place(&mut self, agent: usize, u: &Unitary2) {
        let mask = agent_mask(self.n, agent);
        let m = u.matrix();
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply_pauli_string(&self, p: &PauliString) -> Result<Self> {
        if p.len() != self.n {
            return Err(Error::invalid("Pauli string length differs from qubit count"));
        }
        let (x, z, ys) = p.masks(self.n);
        let global = Complex64::i().powu(ys);
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (i, &a) in self.amplitudes.iter().enumerate() {
            let sign = if (i & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            amplitudes[i ^ x] = global * a * sign;
        }
        Ok(Self { n: self.n, amplitudes })
    }

    /// `⟨ψ|P|ψ⟩`, real for Hermitian Pauli strings.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        let moved = self.apply_pauli_string(p)?;
        Ok(self.inner(&moved)?.re)
    }

    /// Draw a computational-basis index by the Born rule.
    pub(crate) fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            acc += a.norm_sqr();
            if u < acc {
                return i;
            }
        }
        // rounding: fall back to the last index with support
        self.amplitudes
            .iter()
            .rposition(|a| a.norm_sqr() > 0.0)
            .unwrap_or(0)
    }
}

/// A validated 2×2 unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2([[Complex64; 2]; 2]);

impl Unitary2 {
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        for r in 0..2 {
            for c in 0..2 {
                let entry: Complex64 = (0..2).map(|k| m[k][r].conj() * m[k][c]).sum();
                let target = if r == c { 1.0 } else { 0.0 };
                if (entry - Complex64::new(target, 0.0)).norm() > super::NORM_TOL {
                    return Err(Error::invalid(format!("matrix is not unitary: {m:?}")));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.0
    }

    fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        let r = |x| Complex64::new(x, 0.0);
        Self([[r(a), r(b)], [r(c), r(d)]])
    }

    pub fn identity() -> Self {
        Self::real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn pauli_x() -> Self {
        Self::real(0.0, 1.0, 1.0, 0.0)
    }

    pub fn pauli_z() -> Self {
        Self::real(1.0, 0.0, 0.0, -1.0)
    }

    pub fn pauli_y() -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self([[z, -Complex64::i()], [Complex64::i(), z]])
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::real(h, h, h, -h)
    }

    /// `diag(1, e^{iφ})`.
    pub fn phase(phi: f64) -> Self {
        let mut u = Self::identity();
        u.0[1][1] = Complex64::from_polar(1.0, phi);
        u
    }

    /// `exp(-i φ Z / 2)`.
    pub fn rz(phi: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self([
            [Complex64::from_polar(1.0, -phi / 2.0), z],
            [z, Complex64::from_polar(1.0, phi / 2.0)],
        ])
    }

    /// `exp(-i φ X / 2)`.
    pub fn rx(phi: f64) -> Self {
        let c = Complex64::new((phi / 2.0).cos(), 0.0);
        let s = Complex64::new(0.0, -(phi / 2.0).sin());
        Self([[c, s], [s, c]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// One Pauli factor per agent, agent order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString(pub Vec<Pauli>);

impl PauliString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn all_x(n: usize) -> Self {
        Self(vec![Pauli::X; n])
    }

    /// `Z_a Z_b` with identities elsewhere.
    pub fn zz(n: usize, a: usize, b: usize) -> Self {
        let mut v = vec![Pauli::I; n];
        v[a] = Pauli::Z;
        v[b] = Pauli::Z;
        Self(v)
    }

    /// (x-flip mask, z-sign mask, number of Y factors).
    fn masks(&self, n: usize) -> (usize, usize, u32) {
        let mut x = 0;
        let mut z = 0;
        let mut ys = 0;
        for (agent, p) in self.0.iter().enumerate() {
            let m = agent_mask(n, agent);
            match p {
                Pauli::I => {}
                Pauli::X => x |= m,
                Pauli::Z => z |= m,
                Pauli::Y => {
                    x |= m;
                    z |= m;
                    ys += 1;
                }
            }
        }
        (x, z, ys)
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for p in &self.0 {
            let c = match p {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_amps(state: &PureState, expected: &[Complex64]) {
        assert_eq!(state.amplitudes().len(), expected.len());
        for (a, e) in state.amplitudes().iter().zip(expected) {
            assert!((a - e).norm() < 1e-12, "{a} != {e}");
        }
    }

    #[test]
    fn ghz_amplitudes() {
        let h = FRAC_1_SQRT_2;
        assert_amps(&PureState::ghz(1).unwrap(), &[c(h, 0.0), c(h, 0.0)]);
        let g3 = PureState::ghz(3).unwrap();
        for (i, a) in g3.amplitudes().iter().enumerate() {
            let e = if i == 0 || i == 7 { h } else { 0.0 };
            assert_abs_diff_eq!(a.re, e, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-15);
        }
        assert!(matches!(PureState::ghz(0), Err(Error::InvalidArgument(_))));
        assert!(PureState::ghz(MAX_DENSE_QUBITS + 1).is_err());
    }

    #[test]
    fn bit_order_is_msb_first() {
        // agent 0 in |1> on two qubits is index 0b10
        let s = PureState::basis(2, 0)
            .unwrap()
            .apply_single_qubit_unitary(0, &Unitary2::pauli_x())
            .unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0b10].re, 1.0);
    }

    #[test]
    fn local_phase_examples() {
        let g = PureState::ghz(2).unwrap();
        assert_eq!(g.apply_local_phase(0, 0.0, 1).unwrap(), g);
        let h = FRAC_1_SQRT_2;
        let s = g.apply_local_phase(0, FRAC_PI_2, 1).unwrap();
        assert_amps(&s, &[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(h, FRAC_PI_2)]);
        assert!(g.apply_local_phase(2, 0.1, 1).is_err());
        assert!(g.apply_local_phase(0, 0.1, 0).is_err());
    }

    #[test]
    fn all_agent_phases_collect_on_ones_component() {
        let thetas = [0.3, -1.1, 2.0, 0.7];
        let m = thetas.len();
        let mut s = PureState::ghz(m).unwrap();
        for (a, &t) in thetas.iter().enumerate() {
            s = s.apply_local_phase(a, t, m).unwrap();
        }
        let mean: f64 = thetas.iter().sum::<f64>() / m as f64;
        let expected = PureState::ghz_with_phase(m, mean).unwrap();
        assert_amps(&s, expected.amplitudes());
    }

    #[test]
    fn unitary_examples() {
        let g = PureState::ghz(2).unwrap();
        let h = FRAC_1_SQRT_2;
        assert_eq!(g.apply_single_qubit_unitary(0, &Unitary2::identity()).unwrap(), g);
        let z = g.apply_single_qubit_unitary(0, &Unitary2::pauli_z()).unwrap();
        assert_amps(&z, &[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-h, 0.0)]);
        let x = g.apply_single_qubit_unitary(0, &Unitary2::pauli_x()).unwrap();
        assert_amps(&x, &[c(0.0, 0.0), c(h, 0.0), c(h, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn non_unitary_rejected() {
        let r = |x| Complex64::new(x, 0.0);
        assert!(Unitary2::new([[r(1.0), r(0.0)], [r(0.0), r(2.0)]]).is_err());
        assert!(Unitary2::new([[r(1.0), r(1.0)], [r(0.0), r(1.0)]]).is_err());
        assert!(Unitary2::new(*Unitary2::hadamard().matrix()).is_ok());
        assert!(Unitary2::new(*Unitary2::pauli_y().matrix()).is_ok());
    }

    #[test]
    fn stabilizer_expectations_of_ghz() {
        let g = PureState::ghz(4).unwrap();
        assert_abs_diff_eq!(g.expectation(&PauliString::all_x(4)).unwrap(), 1.0, epsilon = 1e-12);
        for a in 0..3 {
            assert_abs_diff_eq!(g.expectation(&PauliString::zz(4, a, a + 1)).unwrap(), 1.0, epsilon = 1e-12);
        }
        let rotated = PureState::ghz_with_phase(4, PI / 3.0).unwrap();
        assert_abs_diff_eq!(
            rotated.expectation(&PauliString::all_x(4)).unwrap(),
            (PI / 3.0).cos(),
            epsilon = 1e-12
        );
        let y = PauliString(vec![Pauli::Y, Pauli::Y, Pauli::X, Pauli::X]);
        // Y Y X X on GHZ: i^2 (-1)^{b0+b1} flips all bits → -1
        assert_abs_diff_eq!(g.expectation(&y).unwrap(), -1.0, epsilon = 1e-12);
    }

    fn random_unitary(a: f64, b: f64, c: f64) -> Unitary2 {
        let mut m = *Unitary2::rz(a).matrix();
        let rx = *Unitary2::rx(b).matrix();
        let rz2 = *Unitary2::rz(c).matrix();
        let mul = |p: [[Complex64; 2]; 2], q: [[Complex64; 2]; 2]| {
            let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    r[i][j] = p[i][0] * q[0][j] + p[i][1] * q[1][j];
                }
            }
            r
        };
        m = mul(mul(m, rx), rz2);
        Unitary2::new(m).unwrap()
    }

    proptest! {
        #[test]
        fn unitaries_preserve_norm(n in 1usize..7, agent_seed in 0usize..64,
                                   a in -PI..PI, b in -PI..PI, c in -PI..PI, phase in -PI..PI) {
            let agent = agent_seed % n;
            let s = PureState::ghz_with_phase(n, phase).unwrap();
            let out = s.apply_single_qubit_unitary(agent, &random_unitary(a, b, c)).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < NORM_TOL);
            let out = out.apply_local_phase(agent, a, 3).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < NORM_TOL);
        }

        #[test]
        fn local_phases_commute(n in 2usize..7, thetas in proptest::collection::vec(-PI..PI, 6),
                                rot in 0usize..6) {
            let base = PureState::ghz(n).unwrap();
            let order: Vec<usize> = (0..n).collect();
            let mut rotated = order.clone();
            rotated.rotate_left(rot % n);
            rotated.reverse();
            let apply = |ord: &[usize]| {
                ord.iter().fold(base.clone(), |s, &a| s.apply_local_phase(a, thetas[a], n).unwrap())
            };
            let a = apply(&order);
            let b = apply(&rotated);
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
