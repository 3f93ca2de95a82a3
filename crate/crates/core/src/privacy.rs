//! Quantum Fisher information of the phase-encoded GHZ family and the
//! conditions under which only the mean parameter is extractable.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::quantum::{hermitian_eigen, DensityMatrix, PureState};
use crate::{Error, Result};

/// `‖σ_z/2‖_∞` for the single-qubit encoding generator.
pub const ENCODING_HAMILTONIAN_NORM: f64 = 0.5;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Eigenvalue sums below this are outside the support.
pub const SUPPORT_TOL: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn check_divisors(theta: &[f64], divisors: &[f64]) -> Result<()> {
    if theta.is_empty() {
        return Err(Error::invalid("parameter vector is empty"));
    }
    if divisors.len() != theta.len() {
        return Err(Error::invalid("one divisor per parameter required"));
    }
    if divisors.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::invalid("divisors must be positive"));
    }
    Ok(())
}

/// `(|0…0⟩ + e^{iΣθ_i/d_i}|1…1⟩)/√2`. The honest encoding uses `d_i = m`.
pub fn encoded_family_with_divisors(theta: &[f64], divisors: &[f64]) -> Result<PureState> {
    check_divisors(theta, divisors)?;
    let phase: f64 = theta.iter().zip(divisors).map(|(t, d)| t / d).sum();
    PureState::ghz_with_phase(theta.len(), phase)
}

pub fn encoded_family(theta: &[f64], m: usize) -> Result<PureState> {
    if m == 0 {
        return Err(Error::invalid("m must be positive"));
    }
    encoded_family_with_divisors(theta, &vec![m as f64; theta.len()])
}

/// Mean-value weights `1/m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    pub w: Vec<f64>,
}

impl WeightVector {
    pub fn mean(m: usize) -> Self {
        Self { w: vec![1.0 / m as f64; m] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SldSolution {
    pub l: DMatrix<Complex64>,
    /// Largest `|∂ρ|` entry (eigenbasis) dropped for lying outside the support.
    pub outside_support: f64,
}

impl SldSolution {
    pub fn flagged(&self) -> bool {
        self.outside_support > 1e-9
    }
}

/// Solve `Lρ + ρL = 2∂ρ` in the eigenbasis of `ρ`.
pub fn sld_solve(rho: &DensityMatrix, drho: &DMatrix<Complex64>) -> Result<SldSolution> {
    let dim = rho.dim();
    if drho.nrows() != dim || drho.ncols() != dim {
        return Err(Error::invalid("derivative dimension differs from the state"));
    }
    let (values, u) = hermitian_eigen(rho.entries());
    let d = u.adjoint() * drho * &u;
    let mut l_eig = DMatrix::<Complex64>::zeros(dim, dim);
    let mut outside: f64 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            let s = values[a] + values[b];
            if s < SUPPORT_TOL {
                outside = outside.max(d[(a, b)].norm());
            } else {
                l_eig[(a, b)] = d[(a, b)] * (2.0 / s);
            }
        }
    }
    Ok(SldSolution { l: &u * l_eig * u.adjoint(), outside_support: outside })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QfiMethod {
    Analytic,
    FiniteDifference,
    Sld,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QfiMatrix {
    #[serde(serialize_with = "rows")]
    pub entries: DMatrix<f64>,
    pub method: QfiMethod,
}

fn rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in m.row_iter() {
        seq.serialize_element(&r.iter().copied().collect::<Vec<_>>())?;
    }
    seq.end()
}

impl QfiMatrix {
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.entries.clone().svd(false, false).singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.entries - self.entries.transpose()).amax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.entries + self.entries.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }
}

fn vec_of(s: &PureState) -> DVector<Complex64> {
    DVector::from_column_slice(s.amplitudes())
}

/// `∂_iψ = (i/d_i) N_i ψ`, `N_i` the projector on agent `i` being `|1⟩`.
fn analytic_derivatives(psi: &PureState, divisors: &[f64]) -> Vec<DVector<Complex64>> {
    let n = psi.n();
    (0..n)
        .map(|i| {
            let mask = 1usize << (n - 1 - i);
            DVector::from_iterator(
                psi.amplitudes().len(),
                psi.amplitudes()
                    .iter()
                    .enumerate()
                    .map(|(idx, a)| if idx & mask != 0 { a * Complex64::new(0.0, 1.0 / divisors[i]) } else { c(0.0) }),
            )
        })
        .collect()
}

fn gauge_fixed(s: &PureState) -> DVector<Complex64> {
    let v = vec_of(s);
    let a0 = v[0];
    if a0.norm() > 0.0 {
        v * (a0.conj() / a0.norm())
    } else {
        v
    }
}

fn shifted(theta: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    t[i] += h;
    t
}

fn fd_derivatives(theta: &[f64], divisors: &[f64]) -> Result<Vec<DVector<Complex64>>> {
    (0..theta.len())
        .map(|i| {
            let plus = gauge_fixed(&encoded_family_with_divisors(&shifted(theta, i, FD_STEP), divisors)?);
            let minus = gauge_fixed(&encoded_family_with_divisors(&shifted(theta, i, -FD_STEP), divisors)?);
            Ok((plus - minus) / c(2.0 * FD_STEP))
        })
        .collect()
}

fn pure_state_qfi(psi: &DVector<Complex64>, d: &[DVector<Complex64>]) -> DMatrix<f64> {
    let n = d.len();
    let overlaps: Vec<Complex64> = d.iter().map(|di| di.dotc(psi)).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let inner = d[i].dotc(&d[j]);
        4.0 * (inner - overlaps[i] * overlaps[j].conj()).re
    })
}

fn density_derivative(psi: &DVector<Complex64>, dpsi: &DVector<Complex64>) -> DMatrix<Complex64> {
    dpsi * psi.adjoint() + psi * dpsi.adjoint()
}

pub fn qfi_matrix_with_divisors(theta: &[f64], divisors: &[f64], method: QfiMethod) -> Result<QfiMatrix> {
    let psi_state = encoded_family_with_divisors(theta, divisors)?;
    let psi = vec_of(&psi_state);
    let entries = match method {
        QfiMethod::Analytic => pure_state_qfi(&psi, &analytic_derivatives(&psi_state, divisors)),
        QfiMethod::FiniteDifference => pure_state_qfi(&gauge_fixed(&psi_state), &fd_derivatives(theta, divisors)?),
        QfiMethod::Sld => {
            let rho = DensityMatrix::from_pure(&psi_state);
            let ls: Vec<DMatrix<Complex64>> = analytic_derivatives(&psi_state, divisors)
                .iter()
                .map(|d| sld_solve(&rho, &density_derivative(&psi, d)).map(|s| s.l))
                .collect::<Result<_>>()?;
            let n = ls.len();
            DMatrix::from_fn(n, n, |i, j| (rho.entries() * &ls[i] * &ls[j]).trace().re)
        }
    };
    Ok(QfiMatrix { entries, method })
}

/// QFI of the honest encoding with divisor `m`.
pub fn qfi_matrix(theta: &[f64], m: usize, method: QfiMethod) -> Result<QfiMatrix> {
    if m == 0 {
        return Err(Error::invalid("m must be positive"));
    }
    qfi_matrix_with_divisors(theta, &vec![m as f64; theta.len()], method)
}

/// The three privacy metrics; all vanish for a private encoding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivacyConditions {
    /// `max_{i,j} ‖∂_iρ − ∂_jρ‖_tr` by central differences.
    pub max_derivative_gap: f64,
    /// Second-largest singular value of the QFI matrix.
    pub second_singular_value: f64,
    /// `max |Q − Q₁₁ m² w wᵀ|`.
    pub rank_one_deviation: f64,
}

impl PrivacyConditions {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_derivative_gap <= tol && self.second_singular_value <= tol && self.rank_one_deviation <= tol
    }
}

pub fn check_privacy_conditions_with_divisors(theta: &[f64], divisors: &[f64], m: usize) -> Result<PrivacyConditions> {
    check_divisors(theta, divisors)?;
    let n = theta.len();
    let rho_derivs: Vec<DMatrix<Complex64>> = (0..n)
        .map(|i| {
            let plus = DensityMatrix::from_pure(&encoded_family_with_divisors(&shifted(theta, i, FD_STEP), divisors)?);
            let minus = DensityMatrix::from_pure(&encoded_family_with_divisors(&shifted(theta, i, -FD_STEP), divisors)?);
            Ok((plus.entries() - minus.entries()) / c(2.0 * FD_STEP))
        })
        .collect::<Result<_>>()?;
    let mut gap: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            gap = gap.max(crate::quantum::trace_norm(&(&rho_derivs[i] - &rho_derivs[j])));
        }
    }
    let q = qfi_matrix_with_divisors(theta, divisors, QfiMethod::Analytic)?;
    let sv = q.singular_values();
    let w = 1.0 / m as f64;
    let scale = q.entries[(0, 0)] * (m * m) as f64;
    let ideal = DMatrix::from_element(n, n, scale * w * w);
    Ok(PrivacyConditions {
        max_derivative_gap: gap,
        second_singular_value: sv.get(1).copied().unwrap_or(0.0),
        rank_one_deviation: (&q.entries - ideal).amax(),
    })
}

pub fn check_privacy_conditions(theta: &[f64], m: usize) -> Result<PrivacyConditions> {
    if m == 0 {
        return Err(Error::invalid("m must be positive"));
    }
    check_privacy_conditions_with_divisors(theta, &vec![m as f64; theta.len()], m)
}

/// Columns: `w` followed by an orthonormal completion from Gram–Schmidt
/// against the standard basis, in index order.
pub fn orthogonal_completion(w: &[f64]) -> Result<DMatrix<f64>> {
    let n = w.len();
    let wv = DVector::from_column_slice(w);
    if wv.norm() == 0.0 {
        return Err(Error::invalid("weight vector is zero"));
    }
    let mut basis: Vec<DVector<f64>> = vec![wv.normalize()];
    for e in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = DVector::from_fn(n, |i, _| if i == e { 1.0 } else { 0.0 });
        for b in &basis {
            v -= b * b.dot(&v);
        }
        if v.norm() > 1e-10 {
            basis.push(v.normalize());
        }
    }
    let mut cols = basis;
    cols[0] = wv;
    Ok(DMatrix::from_columns(&cols))
}

/// `BᵀQB` for the completion of `w`.
pub fn reparametrized_qfi(q: &QfiMatrix, w: &[f64]) -> Result<DMatrix<f64>> {
    if w.len() != q.entries.nrows() {
        return Err(Error::invalid("weight length differs from QFI size"));
    }
    let b = orthogonal_completion(w)?;
    Ok(b.transpose() * &q.entries * b)
}

fn check_eps(eps_sv: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps_sv) {
        return Err(Error::invalid(format!("epsilon_sv {eps_sv} outside [0, 1]")));
    }
    Ok(())
}

/// `4‖H‖_∞ ε_SV` with the encoding's `‖H‖_∞ = 1/2`, i.e. `2 ε_SV`.
pub fn privacy_epsilon(eps_sv: f64) -> Result<f64> {
    privacy_epsilon_general(eps_sv, ENCODING_HAMILTONIAN_NORM)
}

/// `4‖H‖_∞ ε_SV` for an arbitrary generator norm.
pub fn privacy_epsilon_general(eps_sv: f64, h_norm: f64) -> Result<f64> {
    check_eps(eps_sv)?;
    if h_norm < 0.0 {
        return Err(Error::invalid("operator norm must be nonnegative"));
    }
    Ok(4.0 * h_norm * eps_sv)
}
