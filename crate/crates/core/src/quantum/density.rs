use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{complement, gather_bits, validate_subset, PureState, NORM_TOL};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    d: usize,
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (all within 1e-10).
    pub fn new(d: usize, entries: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << d;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::invalid(format!(
                "density matrix for {d} qubits must be {dim}x{dim}"
            )));
        }
        let herm_err = (&entries - entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > NORM_TOL {
            return Err(Error::invalid(format!("matrix not Hermitian (err {herm_err:e})")));
        }
        let tr = entries.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > NORM_TOL {
            return Err(Error::invalid(format!("trace {tr} differs from 1")));
        }
        let min_eig = hermitian_eigenvalues(&entries).into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -NORM_TOL {
            return Err(Error::invalid(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { d, entries })
    }

    pub fn from_pure(state: &PureState) -> Self {
        let v = DVector::from_column_slice(state.amplitudes());
        Self { d: state.n(), entries: &v * v.adjoint() }
    }

    /// Classical distribution as a diagonal state; `probs.len()` must be `2^d`.
    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let dim = probs.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::invalid("distribution length must be a power of two"));
        }
        let entries = DMatrix::from_diagonal(&DVector::from_iterator(
            dim,
            probs.iter().map(|&p| Complex64::new(p, 0.0)),
        ));
        Self::new(dim.trailing_zeros() as usize, entries)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        1 << self.d
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }
}

/// Real symmetric form `[[A, −B], [B, A]]` of `A + iB`. Every eigenvalue of
/// the Hermitian matrix appears twice. The complex solver in nalgebra returns
/// NaN on some rank-deficient inputs, the real one does not.
fn real_embedding(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let sym = (m + m.adjoint()).scale(0.5);
    let d = sym.nrows();
    DMatrix::from_fn(2 * d, 2 * d, |r, c| {
        let z = sym[(r % d, c % d)];
        match (r < d, c < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Ascending eigenvalues of a Hermitian matrix.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut all: Vec<f64> = real_embedding(m).symmetric_eigenvalues().iter().copied().collect();
    all.sort_by(f64::total_cmp);
    all.into_iter().step_by(2).collect()
}

/// Eigenvalues and unitary eigenvector matrix (columns) of a Hermitian matrix.
pub(crate) fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let d = m.nrows();
    let eig = real_embedding(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let candidates = order
        .into_iter()
        .map(|k| {
            let col = eig.eigenvectors.column(k);
            DVector::from_fn(d, |r, _| Complex64::new(col[r], col[r + d]))
        })
        .chain((0..d).map(|r| DVector::from_fn(d, |i, _| Complex64::new(f64::from(u8::from(i == r)), 0.0))));
    let sym = (m + m.adjoint()).scale(0.5);
    let mut values = Vec::with_capacity(d);
    let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(d);
    for mut z in candidates {
        if basis.len() == d {
            break;
        }
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&z);
                z -= b * proj;
            }
        }
        let norm = z.norm();
        // a candidate and its partner `i·z` share a span; keep one of them
        if norm > 1e-3 {
            let z = z / Complex64::new(norm, 0.0);
            values.push(z.dotc(&(&sym * &z)).re);
            basis.push(z);
        }
    }
    (values, DMatrix::from_columns(&basis))
}

/// `Σ|λ|` of a Hermitian matrix.
pub(crate) fn trace_norm(m: &DMatrix<Complex64>) -> f64 {
    hermitian_eigenvalues(m).iter().map(|l| l.abs()).sum()
}

/// `½‖a − b‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.d != b.d {
        return Err(Error::invalid(format!(
            "trace distance of {}- and {}-qubit states",
            a.d, b.d
        )));
    }
    Ok((0.5 * trace_norm(&(&a.entries - &b.entries))).clamp(0.0, 1.0))
}

impl PureState {
    /// Partial trace onto `subset` (a proper, nonempty set of agents). Row and
    /// column indices follow the subset order, first agent most significant.
    pub fn reduced_density(&self, subset: &[usize]) -> Result<DensityMatrix> {
        let n = self.n();
        validate_subset(n, subset)?;
        if subset.len() == n {
            return Err(Error::invalid(
                "reduced state on the full set; use DensityMatrix::from_pure",
            ));
        }
        let rest = complement(n, subset);
        let (da, dc) = (1usize << subset.len(), 1usize << rest.len());
        // psi[a, c] laid out as a da x dc matrix
        let mut psi = DMatrix::<Complex64>::zeros(da, dc);
        for (i, &amp) in self.amplitudes().iter().enumerate() {
            psi[(gather_bits(i, n, subset), gather_bits(i, n, &rest))] = amp;
        }
        let rho = &psi * psi.adjoint();
        Ok(DensityMatrix { d: subset.len(), entries: rho })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(p: &[f64]) -> DensityMatrix {
        DensityMatrix::from_diagonal(p).unwrap()
    }

    #[test]
    fn reduced_ghz_examples() {
        let g2 = PureState::ghz(2).unwrap();
        let r = g2.reduced_density(&[0]).unwrap();
        assert_abs_diff_eq!(trace_distance(&r, &diag(&[0.5, 0.5])).unwrap(), 0.0, epsilon = 1e-12);

        let g3 = PureState::ghz(3).unwrap();
        let r = g3.reduced_density(&[0]).unwrap();
        assert_abs_diff_eq!(trace_distance(&r, &diag(&[0.5, 0.5])).unwrap(), 0.0, epsilon = 1e-12);

        let g4 = PureState::ghz(4).unwrap();
        let r = g4.reduced_density(&[0, 1]).unwrap();
        let expected = diag(&[0.5, 0.0, 0.0, 0.5]);
        assert_abs_diff_eq!(trace_distance(&r, &expected).unwrap(), 0.0, epsilon = 1e-12);
        assert!(DensityMatrix::new(2, r.entries().clone()).is_ok());
    }

    #[test]
    fn reduced_state_is_phase_independent() {
        let base = PureState::ghz(4).unwrap().reduced_density(&[1, 3]).unwrap();
        for k in 0..12 {
            let phase = k as f64 * 0.5;
            let r = PureState::ghz_with_phase(4, phase).unwrap().reduced_density(&[1, 3]).unwrap();
            assert!(trace_distance(&r, &base).unwrap() < 1e-12);
        }
    }

    #[test]
    fn reduced_density_rejects_full_set() {
        let g = PureState::ghz(3).unwrap();
        assert!(matches!(g.reduced_density(&[0, 1, 2]), Err(Error::InvalidArgument(_))));
        assert!(g.reduced_density(&[]).is_err());
        assert!(g.reduced_density(&[3]).is_err());
    }

    #[test]
    fn trace_distance_examples() {
        let rho = DensityMatrix::from_pure(&PureState::ghz(2).unwrap());
        assert_abs_diff_eq!(trace_distance(&rho, &rho).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_distance(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])).unwrap(), 1.0, epsilon = 1e-12);
        let a = diag(&[0.75, 0.25]);
        let b = diag(&[0.5, 0.5]);
        assert_abs_diff_eq!(trace_distance(&a, &b).unwrap(), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_distance(&b, &a).unwrap(), 0.25, epsilon = 1e-12);
        assert!(trace_distance(&a, &rho).is_err());
    }

    #[test]
    fn hermitian_eigen_handles_rank_one_projectors() {
        for n in 1..=6 {
            let psi = PureState::ghz_with_phase(n, 0.9).unwrap();
            let rho = DensityMatrix::from_pure(&psi);
            let (values, u) = hermitian_eigen(rho.entries());
            assert!(values.iter().all(|v| v.is_finite()));
            assert_abs_diff_eq!(values.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            let dim = 1 << n;
            let unitary_gap = (u.adjoint() * &u - DMatrix::<Complex64>::identity(dim, dim)).camax();
            assert!(unitary_gap < 1e-12);
            let diag = DMatrix::from_diagonal(&DVector::from_iterator(dim, values.iter().map(|&v| Complex64::new(v, 0.0))));
            assert!((&u * diag * u.adjoint() - rho.entries()).camax() < 1e-12);
        }
    }

    #[test]
    fn invalid_density_matrices_rejected() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let not_herm = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.3), c(0.0), c(0.5)]);
        assert!(DensityMatrix::new(1, not_herm).is_err());
        let bad_trace = DMatrix::from_row_slice(2, 2, &[c(0.6), c(0.0), c(0.0), c(0.6)]);
        assert!(DensityMatrix::new(1, bad_trace).is_err());
        let negative = DMatrix::from_row_slice(2, 2, &[c(1.2), c(0.0), c(0.0), c(-0.2)]);
        assert!(DensityMatrix::new(1, negative).is_err());
    }
}
