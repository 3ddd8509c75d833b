//! Dense complex linear algebra for small quantum systems: Hermitian
//! observables with cached spectral data, normalized state vectors, exact
//! unitaries of Hermitian generators, and Kronecker products.
//!
//! Tensor products are system-major: in `a ⊗ b` the index of `a` varies
//! slowest, so the joint basis index is `i_a * dim_b + i_b`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{LabError, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Largest joint dimension a Kronecker product may produce.
pub const JOINT_DIMENSION_CAP: usize = 1 << 20;

/// Relative tolerance for the Hermiticity check, `max|M - M†| <= tol * max|M|`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default eigenvalue grouping tolerance, relative to the spectral range.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

/// Norm tolerance for [`StateVector`].
pub const NORM_TOL: f64 = 1e-12;

/// Largest absolute deviation `max |M_ij - conj(M_ji)|`.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(LabError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asymmetry = hermiticity_defect(m);
    let allowed = HERMITIAN_TOL * max_abs(m);
    if asymmetry > allowed {
        return Err(LabError::NotHermitian { asymmetry, allowed });
    }
    Ok(())
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// `max |U†U - I|` entrywise.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.ncols();
    let gram = u.adjoint() * u;
    (gram - ComplexMatrix::identity(n, n)).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn pauli_x() -> ComplexMatrix {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    ComplexMatrix::from_row_slice(2, 2, &[o, l, l, o])
}

pub fn pauli_y() -> ComplexMatrix {
    let o = C64::new(0.0, 0.0);
    ComplexMatrix::from_row_slice(2, 2, &[o, C64::new(0.0, -1.0), C64::new(0.0, 1.0), o])
}

pub fn pauli_z() -> ComplexMatrix {
    diagonal(&[1.0, -1.0])
}

pub fn diagonal(values: &[f64]) -> ComplexMatrix {
    let d = DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0)));
    ComplexMatrix::from_diagonal(&d)
}

/// Eigenvalues in ascending order with the matching eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_function(|l| C64::new(l, 0.0))
    }

    /// `V diag(f(λ)) V†`.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda);
            for z in scaled.column_mut(k).iter_mut() {
                *z *= w;
            }
        }
        scaled * v.adjoint()
    }

    /// `exp(-i θ H / ħ)`.
    pub fn exp_phase(&self, theta: f64, hbar: f64) -> ComplexMatrix {
        self.apply_function(|l| C64::from_polar(1.0, -theta * l / hbar))
    }
}

/// Diagonalize a Hermitian matrix.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<SpectralDecomposition> {
    check_hermitian(m)?;
    let n = m.nrows();
    if n == 0 {
        return Err(LabError::InvalidInput("empty matrix".into()));
    }
    // Symmetrize so the solver sees an exactly Hermitian input.
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 1000 * n + 1000)
        .ok_or(LabError::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// One eigenvalue group of an [`Observable`].
#[derive(Debug, Clone)]
pub struct Eigenspace {
    pub value: f64,
    pub rank: usize,
    pub projector: ComplexMatrix,
}

/// A Hermitian operator with its spectral decomposition and grouped spectrum.
#[derive(Debug, Clone)]
pub struct Observable {
    matrix: ComplexMatrix,
    decomposition: SpectralDecomposition,
    spectrum: Vec<Eigenspace>,
    degeneracy_tol: f64,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_degeneracy_tol(matrix, DEFAULT_DEGENERACY_TOL)
    }

    pub fn with_degeneracy_tol(matrix: ComplexMatrix, degeneracy_tol: f64) -> Result<Self> {
        if !(degeneracy_tol >= 0.0) {
            return Err(LabError::InvalidInput(format!(
                "degeneracy tolerance must be non-negative, got {degeneracy_tol}"
            )));
        }
        let decomposition = hermitian_eig(&matrix)?;
        let spectrum = group_spectrum(&decomposition, degeneracy_tol);
        Ok(Self {
            matrix,
            decomposition,
            spectrum,
            degeneracy_tol,
        })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(diagonal(values))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.decomposition.eigenvalues
    }

    /// Distinct eigenvalues (after grouping) with their projectors, ascending.
    pub fn spectrum(&self) -> &[Eigenspace] {
        &self.spectrum
    }

    pub fn degeneracy_tol(&self) -> f64 {
        self.degeneracy_tol
    }

    /// Scaled copy `c·A` sharing the eigenvectors.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::with_degeneracy_tol(self.matrix.scale(c), self.degeneracy_tol)
    }
}

fn group_spectrum(dec: &SpectralDecomposition, tol: f64) -> Vec<Eigenspace> {
    let n = dec.dim();
    let lo = dec.eigenvalues[0];
    let hi = dec.eigenvalues[n - 1];
    let range = hi - lo;
    let threshold = tol * range;
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..n {
        let gap = dec.eigenvalues[k] - dec.eigenvalues[k - 1];
        if range == 0.0 || gap < threshold {
            groups.last_mut().unwrap().push(k);
        } else {
            groups.push(vec![k]);
        }
    }
    groups
        .into_iter()
        .map(|members| {
            let value = members.iter().map(|&k| dec.eigenvalues[k]).sum::<f64>() / members.len() as f64;
            let mut projector = ComplexMatrix::zeros(n, n);
            for &k in &members {
                let v = dec.eigenvectors.column(k);
                projector += &v * v.adjoint();
            }
            Eigenspace {
                value,
                rank: members.len(),
                projector,
            }
        })
        .collect()
}

/// `exp(-i θ G / ħ)` built from the cached spectral decomposition of `G`.
pub fn unitary_from_generator(generator: &Observable, theta: f64, hbar: f64) -> ComplexMatrix {
    generator.decomposition().exp_phase(theta, hbar)
}

/// Kronecker product with the default joint-dimension cap.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    tensor_product_capped(a, b, JOINT_DIMENSION_CAP)
}

pub fn tensor_product_capped(a: &ComplexMatrix, b: &ComplexMatrix, cap: usize) -> Result<ComplexMatrix> {
    for requested in [a.nrows().saturating_mul(b.nrows()), a.ncols().saturating_mul(b.ncols())] {
        if requested > cap {
            return Err(LabError::DimensionOverflow { requested, cap });
        }
    }
    Ok(a.kronecker(b))
}

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: ComplexVector,
}

impl StateVector {
    /// Accepts amplitudes that are already normalized to within [`NORM_TOL`].
    pub fn new(amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(LabError::InvalidInput("state must have dimension >= 1".into()));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(LabError::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || !(norm > 0.0) || !norm.is_finite() {
            return Err(LabError::NotNormalized { norm });
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn from_complex(amplitudes: &[C64]) -> Result<Self> {
        Self::normalized(ComplexVector::from_column_slice(amplitudes))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(ComplexVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    /// The `k`-th standard basis vector.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut amplitudes = ComplexVector::zeros(dim);
        amplitudes[k] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// Column `k` of a unitary matrix.
    pub fn from_column(u: &ComplexMatrix, k: usize) -> Result<Self> {
        Self::new(u.column(k).into_owned())
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> ComplexVector {
        self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn with_global_phase(&self, theta: f64) -> Self {
        Self {
            amplitudes: self.amplitudes.map(|z| z * C64::from_polar(1.0, theta)),
        }
    }

    /// `U|self⟩`; `u` must be unitary for the result to stay normalized.
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.ncols() != self.dim() {
            return Err(LabError::DimensionMismatch(format!(
                "operator has {} columns, state has dimension {}",
                u.ncols(),
                self.dim()
            )));
        }
        Self::new(u * &self.amplitudes)
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-random state from a normalized complex Gaussian vector.
pub fn random_state_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    assert!(dim >= 1, "dimension must be at least 1");
    loop {
        let v = ComplexVector::from_fn(dim, |_, _| complex_gaussian(rng));
        if let Ok(s) = StateVector::normalized(v) {
            return s;
        }
    }
}

pub fn random_state(dim: usize, seed: u64) -> StateVector {
    random_state_with(&mut seeded_rng(seed), dim)
}

/// `(M + M†)/2` for a complex Gaussian `M`.
pub fn random_hermitian_matrix_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    assert!(dim >= 1, "dimension must be at least 1");
    let m = ComplexMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    (&m + m.adjoint()).scale(0.5)
}

pub fn random_hermitian_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Observable {
    Observable::new(random_hermitian_matrix_with(rng, dim)).expect("random Hermitian matrix must diagonalize")
}

pub fn random_hermitian(dim: usize, seed: u64) -> Observable {
    random_hermitian_with(&mut seeded_rng(seed), dim)
}

/// Random orthonormal basis (columns), taken from the eigenvectors of a
/// random Hermitian matrix.
pub fn random_orthonormal_basis_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    random_hermitian_with(rng, dim).decomposition().eigenvectors.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        (a - b).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    #[test]
    fn identity_eigenvalues() {
        let dec = hermitian_eig(&identity(2)).unwrap();
        assert_eq!(dec.eigenvalues.as_slice(), &[1.0, 1.0]);
        assert!(unitarity_defect(&dec.eigenvectors) < 1e-12);
    }

    #[test]
    fn pauli_z_is_already_diagonal() {
        let dec = hermitian_eig(&pauli_z()).unwrap();
        assert_eq!(dec.eigenvalues.as_slice(), &[-1.0, 1.0]);
        // columns are standard basis vectors up to phase
        assert!((dec.eigenvectors[(1, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((dec.eigenvectors[(0, 1)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let a = random_hermitian(8, 11);
        let dec = a.decomposition();
        assert!(max_diff(&dec.reconstruct(), a.matrix()) < 1e-10);
        assert!(unitarity_defect(&dec.eigenvectors) < 1e-12);
        assert!(dec.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = pauli_x();
        m[(0, 1)] = C64::new(2.0, 0.0);
        assert!(matches!(hermitian_eig(&m), Err(LabError::NotHermitian { .. })));
    }

    #[test]
    fn degenerate_eigenvalues_grouped() {
        let a = Observable::diagonal(&[0.5, 0.5, -0.5]).unwrap();
        let spaces = a.spectrum();
        assert_eq!(spaces.len(), 2);
        assert_eq!(spaces[1].rank, 2);
        assert!((spaces[1].value - 0.5).abs() < 1e-15);
        let sum = &spaces[0].projector + &spaces[1].projector;
        assert!(max_diff(&sum, &identity(3)) < 1e-10);
    }

    #[test]
    fn fully_degenerate_spectrum_is_one_group() {
        let a = Observable::new(identity(3).scale(2.0)).unwrap();
        assert_eq!(a.spectrum().len(), 1);
        assert_eq!(a.spectrum()[0].rank, 3);
    }

    #[test]
    fn unitary_at_zero_is_identity() {
        let g = random_hermitian(4, 3);
        assert!(max_diff(&unitary_from_generator(&g, 0.0, 1.0), &identity(4)) < 1e-12);
    }

    #[test]
    fn half_spin_two_pi_rotation_is_minus_identity() {
        let g = Observable::new(pauli_z().scale(0.5)).unwrap();
        let u = unitary_from_generator(&g, 2.0 * PI, 1.0);
        assert!(max_diff(&u, &identity(2).scale(-1.0)) < 1e-12);
    }

    #[test]
    fn diagonal_generator_matches_elementwise_exponential() {
        let g = Observable::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let u = unitary_from_generator(&g, 0.7, 1.0);
        let expected = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![
            C64::from_polar(1.0, -0.7),
            C64::from_polar(1.0, -1.4),
            C64::from_polar(1.0, -2.1),
        ]));
        assert!(max_diff(&u, &expected) < 1e-12);
    }

    #[test]
    fn hbar_scales_the_exponent() {
        let g = Observable::diagonal(&[1.0, -1.0]).unwrap();
        let a = unitary_from_generator(&g, 0.3, 2.0);
        let b = unitary_from_generator(&g, 0.15, 1.0);
        assert!(max_diff(&a, &b) < 1e-14);
    }

    #[test]
    fn kronecker_identities() {
        let i6 = tensor_product(&identity(2), &identity(3)).unwrap();
        assert!(max_diff(&i6, &identity(6)) < 1e-15);
    }

    #[test]
    fn kronecker_is_system_major() {
        let k = tensor_product(&diagonal(&[2.0, 3.0]), &diagonal(&[5.0, 7.0])).unwrap();
        assert!(max_diff(&k, &diagonal(&[10.0, 14.0, 15.0, 21.0])) < 1e-15);
    }

    #[test]
    fn kronecker_matches_quadruple_loop() {
        let a = pauli_x();
        let b = pauli_z();
        let k = tensor_product(&a, &b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        assert_eq!(k[(i * 2 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn kronecker_cap() {
        let r = tensor_product_capped(&identity(4), &identity(4), 15);
        assert_eq!(r.unwrap_err(), LabError::DimensionOverflow { requested: 16, cap: 15 });
    }

    #[test]
    fn random_state_is_deterministic_and_normalized() {
        let a = random_state(4, 7);
        let b = random_state(4, 7);
        assert_eq!(a, b);
        assert!((a.amplitudes().norm() - 1.0).abs() < 1e-12);
        assert_ne!(a, random_state(4, 8));
    }

    #[test]
    fn random_hermitian_has_real_spectrum() {
        let a = random_hermitian(6, 5);
        // Eigenvalues of the raw complex matrix via characteristic check:
        // V† A V must be real diagonal.
        let v = &a.decomposition().eigenvectors;
        let d = v.adjoint() * a.matrix() * v;
        for k in 0..6 {
            assert!(d[(k, k)].im.abs() < 1e-12);
        }
    }

    #[test]
    fn state_rejects_unnormalized_amplitudes() {
        let v = ComplexVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(matches!(StateVector::new(v.clone()), Err(LabError::NotNormalized { .. })));
        let s = StateVector::normalized(v).unwrap();
        assert!((s.amplitudes().norm() - 1.0).abs() < 1e-15);
        assert!(StateVector::normalized(ComplexVector::zeros(2)).is_err());
    }
}
