//! Dense complex linear algebra for small Hilbert spaces.
//!
//! States are column vectors, operators are square matrices, and time
//! evolution is exact: `U(t) = V diag(exp(-i lambda_k t / hbar)) V^dagger`
//! built from the spectral decomposition of a time-independent operator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tolerances::{self, Tolerances};

pub type C64 = Complex64;
pub type ComplexVector = DVector<C64>;
pub type ComplexMatrix = DMatrix<C64>;

/// Smallest and largest dimensions handled by the generators.
pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 16;

const EIGEN_MAX_SWEEPS: usize = 10_000;

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amps: ComplexVector,
}

impl QuantumState {
    /// Accepts `amps` if it has dimension at least two, finite entries and unit norm.
    pub fn new(amps: ComplexVector) -> Result<Self> {
        Self::new_with(amps, &Tolerances::default())
    }

    pub fn new_with(amps: ComplexVector, tol: &Tolerances) -> Result<Self> {
        check_vector(&amps)?;
        let norm = amps.norm();
        if (norm - 1.0).abs() > tol.normalization {
            return Err(Error::UnnormalizedState { norm });
        }
        Ok(Self { amps })
    }

    /// Normalizes `amps` first; fails only on zero or non-finite input.
    pub fn normalized(amps: ComplexVector) -> Result<Self> {
        check_vector(&amps)?;
        let norm = amps.norm();
        if norm == 0.0 {
            return Err(Error::UnnormalizedState { norm });
        }
        Ok(Self { amps: amps / C64::new(norm, 0.0) })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::new(ComplexVector::from_column_slice(amps))
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim < MIN_DIM || index >= dim {
            return Err(Error::DimensionOutOfRange { dim, min: MIN_DIM, max: MAX_DIM });
        }
        let mut amps = ComplexVector::zeros(dim);
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// Wraps a vector produced by a norm-preserving map without re-checking.
    pub(crate) fn from_unitary_image(amps: ComplexVector) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amps
    }

    pub fn into_amplitudes(self) -> ComplexVector {
        self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// Multiplies by a phase factor `e^{i alpha}`.
    pub fn rephased(&self, alpha: f64) -> QuantumState {
        Self { amps: &self.amps * C64::from_polar(1.0, alpha) }
    }

    pub fn check_same_dim(&self, other: &QuantumState) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

fn check_vector(amps: &ComplexVector) -> Result<()> {
    if amps.len() < MIN_DIM {
        return Err(Error::DimensionOutOfRange { dim: amps.len(), min: MIN_DIM, max: MAX_DIM });
    }
    if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure("non-finite amplitude".into()));
    }
    Ok(())
}

/// Angle `theta` in `[0, pi/2]` with `cos(theta) = |<a|b>|` for unit vectors.
///
/// Computed as `atan2(|| b - <a|b> a ||, |<a|b>|)`, which keeps full relative
/// precision for nearly parallel rays where `acos` loses half the digits.
/// The projection divides by `<a|a>` so identical inputs give exactly zero.
pub fn ray_angle(a: &ComplexVector, b: &ComplexVector) -> f64 {
    let overlap = a.dotc(b);
    let perp = b - a * (overlap / a.dotc(a).re);
    perp.norm().atan2(overlap.norm())
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest entry modulus of a vector.
pub fn max_abs_vec(v: &ComplexVector) -> f64 {
    v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max |U^dagger U - I|`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - ComplexMatrix::identity(n, n)))
}

/// A Hermitian operator (a Hamiltonian, in units of energy).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::new_with(matrix, &Tolerances::default())
    }

    pub fn new_with(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        if matrix.nrows() == 0 {
            return Err(Error::DimensionOutOfRange { dim: 0, min: 1, max: MAX_DIM });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NumericalFailure("non-finite operator entry".into()));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > tol.hermiticity {
            return Err(Error::NonHermitianInput { defect });
        }
        Ok(Self { matrix })
    }

    /// Builds from row-major real and imaginary parts.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rows.iter().map(Vec::len).find(|&l| l != n).unwrap_or(n),
            });
        }
        Self::new(ComplexMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::zeros(dim, dim) }
    }

    pub fn pauli_x() -> Self {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        Self { matrix: ComplexMatrix::from_row_slice(2, 2, &[o, l, l, o]) }
    }

    pub fn pauli_z() -> Self {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        Self { matrix: ComplexMatrix::from_row_slice(2, 2, &[l, o, o, -l]) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `a * H`.
    pub fn scaled(&self, a: f64) -> Self {
        Self { matrix: &self.matrix * C64::new(a, 0.0) }
    }

    /// `H + c I`.
    pub fn shifted(&self, c: f64) -> Self {
        let n = self.dim();
        Self { matrix: &self.matrix + ComplexMatrix::identity(n, n) * C64::new(c, 0.0) }
    }

    pub fn max_norm(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, psi: &QuantumState) -> f64 {
        psi.amplitudes().dotc(&(&self.matrix * psi.amplitudes())).re
    }

    /// `<H^2> - <H>^2`, computed from moments of the operator.
    pub fn variance_from_moments(&self, psi: &QuantumState) -> f64 {
        let h_psi = &self.matrix * psi.amplitudes();
        let mean = psi.amplitudes().dotc(&h_psi).re;
        let second = h_psi.norm_squared();
        second - mean * mean
    }
}

pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// `H = V diag(eigenvalues) V^dagger` with eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&l| C64::new(l, 0.0)),
        ));
        &self.eigenvectors * d * self.eigenvectors.adjoint()
    }

    /// Coefficients `V^dagger psi` in the eigenbasis.
    pub fn coefficients(&self, psi: &ComplexVector) -> ComplexVector {
        self.eigenvectors.adjoint() * psi
    }

    /// Energy variance from eigenbasis populations.
    pub fn population_variance(&self, psi: &ComplexVector) -> (f64, f64) {
        let coeffs = self.coefficients(psi);
        let pops: Vec<f64> = coeffs.iter().map(|z| z.norm_sqr()).collect();
        let total: f64 = pops.iter().sum();
        let mean = pops.iter().zip(&self.eigenvalues).map(|(p, l)| p * l).sum::<f64>() / total;
        let var = pops.iter().zip(&self.eigenvalues).map(|(p, l)| p * (l - mean) * (l - mean)).sum::<f64>() / total;
        (mean, var)
    }
}

/// Diagonalizes a Hermitian operator.
///
/// Eigenvalues are sorted ascending (stable with respect to the solver's
/// order on ties) and every eigenvector is rephased so that its first
/// entry of maximal modulus is real and positive, which makes the output
/// a deterministic function of the input bytes.
pub fn spectral_decompose(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    let defect = hermiticity_defect(h.matrix());
    if defect > tolerances::HERMITICITY {
        return Err(Error::NonHermitianInput { defect });
    }
    let n = h.dim();
    let eig = SymmetricEigen::try_new(h.matrix().clone(), f64::EPSILON, EIGEN_MAX_SWEEPS)
        .ok_or_else(|| Error::NumericalFailure("Hermitian eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let mut pivot = 0;
        for i in 1..n {
            if v[i].norm() > v[pivot].norm() * (1.0 + 1e-12) {
                pivot = i;
            }
        }
        let phase = if v[pivot].norm() > 0.0 { v[pivot].conj() / v[pivot].norm() } else { C64::new(1.0, 0.0) };
        eigenvectors.set_column(col, &(v * phase));
    }

    let decomposition = SpectralDecomposition { eigenvalues, eigenvectors };
    let scale = h.max_norm();
    let residual = max_abs(&(h.matrix() - decomposition.reconstruct()));
    if residual > tolerances::SPECTRAL_RECONSTRUCTION * scale {
        return Err(Error::NumericalFailure(format!(
            "spectral reconstruction residual {residual:e} exceeds tolerance"
        )));
    }
    let ortho = unitarity_defect(&decomposition.eigenvectors);
    if ortho > tolerances::SPECTRAL_ORTHONORMALITY {
        return Err(Error::NumericalFailure(format!("eigenvectors not orthonormal: defect {ortho:e}")));
    }
    Ok(decomposition)
}

/// Exact propagator of a time-independent Hamiltonian, with the
/// diagonalization done once.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    spectrum: SpectralDecomposition,
    hbar: f64,
}

impl Propagator {
    pub fn new(h: &HermitianOperator, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::ParamOutOfRange(format!("hbar must be positive and finite, got {hbar}")));
        }
        Ok(Self { spectrum: spectral_decompose(h)?, hbar })
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    /// `e^{-i lambda t/hbar} - 1` per eigenvalue, accurate for small arguments.
    fn phase_offsets(&self, t: f64) -> impl Iterator<Item = C64> + '_ {
        self.spectrum.eigenvalues.iter().map(move |&l| {
            let a = l * t / self.hbar;
            C64::new(-2.0 * (0.5 * a).sin().powi(2), -a.sin())
        })
    }

    /// `U(t)` as a matrix, built as `I + V (e^{-i Lambda t} - 1) V^dagger`.
    pub fn matrix_at(&self, t: f64) -> ComplexMatrix {
        let v = &self.spectrum.eigenvectors;
        let d = ComplexMatrix::from_diagonal(&DVector::from_iterator(self.spectrum.dim(), self.phase_offsets(t)));
        ComplexMatrix::identity(self.spectrum.dim(), self.spectrum.dim()) + v * d * v.adjoint()
    }

    /// `U(t) psi`. Leaves `psi` bit-for-bit unchanged wherever the phases are trivial.
    pub fn apply(&self, t: f64, psi: &QuantumState) -> QuantumState {
        let coeffs = self.spectrum.coefficients(psi.amplitudes());
        let delta = DVector::from_iterator(coeffs.len(), coeffs.iter().zip(self.phase_offsets(t)).map(|(c, p)| c * p));
        QuantumState::from_unitary_image(psi.amplitudes() + &self.spectrum.eigenvectors * delta)
    }
}

/// `exp(-i H t / hbar)`.
pub fn propagator(h: &HermitianOperator, t: f64, hbar: f64) -> Result<ComplexMatrix> {
    if !t.is_finite() {
        return Err(Error::ParamOutOfRange(format!("time must be finite, got {t}")));
    }
    Ok(Propagator::new(h, hbar)?.matrix_at(t))
}

fn check_generator_dim(dim: usize) -> Result<()> {
    if !(MIN_DIM..=MAX_DIM).contains(&dim) {
        return Err(Error::DimensionOutOfRange { dim, min: MIN_DIM, max: MAX_DIM });
    }
    Ok(())
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    // E|z|^2 = 1
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

/// Seeded random Hermitian matrix: standard complex Gaussian entries
/// (`E|a_ij|^2 = 1`) drawn row-major from ChaCha8, then `(A + A^dagger) / 2`.
pub fn random_hermitian(dim: usize, seed: u64) -> Result<HermitianOperator> {
    check_generator_dim(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            a[(i, j)] = complex_gaussian(&mut rng);
        }
    }
    let matrix = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    HermitianOperator::new(matrix)
}

/// Seeded random pure state: normalized standard complex Gaussian vector.
pub fn random_state(dim: usize, seed: u64) -> Result<QuantumState> {
    check_generator_dim(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let amps = DVector::from_iterator(dim, (0..dim).map(|_| complex_gaussian(&mut rng)));
    QuantumState::normalized(amps)
}
