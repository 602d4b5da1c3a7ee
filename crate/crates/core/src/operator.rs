//! Dense complex operators: Hermitian observables, their spectral
//! decompositions, and the unitary propagators they generate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative tolerance on `‖A − A†‖_max / ‖A‖_max` for Hermitian input.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Allowed deviation of `U†U` from the identity.
pub const UNITARITY_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Physical constants shared by every rate and propagator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    hbar: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { hbar })
    }

    #[inline]
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { hbar: 1.0 }
    }
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest absolute entry of `m − m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Frobenius norm of a complex matrix.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest deviation of a column of `m†m` from the matching identity column,
/// measured in the Euclidean norm.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let gram = m.adjoint() * m;
    let n = gram.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let mut col = 0.0;
        for i in 0..n {
            let target = if i == j { ONE } else { ZERO };
            col += (gram[(i, j)] - target).norm_sqr();
        }
        worst = worst.max(col.sqrt());
    }
    worst
}

/// Kronecker product with the index of `a` running slowest.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// A dense Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    entries: CMatrix,
}

impl HermitianOperator {
    /// Wraps `entries`, rejecting non-square, empty or non-Hermitian input.
    pub fn new(entries: CMatrix) -> Result<Self> {
        check_square(&entries)?;
        let scale = max_abs(&entries);
        let defect = hermiticity_defect(&entries);
        if defect > HERMITICITY_TOL * scale || !defect.is_finite() {
            return Err(Error::InvalidOperator(format!(
                "matrix is not Hermitian: |A - A^dagger| = {defect:.3e}, max entry {scale:.3e}"
            )));
        }
        Ok(Self { entries: symmetrize(&entries) })
    }

    /// Replaces `entries` by `(A + A†)/2` and reports the size of the
    /// correction (largest entry of `(A − A†)/2`).
    pub fn symmetrized(entries: CMatrix) -> Result<(Self, f64)> {
        check_square(&entries)?;
        let correction = hermiticity_defect(&entries) / 2.0;
        if !correction.is_finite() {
            return Err(Error::InvalidOperator("matrix contains non-finite entries".into()));
        }
        Ok((Self { entries: symmetrize(&entries) }, correction))
    }

    pub fn from_real(entries: &DMatrix<f64>) -> Result<Self> {
        Self::new(entries.map(|x| C64::new(x, 0.0)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidOperator("empty diagonal".into()));
        }
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Ok(Self { entries: CMatrix::from_diagonal(&d) })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "operator dimension must be positive");
        Self { entries: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "operator dimension must be positive");
        Self { entries: CMatrix::identity(dim, dim) }
    }

    /// Draws a matrix with independent unit-variance Gaussian entries above
    /// the diagonal (real and imaginary parts each of variance 1/2) and real
    /// unit-variance diagonal entries.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        assert!(dim >= 1, "operator dimension must be positive");
        let mut m = CMatrix::zeros(dim, dim);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..dim {
            let d: f64 = rng.sample(StandardNormal);
            m[(i, i)] = C64::new(d, 0.0);
            for j in (i + 1)..dim {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                m[(i, j)] = C64::new(s * re, s * im);
                m[(j, i)] = m[(i, j)].conj();
            }
        }
        Self { entries: m }
    }

    /// Internal constructor for results that are Hermitian by construction;
    /// rounding asymmetry is removed.
    pub(crate) fn from_hermitian_parts(entries: CMatrix) -> Self {
        debug_assert!(entries.is_square());
        Self { entries: symmetrize(&entries) }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { entries: self.entries.map(|z| z * factor) }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_same_dim(self.dim(), other.dim(), "operator sum")?;
        Ok(Self { entries: &self.entries + &other.entries })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        check_same_dim(self.dim(), other.dim(), "operator difference")?;
        Ok(Self { entries: &self.entries - &other.entries })
    }

    /// Square of the operator, still Hermitian.
    pub fn squared(&self) -> Self {
        Self::from_hermitian_parts(&self.entries * &self.entries)
    }

    /// Largest absolute eigenvalue.
    pub fn operator_norm(&self) -> f64 {
        spectral_decompose(self)
            .eigenvalues()
            .iter()
            .fold(0.0, |acc: f64, e| acc.max(e.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.entries)
    }
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::InvalidOperator("operator must have dimension at least 1".into()));
    }
    if !m.is_square() {
        return Err(Error::InvalidOperator(format!(
            "operator must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub(crate) fn check_same_dim(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Eigenvalues in ascending order with orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    /// Builds a decomposition from an already-known basis, e.g. a diagonal
    /// Hamiltonian given by its energies.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: CMatrix) -> Result<Self> {
        let n = eigenvalues.len();
        if n == 0 || eigenvectors.nrows() != n || eigenvectors.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} eigenvalues for a {}x{} eigenvector matrix",
                eigenvectors.nrows(),
                eigenvectors.ncols()
            )));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("eigenvalues must be ascending".into()));
        }
        let defect = unitarity_defect(&eigenvectors);
        if defect > UNITARITY_TOL {
            return Err(Error::InvalidOperator(format!(
                "eigenvectors are not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(Self { eigenvalues, eigenvectors })
    }

    /// Decomposition of a diagonal operator in the standard basis.
    pub fn from_energies(energies: &[f64]) -> Result<Self> {
        let n = energies.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let mut vecs = CMatrix::zeros(n, n);
        for (col, &row) in order.iter().enumerate() {
            vecs[(row, col)] = ONE;
        }
        Self::from_parts(order.iter().map(|&i| energies[i]).collect(), vecs)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    #[inline]
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    #[inline]
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &e) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(e);
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// `V† A V`: the operator written in this eigenbasis.
    pub fn to_eigenbasis(&self, op: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * op * &self.eigenvectors
    }

    /// `<n|A|m>` for eigenvectors `n`, `m`.
    pub fn matrix_element(&self, op: &CMatrix, n: usize, m: usize) -> C64 {
        let ket = op * self.eigenvectors.column(m);
        self.eigenvectors.column(n).dotc(&ket)
    }

    /// Largest deviation of the eigenvector Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        unitarity_defect(&self.eigenvectors)
    }
}

/// Diagonalizes a Hermitian operator.
///
/// Eigenvalues come back ascending. Inside a degenerate cluster any
/// orthonormal basis of the eigenspace may be returned.
pub fn spectral_decompose(op: &HermitianOperator) -> SpectralDecomposition {
    let n = op.dim();
    if n == 1 {
        return SpectralDecomposition {
            eigenvalues: vec![op.entries[(0, 0)].re],
            eigenvectors: CMatrix::identity(1, 1),
        };
    }
    let eig = SymmetricEigen::new(op.entries.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        eigenvectors.set_column(col, &eig.eigenvectors.column(src));
    }
    SpectralDecomposition { eigenvalues, eigenvectors }
}

/// A unitary matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOperator {
    entries: CMatrix,
}

impl UnitaryOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        check_square(&entries)?;
        let defect = unitarity_defect(&entries);
        if defect > UNITARITY_TOL || !defect.is_finite() {
            return Err(Error::InvalidOperator(format!(
                "matrix is not unitary (defect {defect:.3e})"
            )));
        }
        Ok(Self { entries })
    }

    pub(crate) fn from_unitary_parts(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: CMatrix::identity(dim, dim) }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    /// `self · earlier`: apply `earlier` first.
    pub fn after(&self, earlier: &UnitaryOperator) -> UnitaryOperator {
        Self { entries: &self.entries * &earlier.entries }
    }

    pub fn adjoint(&self) -> UnitaryOperator {
        Self { entries: self.entries.adjoint() }
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.entries * v
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.entries)
    }
}

/// `exp(−i H t / ħ)` from an existing decomposition of `H`.
pub fn expm_from_decomposition(
    decomp: &SpectralDecomposition,
    t: f64,
    constants: &PhysicalConstants,
) -> UnitaryOperator {
    let mut phased = decomp.eigenvectors.clone();
    for (j, &e) in decomp.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, -e * t / constants.hbar());
        phased.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    UnitaryOperator { entries: phased * decomp.eigenvectors.adjoint() }
}

/// `exp(−i H t / ħ)`, exponentiating the eigenvalues of `H`.
pub fn expm_unitary(h: &HermitianOperator, t: f64, constants: &PhysicalConstants) -> UnitaryOperator {
    expm_from_decomposition(&spectral_decompose(h), t, constants)
}

/// Kronecker product of two Hermitian operators; `a`'s index is slowest.
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator { entries: kron(&a.entries, &b.entries) }
}
