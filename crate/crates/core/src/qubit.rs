//! Pauli operators on registers of qubits.
//!
//! Basis convention: `|0>` is the `+1` eigenvector of `σ_z`, and in a register
//! the first qubit is the most significant (slowest) tensor factor.

use crate::error::{Error, Result};
use crate::operator::{kron, CMatrix, HermitianOperator, C64, I, ONE, ZERO};

/// Cartesian axis of a Pauli matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Maps `1, 2, 3` to `X, Y, Z`.
    pub fn from_index(k: usize) -> Result<Self> {
        match k {
            1 => Ok(Axis::X),
            2 => Ok(Axis::Y),
            3 => Ok(Axis::Z),
            _ => Err(Error::IndexOutOfRange(format!("Pauli axis must be 1, 2 or 3, got {k}"))),
        }
    }
}

pub(crate) fn pauli_matrix(axis: Axis) -> CMatrix {
    match axis {
        Axis::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Axis::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Axis::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

pub fn pauli(axis: Axis) -> HermitianOperator {
    HermitianOperator::new(pauli_matrix(axis)).expect("Pauli matrices are Hermitian")
}

/// `I ⊗ … ⊗ σ_axis ⊗ … ⊗ I` with the Pauli factor on `site` (1-based).
pub fn pauli_on_site(axis: Axis, site: usize, n_sites: usize) -> Result<HermitianOperator> {
    if n_sites == 0 || site == 0 || site > n_sites {
        return Err(Error::IndexOutOfRange(format!(
            "site {site} outside 1..={n_sites}"
        )));
    }
    if n_sites > 12 {
        return Err(Error::InvalidArgument(format!(
            "{n_sites} qubits exceeds the dense-matrix limit of 12"
        )));
    }
    let id2 = CMatrix::identity(2, 2);
    let mut acc = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for j in 1..=n_sites {
        let factor = if j == site { pauli_matrix(axis) } else { id2.clone() };
        acc = kron(&acc, &factor);
    }
    HermitianOperator::new(acc)
}

/// Computational basis state `|b_1 b_2 … b_n>`.
pub fn basis_state(bits: &[u8]) -> crate::operator::CVector {
    let n = bits.len();
    let mut idx = 0usize;
    for &b in bits {
        idx = (idx << 1) | usize::from(b != 0);
    }
    let mut v = crate::operator::CVector::zeros(1 << n);
    v[idx] = ONE;
    v
}
