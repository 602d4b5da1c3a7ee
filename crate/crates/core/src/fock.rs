//! Truncated single-mode bosonic operators.

use crate::error::{Error, Result};
use crate::operator::{
    expm_unitary, CMatrix, HermitianOperator, PhysicalConstants, UnitaryOperator, C64, I,
};

/// Ladder and number operators on the span of `|0>, …, |n_max>`.
#[derive(Clone, Debug)]
pub struct FockOperators {
    pub annihilation: CMatrix,
    pub creation: CMatrix,
    pub number: CMatrix,
}

impl FockOperators {
    pub fn dim(&self) -> usize {
        self.number.nrows()
    }
}

/// `a|n> = √n |n−1>`, `a† = (a)†`, `N = a†a`, truncated at `n_max`.
pub fn fock_operators(n_max: usize) -> Result<FockOperators> {
    if n_max < 1 {
        return Err(Error::InvalidArgument(format!(
            "Fock truncation must be at least 1, got {n_max}"
        )));
    }
    let dim = n_max + 1;
    let mut annihilation = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        annihilation[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let creation = annihilation.adjoint();
    let number = &creation * &annihilation;
    Ok(FockOperators { annihilation, creation, number })
}

/// Truncated displacement `exp(α a† − ᾱ a)`, exponentiated as a unitary so
/// that it stays exactly unitary inside the truncated space.
pub fn displacement(ops: &FockOperators, alpha: C64) -> UnitaryOperator {
    // α a† − ᾱ a = i·G with G = −i(α a† − ᾱ a) Hermitian; exp(iG) = exp(−iG·(−1)).
    let anti = ops.creation.map(|z| z * alpha) - ops.annihilation.map(|z| z * alpha.conj());
    let generator = HermitianOperator::from_hermitian_parts(anti.map(|z| z * -I));
    expm_unitary(&generator, -1.0, &PhysicalConstants::default())
}
