//! First-order transition rates.
//!
//! Two evaluation routes are provided for the same quantity: the direct
//! energy-domain form `(2π/ħ)|V_nm|² δ_η(E_n − E_m)` and the time-domain
//! integral of the damped correlation `V_nm(t) V_mn(0)`. The open-system rate
//! averages the direct form over a discretized reservoir.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::operator::{check_same_dim, HermitianOperator, PhysicalConstants, SpectralDecomposition};
use crate::quadrature;
use crate::reservoir::{DeltaKind, DeltaRegularization, ForbiddenReason, RateReport, ReservoirModel};

/// Matrix elements at or below this fraction of the operator norm count as zero.
pub const FORBIDDEN_THRESHOLD: f64 = 1e-14;

fn check_pair(dim: usize, from: usize, to: usize) -> Result<()> {
    if from >= dim || to >= dim {
        return Err(Error::IndexOutOfRange(format!(
            "transition {from} -> {to} outside a {dim}-level system"
        )));
    }
    Ok(())
}

fn check_distinct(from: usize, to: usize) -> Result<()> {
    if from == to {
        return Err(Error::InvalidArgument(format!(
            "initial and final state coincide ({from})"
        )));
    }
    Ok(())
}

/// `|<to|op|from>|` in the eigenbasis of `basis`, and whether it counts as zero.
fn element_in_basis(
    basis: &SpectralDecomposition,
    op: &HermitianOperator,
    from: usize,
    to: usize,
) -> Result<(f64, bool)> {
    check_same_dim(basis.dim(), op.dim(), "operator vs. Hamiltonian")?;
    check_pair(basis.dim(), from, to)?;
    let element = basis.matrix_element(op.matrix(), to, from).norm();
    let zero = element <= FORBIDDEN_THRESHOLD * op.operator_norm();
    Ok((element, zero))
}

/// Golden-rule rate `(2π/ħ)|<n|V|m>|² δ_η(E_n − E_m)` from `from = m` to `to = n`.
pub fn golden_rule_rate(
    h0: &SpectralDecomposition,
    v: &HermitianOperator,
    from: usize,
    to: usize,
    reg: &DeltaRegularization,
    constants: &PhysicalConstants,
) -> Result<RateReport> {
    let (element, zero) = element_in_basis(h0, v, from, to)?;
    check_distinct(from, to)?;
    if zero {
        return Ok(RateReport::forbidden(from, to, ForbiddenReason::MatrixElementZero));
    }
    let gap = h0.eigenvalues()[to] - h0.eigenvalues()[from];
    let rate = 2.0 * PI / constants.hbar() * element * element * reg.eval(gap);
    Ok(RateReport::allowed(from, to, rate))
}

/// The same rate written as `(1/ħ²) ∫ V_nm(t) V_mn(0) D(t) dt`, with
/// `V_nm(t) = e^{i(E_n − E_m)t/ħ} <n|V|m>` and `D` the damping whose Fourier
/// transform is the regularized delta.
///
/// The integral is done by quadrature along the steepest-descent contour of
/// the damped phase, which keeps the integrand non-oscillatory.
pub fn autocorrelation_rate(
    h0: &SpectralDecomposition,
    v: &HermitianOperator,
    from: usize,
    to: usize,
    reg: &DeltaRegularization,
    constants: &PhysicalConstants,
) -> Result<RateReport> {
    let (element, zero) = element_in_basis(h0, v, from, to)?;
    check_distinct(from, to)?;
    if zero {
        return Ok(RateReport::forbidden(from, to, ForbiddenReason::MatrixElementZero));
    }
    let hbar = constants.hbar();
    let omega = (h0.eigenvalues()[to] - h0.eigenvalues()[from]) / hbar;
    let integral = damped_phase_integral(omega, reg, hbar);
    Ok(RateReport::allowed(from, to, element * element * integral / (hbar * hbar)))
}

/// `∫ e^{iωt} D(t) dt` over the real line.
fn damped_phase_integral(omega: f64, reg: &DeltaRegularization, hbar: f64) -> f64 {
    match reg.kind() {
        DeltaKind::Gaussian => {
            // D(t) = exp(−a t²); shift t → s + iω/2a, leaving exp(−ω²/4a)·exp(−a s²).
            let a = 0.5 * (reg.width() / hbar).powi(2);
            let scale = a.sqrt().recip();
            let half_span = 12.0 * scale;
            let n = 192usize;
            let h = 2.0 * half_span / n as f64;
            let sum: f64 = (0..=n)
                .map(|k| {
                    let s = -half_span + h * k as f64;
                    let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                    w * (-a * s * s).exp()
                })
                .sum();
            (-omega * omega / (4.0 * a)).exp() * sum * h
        }
        DeltaKind::Lorentzian => {
            // D(t) = exp(−b|t|); 2 Re ∫₀^∞ exp(−(b − iω)t) dt with t = u/(b − iω).
            let b = reg.width() / hbar;
            let ray = quadrature::integrate(|u| (-u).exp(), 0.0, 64.0, 64, 8);
            2.0 * ray * b / (b * b + omega * omega)
        }
    }
}

/// Weak-coupling rate for `H = H_S + H_R + S ⊗ R`, from system level `from = l`
/// to `to = k`:
/// `(2π/ħ)|<k|S|l>|² Σ_{i,j} σ_i |R_{ji}|² δ_η(ε_l + E_i − ε_k − E_j)`.
pub fn weak_coupling_rate(
    system: &SpectralDecomposition,
    s_op: &HermitianOperator,
    reservoir: &ReservoirModel,
    from: usize,
    to: usize,
    reg: &DeltaRegularization,
    constants: &PhysicalConstants,
) -> Result<RateReport> {
    let (element, zero) = element_in_basis(system, s_op, from, to)?;
    if zero {
        return Ok(RateReport::forbidden(from, to, ForbiddenReason::MatrixElementZero));
    }
    let released = system.eigenvalues()[from] - system.eigenvalues()[to];
    let bath = reservoir.absorption_density(released, reg);
    let rate = 2.0 * PI / constants.hbar() * element * element * bath;
    Ok(RateReport::allowed(from, to, rate))
}

/// Emission rate into a bosonic field whose density of states grows as
/// `ω^r`: `(2π/ħ)·coupling²·(Δ/ħ)^r` for each level gap `Δ`.
pub fn minimal_decoherence_scan(
    splittings: &[f64],
    coupling: f64,
    exponent: f64,
    constants: &PhysicalConstants,
) -> Result<Vec<(f64, f64)>> {
    if !(exponent.is_finite() && exponent >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "density exponent must be nonnegative, got {exponent}"
        )));
    }
    let hbar = constants.hbar();
    splittings
        .iter()
        .map(|&gap| {
            if !(gap.is_finite() && gap >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "level splitting must be nonnegative, got {gap}"
                )));
            }
            let density = (gap / hbar).powf(exponent);
            Ok((gap, 2.0 * PI / hbar * coupling * coupling * density))
        })
        .collect()
}
