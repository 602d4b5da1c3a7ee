//! Periodically driven systems.
//!
//! A drive is a cyclic list of constant Hamiltonian segments. The one-period
//! propagator `U(τ)` is diagonalized into quasi-energies `ε_k` and Floquet
//! states `|k>`, and the evolution is written as
//! `U(t,0)|k> = e^{−iε_k t/ħ} |φ_k(t)>` with `φ_k` periodic. Correlations of a
//! coupling operator between Floquet states then split into a phase times a
//! periodic factor, whose Fourier coefficients are the weights of a comb of
//! spectral lines spaced by `2π/τ`.

use std::f64::consts::PI;

use nalgebra::Schur;

use crate::error::{Error, Result};
use crate::operator::{
    check_same_dim, expm_from_decomposition, spectral_decompose, unitarity_defect, CMatrix,
    CVector, HermitianOperator, PhysicalConstants, SpectralDecomposition, UnitaryOperator, C64,
};
use crate::reservoir::{DeltaRegularization, ForbiddenReason, RateReport, ReservoirModel};

/// Phases of distinct Floquet eigenvalues closer than this are flagged as degenerate.
pub const DEGENERACY_PHASE_TOL: f64 = 1e-12;
/// Residual allowed in `U(τ)|k> = e^{−iε_kτ/ħ}|k>`.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;
/// Negative comb weights above this magnitude indicate a numerical fault.
pub const WEIGHT_CLIP: f64 = 1e-12;

#[derive(Clone, Debug)]
struct Segment {
    hamiltonian: HermitianOperator,
    duration: f64,
    spectrum: SpectralDecomposition,
}

/// Piecewise-constant Hamiltonian repeated with period `τ`.
#[derive(Clone, Debug)]
pub struct PeriodicDrive {
    segments: Vec<Segment>,
    period: f64,
}

impl PeriodicDrive {
    pub fn new(segments: Vec<(HermitianOperator, f64)>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidArgument("drive has no segments".into()))?;
        let dim = first.0.dim();
        let mut period = 0.0;
        let mut out = Vec::with_capacity(segments.len());
        for (i, (hamiltonian, duration)) in segments.into_iter().enumerate() {
            if !(duration.is_finite() && duration > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "segment {i} has non-positive duration {duration}"
                )));
            }
            check_same_dim(dim, hamiltonian.dim(), &format!("segment {i} Hamiltonian"))?;
            period += duration;
            let spectrum = spectral_decompose(&hamiltonian);
            out.push(Segment { hamiltonian, duration, spectrum });
        }
        Ok(Self { segments: out, period })
    }

    /// A time-independent Hamiltonian viewed as a drive of period `period`.
    pub fn constant(hamiltonian: HermitianOperator, period: f64) -> Result<Self> {
        Self::new(vec![(hamiltonian, period)])
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.period
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.segments[0].hamiltonian.dim()
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn segments(&self) -> impl Iterator<Item = (&HermitianOperator, f64)> {
        self.segments.iter().map(|s| (&s.hamiltonian, s.duration))
    }

    /// Period index, segment index and time already spent in that segment.
    fn locate(&self, t: f64) -> (usize, f64) {
        let cycles = (t / self.period).floor();
        let mut offset = t - cycles * self.period;
        if !(offset >= 0.0) {
            offset = 0.0;
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if offset < seg.duration {
                return (i, offset);
            }
            offset -= seg.duration;
        }
        // rounding put us at the very end of the period
        (0, 0.0)
    }
}

/// Time-ordered propagator `U(to, from)` of the drive, `from ≤ to`.
pub fn propagator(
    drive: &PeriodicDrive,
    from: f64,
    to: f64,
    constants: &PhysicalConstants,
) -> Result<UnitaryOperator> {
    if !(from.is_finite() && to.is_finite()) {
        return Err(Error::InvalidArgument("propagator times must be finite".into()));
    }
    if to < from {
        return Err(Error::InvalidArgument(format!(
            "propagator needs from <= to, got {from} > {to}"
        )));
    }
    let mut u = CMatrix::identity(drive.dim(), drive.dim());
    let mut remaining = to - from;
    let (mut idx, mut into) = drive.locate(from);
    while remaining > 0.0 {
        let seg = &drive.segments[idx];
        let available = seg.duration - into;
        let step = available.min(remaining);
        if step > 0.0 {
            let piece = expm_from_decomposition(&seg.spectrum, step, constants);
            u = piece.matrix() * u;
        }
        remaining -= step;
        if remaining <= 1e-15 * drive.period {
            break;
        }
        idx = (idx + 1) % drive.segments.len();
        into = 0.0;
    }
    Ok(UnitaryOperator::from_unitary_parts(u))
}

/// Spectral data of the one-period propagator and the periodic Floquet states
/// sampled on a uniform grid over one period.
#[derive(Clone, Debug)]
pub struct FloquetDecomposition {
    quasi_energies: Vec<f64>,
    floquet_states: CMatrix,
    sample_times: Vec<f64>,
    periodic_states: Vec<CMatrix>,
    period: f64,
    degenerate: bool,
    max_residual: f64,
}

impl FloquetDecomposition {
    /// Quasi-energies, ascending, inside `(−πħ/τ, πħ/τ]`.
    pub fn quasi_energies(&self) -> &[f64] {
        &self.quasi_energies
    }

    /// Columns are the eigenvectors `|k>` of `U(τ)`.
    pub fn floquet_states(&self) -> &CMatrix {
        &self.floquet_states
    }

    pub fn sample_times(&self) -> &[f64] {
        &self.sample_times
    }

    /// `φ_k(t_m)` as column `k` of the returned matrix.
    pub fn periodic_states_at(&self, m: usize) -> &CMatrix {
        &self.periodic_states[m]
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dim(&self) -> usize {
        self.quasi_energies.len()
    }

    pub fn grid_points(&self) -> usize {
        self.sample_times.len()
    }

    /// True when two Floquet phases coincide; the basis inside such a
    /// cluster is then an arbitrary orthonormal choice.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Largest `‖U(τ)|k> − e^{−iε_kτ/ħ}|k>‖` over the Floquet states.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.dim() {
            return Err(Error::IndexOutOfRange(format!(
                "Floquet index {k} outside 0..{}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// `<φ_k(t_m)|S|φ_l(t_m)>` on the grid.
    fn sandwich(&self, s: &CMatrix, k: usize, l: usize) -> Vec<C64> {
        self.periodic_states
            .iter()
            .map(|phi| {
                let right = s * phi.column(l);
                phi.column(k).dotc(&right)
            })
            .collect()
    }
}

/// Diagonalizes `U(τ)` and samples `φ_k(t) = e^{iε_k t/ħ} U(t,0)|k>` at
/// `grid_points` uniform times in `[0, τ)`.
pub fn floquet_decompose(
    drive: &PeriodicDrive,
    grid_points: usize,
    constants: &PhysicalConstants,
) -> Result<FloquetDecomposition> {
    let min_points = 2 * drive.n_segments();
    if grid_points < min_points {
        return Err(Error::InvalidArgument(format!(
            "grid_points must be at least {min_points} (two per segment), got {grid_points}"
        )));
    }
    let hbar = constants.hbar();
    let tau = drive.period();
    let dim = drive.dim();
    let one_period = propagator(drive, 0.0, tau, constants)?;

    let (q, t) = Schur::try_new(one_period.matrix().clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge on U(tau)".into()))?
        .unpack();

    let mut phases: Vec<(f64, usize)> = (0..dim)
        .map(|k| {
            let lambda = t[(k, k)];
            // λ = e^{−iετ/ħ}; keep ε in (−πħ/τ, πħ/τ]
            let mut eps = -lambda.arg() * hbar / tau;
            if eps <= -PI * hbar / tau {
                eps += 2.0 * PI * hbar / tau;
            }
            (eps, k)
        })
        .collect();
    phases.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut states = CMatrix::zeros(dim, dim);
    for (col, &(_, src)) in phases.iter().enumerate() {
        let v = q.column(src);
        let norm = v.norm();
        states.set_column(col, &(v / C64::new(norm, 0.0)));
    }
    let quasi_energies: Vec<f64> = phases.iter().map(|p| p.0).collect();

    let mut degenerate = false;
    for a in 0..dim {
        for b in (a + 1)..dim {
            let d = (quasi_energies[b] - quasi_energies[a]) * tau / hbar;
            let circ = d.rem_euclid(2.0 * PI);
            if circ.min(2.0 * PI - circ) < DEGENERACY_PHASE_TOL {
                degenerate = true;
            }
        }
    }

    let mut max_residual: f64 = 0.0;
    for (k, &eps) in quasi_energies.iter().enumerate() {
        let v = states.column(k);
        let lambda = C64::from_polar(1.0, -eps * tau / hbar);
        let r = one_period.matrix() * v - v * lambda;
        max_residual = max_residual.max(r.norm());
    }
    if max_residual > EIGEN_RESIDUAL_TOL || unitarity_defect(&states) > 1e-10 {
        return Err(Error::Numerical(format!(
            "Floquet eigenvectors inaccurate (residual {max_residual:.3e})"
        )));
    }

    let step = tau / grid_points as f64;
    let sample_times: Vec<f64> = (0..grid_points).map(|m| step * m as f64).collect();
    let mut periodic_states = Vec::with_capacity(grid_points);
    let mut u = CMatrix::identity(dim, dim);
    for (m, &tm) in sample_times.iter().enumerate() {
        if m > 0 {
            let piece = propagator(drive, sample_times[m - 1], tm, constants)?;
            u = piece.matrix() * u;
        }
        let mut phi = &u * &states;
        for (k, &eps) in quasi_energies.iter().enumerate() {
            let phase = C64::from_polar(1.0, eps * tm / hbar);
            phi.column_mut(k).iter_mut().for_each(|z| *z *= phase);
        }
        periodic_states.push(phi);
    }

    Ok(FloquetDecomposition {
        quasi_energies,
        floquet_states: states,
        sample_times,
        periodic_states,
        period: tau,
        degenerate,
        max_residual,
    })
}

/// `F_kl(t)` sampled on the Floquet grid.
#[derive(Clone, Debug)]
pub struct AutocorrelationTrace {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
}

impl AutocorrelationTrace {
    /// `F_kl(0)`, real and nonnegative up to rounding.
    pub fn at_zero(&self) -> f64 {
        self.values[0].re
    }
}

/// Period-averaged factor `(1/τ)∫₀^τ A(t+s) conj(A(s)) ds` on the grid, with
/// `A(t) = <φ_k(t)|S|φ_l(t)>`; the uniform-grid trapezoid rule on a periodic
/// integrand is the plain mean.
fn periodic_factor(decomp: &FloquetDecomposition, s_op: &HermitianOperator, k: usize, l: usize) -> Result<Vec<C64>> {
    check_same_dim(decomp.dim(), s_op.dim(), "coupling operator vs. drive")?;
    decomp.check_index(k)?;
    decomp.check_index(l)?;
    let a = decomp.sandwich(s_op.matrix(), k, l);
    let n = a.len();
    let inv = 1.0 / n as f64;
    Ok((0..n)
        .map(|m| {
            let mut acc = C64::new(0.0, 0.0);
            for p in 0..n {
                acc += a[(m + p) % n] * a[p].conj();
            }
            acc * inv
        })
        .collect())
}

/// `F_kl(t) = e^{−i(ε_l − ε_k)t/ħ} × (1/τ)∫₀^τ <φ_k(t+s)|S|φ_l(t+s)><φ_l(s)|S|φ_k(s)> ds`.
pub fn floquet_autocorrelation(
    decomp: &FloquetDecomposition,
    s_op: &HermitianOperator,
    k: usize,
    l: usize,
    constants: &PhysicalConstants,
) -> Result<AutocorrelationTrace> {
    let factor = periodic_factor(decomp, s_op, k, l)?;
    let omega = (decomp.quasi_energies[l] - decomp.quasi_energies[k]) / constants.hbar();
    let values = decomp
        .sample_times
        .iter()
        .zip(&factor)
        .map(|(&t, &p)| C64::from_polar(1.0, -omega * t) * p)
        .collect();
    Ok(AutocorrelationTrace { times: decomp.sample_times.clone(), values })
}

/// One spectral line of the comb.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CombLine {
    pub n: i64,
    pub frequency: f64,
    pub weight: f64,
}

/// Delta comb `G_kl(ω) = Σ_n ν_n δ(ω − ω_0 − 2πn/τ)`.
#[derive(Clone, Debug)]
pub struct PowerSpectrum {
    pub from_state: usize,
    pub to_state: usize,
    pub base_frequency: f64,
    pub period: f64,
    pub lines: Vec<CombLine>,
    /// `F_kl(0)`, the total weight of the untruncated comb.
    pub correlation_at_zero: f64,
    /// Squared operator norm of the coupling, the scale for "zero" weights.
    pub coupling_scale: f64,
}

impl PowerSpectrum {
    pub fn total_weight(&self) -> f64 {
        self.lines.iter().map(|l| l.weight).sum()
    }

    /// Index `n` of the heaviest line.
    pub fn dominant_index(&self) -> Option<i64> {
        self.lines
            .iter()
            .max_by(|a, b| a.weight.total_cmp(&b.weight))
            .filter(|l| l.weight > 0.0)
            .map(|l| l.n)
    }

    pub fn weight(&self, n: i64) -> Option<f64> {
        self.lines.iter().find(|l| l.n == n).map(|l| l.weight)
    }
}

/// Comb weights `ν_n` for `|n| ≤ n_max`.
///
/// The lines sit at `(ε_l − ε_k)/ħ + 2πn/τ`, which for a constant drive is the
/// energy handed from the system to the environment in the transition
/// `l → k`. With that orientation `F_kl(t) = Σ_n ν_n e^{−iω_n t}`, so `ν_n` is
/// the coefficient of `e^{−2πint/τ}` in the periodic factor; it equals
/// `|â_{−n}|²` for the Fourier coefficients `â` of `<φ_k|S|φ_l>` and is
/// therefore nonnegative.
pub fn power_spectrum(
    decomp: &FloquetDecomposition,
    s_op: &HermitianOperator,
    k: usize,
    l: usize,
    n_max: usize,
    constants: &PhysicalConstants,
) -> Result<PowerSpectrum> {
    let n_grid = decomp.grid_points();
    if n_grid < 8 * (n_max + 1) {
        return Err(Error::InvalidArgument(format!(
            "comb half-width {n_max} needs at least {} grid points, decomposition has {n_grid}",
            8 * (n_max + 1)
        )));
    }
    let factor = periodic_factor(decomp, s_op, k, l)?;
    let tau = decomp.period;
    let base = (decomp.quasi_energies[l] - decomp.quasi_energies[k]) / constants.hbar();
    let scale = factor[0].re.abs().max(f64::MIN_POSITIVE);
    let mut lines = Vec::with_capacity(2 * n_max + 1);
    for n in -(n_max as i64)..=(n_max as i64) {
        let mut acc = C64::new(0.0, 0.0);
        for (m, p) in factor.iter().enumerate() {
            let angle = 2.0 * PI * (n as f64) * (m as f64) / n_grid as f64;
            acc += p * C64::from_polar(1.0, angle);
        }
        let mut weight = acc.re / n_grid as f64;
        if weight < 0.0 {
            if weight < -WEIGHT_CLIP * scale.max(1.0) {
                return Err(Error::Numerical(format!(
                    "comb weight nu_{n} = {weight:.3e} is negative"
                )));
            }
            weight = 0.0;
        }
        lines.push(CombLine { n, frequency: base + 2.0 * PI * n as f64 / tau, weight });
    }
    let norm = s_op.operator_norm();
    Ok(PowerSpectrum {
        from_state: l,
        to_state: k,
        base_frequency: base,
        period: tau,
        lines,
        correlation_at_zero: factor[0].re,
        coupling_scale: norm * norm,
    })
}

/// Long-time transition rate under the drive:
/// `(2π/ħ) Σ_n ν_n Σ_{i,j} σ_i |R_{ji}|² δ_η(E_i − E_j + ħω_n)`.
///
/// A single line at the static transition frequency reproduces the
/// weak-coupling rate.
pub fn bangbang_rate(
    spectrum: &PowerSpectrum,
    reservoir: &ReservoirModel,
    reg: &DeltaRegularization,
    constants: &PhysicalConstants,
) -> RateReport {
    let (from, to) = (spectrum.from_state, spectrum.to_state);
    let zero_level = (crate::golden_rule::FORBIDDEN_THRESHOLD.powi(2)) * spectrum.coupling_scale;
    if spectrum.lines.iter().all(|l| l.weight <= zero_level) {
        return RateReport::forbidden(from, to, ForbiddenReason::MatrixElementZero);
    }
    let hbar = constants.hbar();
    let overlap: f64 = spectrum
        .lines
        .iter()
        .filter(|l| l.weight > 0.0)
        .map(|l| l.weight * reservoir.absorption_density(hbar * l.frequency, reg))
        .sum();
    RateReport::allowed(from, to, 2.0 * PI / hbar * overlap)
}

/// Evolves `ψ` from `from` to `to` under the drive.
pub fn evolve_state(
    drive: &PeriodicDrive,
    psi: &CVector,
    from: f64,
    to: f64,
    constants: &PhysicalConstants,
) -> Result<CVector> {
    Ok(propagator(drive, from, to, constants)?.apply(psi))
}
