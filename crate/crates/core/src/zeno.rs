//! Zeno dynamics and strong-coupling transitions.
//!
//! Frequent projection confines the evolution to the blocks of a projection
//! family, with limit `W_j(t) = P_j exp(−i P_jHP_j t/ħ)`. The same freezing
//! appears without measurement when a strong coupling shifts the reservoir
//! ground energy so much that a transition no longer conserves energy.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::golden_rule::FORBIDDEN_THRESHOLD;
use crate::operator::{
    check_same_dim, expm_unitary, frobenius, hermiticity_defect, max_abs, spectral_decompose,
    CMatrix, HermitianOperator, PhysicalConstants, SpectralDecomposition, C64,
};
use crate::reservoir::{DeltaRegularization, ForbiddenReason, RateReport};

/// Tolerance on idempotence, orthogonality and completeness of projections.
pub const PROJECTION_TOL: f64 = 1e-10;
/// Relative ground-state gap below which the initial reservoir state is ambiguous.
pub const GROUND_GAP_TOL: f64 = 1e-10;
/// Delta arguments beyond this many widths contribute exactly zero.
pub const HARD_ZERO_WIDTHS: f64 = 5.0;

/// Complete set of mutually orthogonal projections.
#[derive(Clone, Debug)]
pub struct ProjectionFamily {
    projections: Vec<HermitianOperator>,
}

impl ProjectionFamily {
    pub fn new(projections: Vec<HermitianOperator>) -> Result<Self> {
        let first = projections
            .first()
            .ok_or_else(|| Error::InvalidOperator("projection family is empty".into()))?;
        let dim = first.dim();
        let mut total = CMatrix::zeros(dim, dim);
        for (j, p) in projections.iter().enumerate() {
            check_same_dim(dim, p.dim(), "projection family")?;
            let pm = p.matrix();
            let idem = max_abs(&(pm * pm - pm));
            if idem > PROJECTION_TOL {
                return Err(Error::InvalidOperator(format!("P_{j} is not idempotent ({idem:.2e})")));
            }
            for (k, q) in projections.iter().enumerate().skip(j + 1) {
                let overlap = max_abs(&(pm * q.matrix()));
                if overlap > PROJECTION_TOL {
                    return Err(Error::InvalidOperator(format!(
                        "P_{j} and P_{k} are not orthogonal ({overlap:.2e})"
                    )));
                }
            }
            total += pm;
        }
        let completeness = max_abs(&(total - CMatrix::identity(dim, dim)));
        if completeness > PROJECTION_TOL {
            return Err(Error::InvalidOperator(format!(
                "projections do not sum to the identity ({completeness:.2e})"
            )));
        }
        Ok(Self { projections })
    }

    /// Projections onto consecutive groups of orthonormal columns of `basis`.
    pub fn from_columns(basis: &CMatrix, ranks: &[usize]) -> Result<Self> {
        if ranks.iter().sum::<usize>() != basis.ncols() || basis.nrows() != basis.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "ranks {ranks:?} do not partition a {}x{} basis",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let mut start = 0;
        let mut projections = Vec::with_capacity(ranks.len());
        for &r in ranks {
            let cols = basis.columns(start, r);
            projections.push(HermitianOperator::from_hermitian_parts(&cols * cols.adjoint()));
            start += r;
        }
        Self::new(projections)
    }

    /// `|j><j|` for every computational basis state.
    pub fn computational(dim: usize) -> Result<Self> {
        Self::from_columns(&CMatrix::identity(dim, dim), &vec![1; dim])
    }

    pub fn dim(&self) -> usize {
        self.projections[0].dim()
    }

    pub fn len(&self) -> usize {
        self.projections.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn projections(&self) -> &[HermitianOperator] {
        &self.projections
    }

    fn get(&self, j: usize) -> Result<&HermitianOperator> {
        self.projections.get(j).ok_or_else(|| {
            Error::IndexOutOfRange(format!("projection {j} of a family of {}", self.len()))
        })
    }
}

/// Finite-`n` product against its limit.
#[derive(Clone, Debug)]
pub struct ZenoComparison {
    /// `[P_j U(t/n) P_j]^n`.
    pub product: CMatrix,
    /// `P_j exp(−i P_jHP_j t/ħ)`.
    pub limit: CMatrix,
    /// Frobenius distance between the two.
    pub error: f64,
}

/// `W_j(t)` from the limit formula.
pub fn zeno_limit(
    h: &HermitianOperator,
    family: &ProjectionFamily,
    j: usize,
    t: f64,
    constants: &PhysicalConstants,
) -> Result<CMatrix> {
    check_same_dim(h.dim(), family.dim(), "Hamiltonian vs. projections")?;
    let p = family.get(j)?.matrix();
    let php = HermitianOperator::from_hermitian_parts(p * h.matrix() * p);
    Ok(p * expm_unitary(&php, t, constants).matrix())
}

fn matrix_power(base: &CMatrix, mut n: u64) -> CMatrix {
    let mut result = CMatrix::identity(base.nrows(), base.ncols());
    let mut square = base.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &square;
        }
        n >>= 1;
        if n > 0 {
            square = &square * &square;
        }
    }
    result
}

/// `[P_j U(t/n) P_j]^n` next to its `n → ∞` limit.
pub fn zeno_projected_evolution(
    h: &HermitianOperator,
    family: &ProjectionFamily,
    j: usize,
    t: f64,
    n: u64,
    constants: &PhysicalConstants,
) -> Result<ZenoComparison> {
    if n == 0 {
        return Err(Error::InvalidArgument("step count must be at least 1".into()));
    }
    let limit = zeno_limit(h, family, j, t, constants)?;
    let p = family.get(j)?.matrix();
    let step = expm_unitary(h, t / n as f64, constants);
    let product = matrix_power(&(p * step.matrix() * p), n);
    let error = frobenius(&(&product - &limit));
    Ok(ZenoComparison { product, limit, error })
}

/// Density matrix after the asymptotic channel `ρ ↦ Σ_j W_j(t) ρ W_j(t)†`.
pub fn zeno_state_evolution(
    rho: &CMatrix,
    h: &HermitianOperator,
    family: &ProjectionFamily,
    t: f64,
    constants: &PhysicalConstants,
) -> Result<CMatrix> {
    validate_density(rho)?;
    check_same_dim(rho.nrows(), family.dim(), "density matrix vs. projections")?;
    let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
    for j in 0..family.len() {
        let w = zeno_limit(h, family, j, t, constants)?;
        out += &w * rho * w.adjoint();
    }
    Ok((&out + out.adjoint()) * C64::new(0.5, 0.0))
}

fn validate_density(rho: &CMatrix) -> Result<()> {
    if !rho.is_square() || rho.nrows() == 0 {
        return Err(Error::InvalidArgument("density matrix must be square and nonempty".into()));
    }
    let defect = hermiticity_defect(rho);
    if defect > PROJECTION_TOL {
        return Err(Error::InvalidArgument(format!("density matrix is not Hermitian ({defect:.2e})")));
    }
    let trace = rho.trace();
    if (trace.re - 1.0).abs() > PROJECTION_TOL || trace.im.abs() > PROJECTION_TOL {
        return Err(Error::InvalidArgument(format!("density matrix has trace {trace}")));
    }
    let min = spectral_decompose(&HermitianOperator::from_hermitian_parts(rho.clone())).eigenvalues()[0];
    if min < -PROJECTION_TOL {
        return Err(Error::InvalidArgument(format!(
            "density matrix has negative eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

/// System strongly coupled through a pointer observable `S = Σ s_j |j><j|`,
/// with the remaining system Hamiltonian `V` treated as a perturbation.
#[derive(Clone, Debug)]
pub struct StrongCouplingModel {
    pointer_energies: Vec<f64>,
    dressed_reservoirs: Vec<SpectralDecomposition>,
    perturbation: HermitianOperator,
}

impl StrongCouplingModel {
    /// Model with explicit dressed reservoir Hamiltonians `H_R^{(j)}`, one per
    /// pointer state.
    pub fn from_dressed(
        pointer_energies: Vec<f64>,
        dressed: &[HermitianOperator],
        perturbation: HermitianOperator,
    ) -> Result<Self> {
        let n = pointer_energies.len();
        if n == 0 || dressed.len() != n || perturbation.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} pointer energies, {} dressed reservoirs, perturbation of dimension {}",
                dressed.len(),
                perturbation.dim()
            )));
        }
        for h in dressed {
            check_same_dim(dressed[0].dim(), h.dim(), "dressed reservoirs")?;
        }
        let scale = perturbation.max_abs().max(1.0);
        for j in 0..n {
            if perturbation.get(j, j).norm() > 1e-12 * scale {
                return Err(Error::InvalidOperator(format!(
                    "perturbation has nonzero diagonal element <{j}|V|{j}> = {}",
                    perturbation.get(j, j)
                )));
            }
        }
        Ok(Self {
            pointer_energies,
            dressed_reservoirs: dressed.iter().map(spectral_decompose).collect(),
            perturbation,
        })
    }

    /// `H_R^{(j)} = H_R + s_j R`.
    pub fn from_coupling(
        pointer_energies: Vec<f64>,
        pointer_values: &[f64],
        h_r: &HermitianOperator,
        r: &HermitianOperator,
        perturbation: HermitianOperator,
    ) -> Result<Self> {
        check_same_dim(h_r.dim(), r.dim(), "H_R vs. R")?;
        if pointer_values.len() != pointer_energies.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} pointer values for {} pointer energies",
                pointer_values.len(),
                pointer_energies.len()
            )));
        }
        let dressed: Vec<_> = pointer_values
            .iter()
            .map(|&s| h_r.try_add(&r.scaled(s)))
            .collect::<Result<_>>()?;
        Self::from_dressed(pointer_energies, &dressed, perturbation)
    }

    pub fn n_labels(&self) -> usize {
        self.pointer_energies.len()
    }

    pub fn reservoir_dim(&self) -> usize {
        self.dressed_reservoirs[0].dim()
    }

    pub fn pointer_energies(&self) -> &[f64] {
        &self.pointer_energies
    }

    pub fn dressed_reservoir(&self, j: usize) -> &SpectralDecomposition {
        &self.dressed_reservoirs[j]
    }

    /// `E_g^{(j)}`.
    pub fn ground_energy(&self, j: usize) -> f64 {
        self.dressed_reservoirs[j].eigenvalues()[0]
    }

    pub fn perturbation(&self) -> &HermitianOperator {
        &self.perturbation
    }

    /// Full `H₀ + V` on system ⊗ reservoir, for brute-force checks.
    pub fn joint_hamiltonian(&self) -> HermitianOperator {
        let n = self.n_labels();
        let dr = self.reservoir_dim();
        let mut h = self.perturbation.matrix().kronecker(&CMatrix::identity(dr, dr));
        for j in 0..n {
            let mut proj = CMatrix::zeros(n, n);
            proj[(j, j)] = C64::new(1.0, 0.0);
            let local = self.dressed_reservoirs[j].reconstruct()
                + CMatrix::identity(dr, dr) * C64::new(self.pointer_energies[j], 0.0);
            h += proj.kronecker(&local);
        }
        HermitianOperator::from_hermitian_parts(h)
    }

    fn check_label(&self, j: usize) -> Result<()> {
        if j >= self.n_labels() {
            return Err(Error::IndexOutOfRange(format!(
                "label {j} outside a {}-label model",
                self.n_labels()
            )));
        }
        Ok(())
    }

    /// `E_g^{(k)} + ε_k − E_g^{(l)} − ε_l`; positive when the threshold holds.
    pub fn threshold_gap(&self, from: usize, to: usize) -> f64 {
        self.ground_energy(to) + self.pointer_energies[to]
            - self.ground_energy(from)
            - self.pointer_energies[from]
    }
}

/// Threshold condition `E_g^{(k)} + ε_k > E_g^{(l)} + ε_l` for `l → k`.
pub fn zeno_threshold_check(model: &StrongCouplingModel, from: usize, to: usize) -> Result<bool> {
    model.check_label(from)?;
    model.check_label(to)?;
    Ok(model.threshold_gap(from, to) > 0.0)
}

/// Rate of `l → k` with the reservoir starting in the ground state of
/// `H_R^{(l)}`:
/// `(2π/ħ)|<k|V|l>|² Σ_E |<E;k|R|E_g^{(l)}>|² δ_η(ε_k + E − ε_l − E_g^{(l)})`.
///
/// Since `V` acts on the system alone, passing the identity for `R` gives the
/// overlap factors of the lowest-order transition amplitude.
pub fn strong_coupling_rate(
    model: &StrongCouplingModel,
    r: &HermitianOperator,
    from: usize,
    to: usize,
    reg: &DeltaRegularization,
    constants: &PhysicalConstants,
) -> Result<RateReport> {
    model.check_label(from)?;
    model.check_label(to)?;
    if from == to {
        return Err(Error::InvalidArgument(format!("initial and final label coincide ({from})")));
    }
    check_same_dim(model.reservoir_dim(), r.dim(), "R vs. reservoir")?;
    let v = model.perturbation.get(to, from).norm();
    if v <= FORBIDDEN_THRESHOLD * model.perturbation.operator_norm() {
        return Ok(RateReport::forbidden(from, to, ForbiddenReason::MatrixElementZero));
    }
    let initial = model.dressed_reservoir(from);
    let e = initial.eigenvalues();
    if e.len() > 1 {
        let scale = e.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
        if e[1] - e[0] < GROUND_GAP_TOL * scale {
            return Err(Error::AmbiguousGroundState(format!(
                "dressed reservoir {from} has ground-state gap {:.3e}",
                e[1] - e[0]
            )));
        }
    }
    if zeno_threshold_check(model, from, to)? {
        return Ok(RateReport::forbidden(from, to, ForbiddenReason::EnergyConservation));
    }
    let final_basis = model.dressed_reservoir(to);
    let amplitudes = final_basis.eigenvectors().adjoint() * (r.matrix() * initial.eigenvector(0));
    let offset = model.pointer_energies[to] - model.pointer_energies[from] - e[0];
    let cut = HARD_ZERO_WIDTHS * reg.width();
    let mut any_within = false;
    let mut density = 0.0;
    for (energy, amp) in final_basis.eigenvalues().iter().zip(amplitudes.iter()) {
        let arg = offset + energy;
        if arg.abs() <= cut {
            any_within = true;
        }
        density += amp.norm_sqr() * reg.eval(arg);
    }
    if !any_within {
        return Ok(RateReport::forbidden(from, to, ForbiddenReason::EnergyConservation));
    }
    Ok(RateReport::allowed(from, to, 2.0 * PI / constants.hbar() * v * v * density))
}

/// Parameters of the laser-driven three-level atom coupled to quantized modes.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreeLevelModelParams {
    pub omega_13: f64,
    pub rabi: f64,
    pub mode_frequencies: Vec<f64>,
    pub couplings: Vec<C64>,
    pub pump_amplitudes: Vec<C64>,
    pub g13: f64,
    pub n_max: usize,
}

/// Largest Hilbert-space dimension the dense model is built in.
pub const MAX_MODEL_DIM: usize = 4096;

impl ThreeLevelModelParams {
    pub fn validate(&self) -> Result<()> {
        let modes = self.mode_frequencies.len();
        if modes == 0 {
            return Err(Error::InvalidArgument("three-level model needs at least one mode".into()));
        }
        if self.couplings.len() != modes || self.pump_amplitudes.len() != modes {
            return Err(Error::DimensionMismatch(format!(
                "{modes} mode frequencies, {} couplings, {} pump amplitudes",
                self.couplings.len(),
                self.pump_amplitudes.len()
            )));
        }
        if !(self.omega_13 > 0.0) || self.mode_frequencies.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidArgument("all frequencies must be positive".into()));
        }
        if self.n_max < 1 {
            return Err(Error::InvalidArgument("n_max must be at least 1".into()));
        }
        let field = (self.n_max + 1)
            .checked_pow(modes as u32)
            .filter(|d| d.saturating_mul(3) <= MAX_MODEL_DIM);
        if field.is_none() {
            return Err(Error::TruncationTooLarge(format!(
                "(n_max + 1)^modes * 3 exceeds {MAX_MODEL_DIM} for n_max = {} and {modes} modes",
                self.n_max
            )));
        }
        Ok(())
    }

    /// `g_13 Σ_k (f_k F_k + c.c.)`, the pump-induced splitting of `|±>`.
    pub fn pump_term(&self) -> f64 {
        self.g13
            * self
                .couplings
                .iter()
                .zip(&self.pump_amplitudes)
                .map(|(f, pump)| 2.0 * (f * pump).re)
                .sum::<f64>()
    }

    /// `−Σ_k g_13²|f_k|²/(ħω_k)`, the ground energy of a displaced mode set.
    pub fn analytic_dressed_ground_energy(&self, constants: &PhysicalConstants) -> f64 {
        -self
            .couplings
            .iter()
            .zip(&self.mode_frequencies)
            .map(|(f, w)| self.g13 * self.g13 * f.norm_sqr() / (constants.hbar() * w))
            .sum::<f64>()
    }

    pub fn with_pump_scale(&self, scale: f64) -> Self {
        let mut p = self.clone();
        p.pump_amplitudes = p.pump_amplitudes.iter().map(|z| z * scale).collect();
        p
    }

    pub fn with_n_max(&self, n_max: usize) -> Self {
        Self { n_max, ..self.clone() }
    }
}

/// Pointer-basis labels of the three-level model.
pub const LABEL_PLUS: usize = 0;
pub const LABEL_MINUS: usize = 1;
pub const LABEL_TWO: usize = 2;

/// The three-level model in both its direct form and its strong-coupling
/// decomposition over the pointer basis `|+>, |−>, |2>`.
#[derive(Clone, Debug)]
pub struct ThreeLevelModel {
    /// Direct Hamiltonian on atom (`|1>, |2>, |3>`) ⊗ field.
    pub hamiltonian: HermitianOperator,
    pub epsilon_plus: f64,
    pub epsilon_minus: f64,
    /// `H^{(em)} = Σ ħω_k b_k†b_k`.
    pub field: HermitianOperator,
    pub field_plus: HermitianOperator,
    pub field_minus: HermitianOperator,
    /// `V` on the pointer basis.
    pub perturbation: HermitianOperator,
    /// Strong-coupling view with labels `+, −, 2`.
    pub strong: StrongCouplingModel,
    /// Columns `|+>, |−>, |2>` in the `|1>, |2>, |3>` basis.
    pub atomic_basis: CMatrix,
    n_max: usize,
    modes: usize,
}

impl ThreeLevelModel {
    /// `H₀ + V` mapped back to the atom ⊗ field product basis.
    pub fn reassembled(&self) -> CMatrix {
        let df = self.field.dim();
        let mut h0 = CMatrix::zeros(3 * df, 3 * df);
        let sectors = [
            (LABEL_PLUS, &self.field_plus, self.epsilon_plus),
            (LABEL_MINUS, &self.field_minus, self.epsilon_minus),
            (LABEL_TWO, &self.field, 0.0),
        ];
        for (label, field, eps) in sectors {
            let mut p = CMatrix::zeros(3, 3);
            p[(label, label)] = C64::new(1.0, 0.0);
            h0 += p.kronecker(&(field.matrix() + CMatrix::identity(df, df) * C64::new(eps, 0.0)));
        }
        h0 += self.perturbation.matrix().kronecker(&CMatrix::identity(df, df));
        let u = self.atomic_basis.kronecker(&CMatrix::identity(df, df));
        &u * h0 * u.adjoint()
    }

    /// Largest deviation between the direct and the reassembled Hamiltonian
    /// over field states whose photon numbers all stay at least `margin`
    /// below the truncation.
    pub fn reassembly_residual(&self, margin: usize) -> f64 {
        let diff = self.reassembled() - self.hamiltonian.matrix();
        let df = self.field.dim();
        let keep: Vec<usize> = (0..3 * df)
            .filter(|&idx| {
                let mut rest = idx % df;
                (0..self.modes).all(|_| {
                    let n = rest % (self.n_max + 1);
                    rest /= self.n_max + 1;
                    n + margin <= self.n_max
                })
            })
            .collect();
        keep.iter()
            .flat_map(|&i| keep.iter().map(move |&j| (i, j)))
            .fold(0.0_f64, |acc, (i, j)| acc.max(diff[(i, j)].norm()))
    }
}

/// Single-mode operator placed on mode `k` of `modes`.
fn on_mode(op: &CMatrix, k: usize, modes: usize) -> CMatrix {
    let d = op.nrows();
    let mut acc = CMatrix::identity(1, 1);
    for m in 0..modes {
        acc = if m == k { acc.kronecker(op) } else { acc.kronecker(&CMatrix::identity(d, d)) };
    }
    acc
}

/// Builds the direct Hamiltonian and its pointer-basis decomposition. The
/// shifted operators `b_k = D a_k D†` use the truncated displacement by `F_k`,
/// so every derived Hamiltonian stays Hermitian in the truncated space.
pub fn build_three_level_model(
    params: &ThreeLevelModelParams,
    constants: &PhysicalConstants,
) -> Result<ThreeLevelModel> {
    params.validate()?;
    let hbar = constants.hbar();
    let modes = params.mode_frequencies.len();
    let ops = crate::fock::fock_operators(params.n_max)?;
    let df = (params.n_max + 1).pow(modes as u32);
    let one = CMatrix::identity(df, df);
    let c = |x: f64| C64::new(x, 0.0);

    let mut field_direct = CMatrix::zeros(df, df);
    let mut coupling_direct = CMatrix::zeros(df, df);
    let mut field = CMatrix::zeros(df, df);
    let mut shift_coupling = CMatrix::zeros(df, df);
    for k in 0..modes {
        let w = params.mode_frequencies[k];
        let f = params.couplings[k];
        let pump = params.pump_amplitudes[k];
        let a = on_mode(&ops.annihilation, k, modes);
        let shifted = &a - &one * pump;
        field_direct += shifted.adjoint() * &shifted * c(hbar * w);
        coupling_direct += &a * f + a.adjoint() * f.conj();

        let d = crate::fock::displacement(&ops, pump);
        let b_single = d.matrix() * &ops.annihilation * d.matrix().adjoint();
        let b = on_mode(&b_single, k, modes);
        field += b.adjoint() * &b * c(hbar * w);
        shift_coupling += &b * f + b.adjoint() * f.conj();
    }

    // Direct form on |1>, |2>, |3>.
    let mut atom_diag = CMatrix::zeros(3, 3);
    atom_diag[(2, 2)] = c(hbar * params.omega_13);
    let mut rabi = CMatrix::zeros(3, 3);
    rabi[(0, 1)] = c(0.5 * hbar * params.rabi);
    rabi[(1, 0)] = c(0.5 * hbar * params.rabi);
    let mut flip13 = CMatrix::zeros(3, 3);
    flip13[(0, 2)] = c(1.0);
    flip13[(2, 0)] = c(1.0);
    let direct = (atom_diag + rabi).kronecker(&one)
        + CMatrix::identity(3, 3).kronecker(&field_direct)
        + flip13.kronecker(&coupling_direct) * c(params.g13);

    let field = HermitianOperator::from_hermitian_parts(field);
    let g_shift = HermitianOperator::from_hermitian_parts(shift_coupling * c(params.g13));
    let field_plus = field.try_add(&g_shift)?;
    let field_minus = field.try_sub(&g_shift)?;
    let pump = params.pump_term();
    let half = 0.5 * hbar * params.omega_13;
    let epsilon_plus = half + pump;
    let epsilon_minus = half - pump;

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CMatrix::zeros(3, 3);
    v[(LABEL_PLUS, LABEL_MINUS)] = c(-half);
    v[(LABEL_MINUS, LABEL_PLUS)] = c(-half);
    let r = 0.5 * hbar * params.rabi * s;
    for l in [LABEL_PLUS, LABEL_MINUS] {
        v[(l, LABEL_TWO)] = c(r);
        v[(LABEL_TWO, l)] = c(r);
    }
    let perturbation = HermitianOperator::new(v)?;
    let atomic_basis = CMatrix::from_row_slice(
        3,
        3,
        &[c(s), c(s), c(0.0), c(0.0), c(0.0), c(1.0), c(s), c(-s), c(0.0)],
    );

    let strong = StrongCouplingModel::from_dressed(
        vec![epsilon_plus, epsilon_minus, 0.0],
        &[field_plus.clone(), field_minus.clone(), field.clone()],
        perturbation.clone(),
    )?;
    Ok(ThreeLevelModel {
        hamiltonian: HermitianOperator::from_hermitian_parts(direct),
        epsilon_plus,
        epsilon_minus,
        field,
        field_plus,
        field_minus,
        perturbation,
        strong,
        atomic_basis,
        n_max: params.n_max,
        modes,
    })
}

/// One point of the pump ladder.
#[derive(Clone, Debug)]
pub struct LadderRow {
    pub pump_scale: f64,
    pub pump_term: f64,
    pub epsilon_minus: f64,
    /// `E_g^{(2)} + ε_2 − E_g^{(−)} − ε_−`.
    pub threshold_gap: f64,
    pub threshold: bool,
    pub rate: RateReport,
}

/// Pump strengths, relative to the configured amplitudes, in the ladder.
pub const PUMP_LADDER: [f64; 5] = [0.0, 1.0, 2.0, 4.0, 8.0];
/// Extra Fock levels used by the truncation guard.
pub const TRUNCATION_PROBE: usize = 5;
/// Relative change tolerated under the truncation probe.
pub const TRUNCATION_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct ThreeLevelReport {
    pub epsilon_plus: f64,
    pub epsilon_minus: f64,
    pub ground_plus: f64,
    pub ground_minus: f64,
    pub ground_two: f64,
    pub analytic_ground: f64,
    /// `g_13 Σ(f_k F_k + c.c.) > 0` at the configured pump.
    pub sign_assumption: bool,
    /// Threshold verdict for `|−> → |2>` at the configured pump.
    pub threshold: bool,
    pub ladder: Vec<LadderRow>,
    pub monotone: bool,
    pub truncation_converged: bool,
    /// Largest relative change of a reported number under `n_max + 5`.
    pub truncation_change: f64,
}

fn ladder(
    params: &ThreeLevelModelParams,
    reg: &DeltaRegularization,
    constants: &PhysicalConstants,
) -> Result<(ThreeLevelModel, Vec<LadderRow>)> {
    let base = build_three_level_model(params, constants)?;
    let identity = HermitianOperator::identity(base.field.dim());
    let mut rows = Vec::with_capacity(PUMP_LADDER.len());
    for &scale in &PUMP_LADDER {
        let scaled = params.with_pump_scale(scale);
        let model = build_three_level_model(&scaled, constants)?;
        let rate = strong_coupling_rate(&model.strong, &identity, LABEL_MINUS, LABEL_TWO, reg, constants)?;
        rows.push(LadderRow {
            pump_scale: scale,
            pump_term: scaled.pump_term(),
            epsilon_minus: model.epsilon_minus,
            threshold_gap: model.strong.threshold_gap(LABEL_MINUS, LABEL_TWO),
            threshold: zeno_threshold_check(&model.strong, LABEL_MINUS, LABEL_TWO)?,
            rate,
        });
    }
    Ok((base, rows))
}

/// `|a − b|` relative to the larger magnitude, but never to less than `floor`.
fn relative_change(a: f64, b: f64, floor: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(floor)
    }
}

/// Dressed energies, threshold verdict and the `|−> → |2>` rate across the
/// pump ladder, with a truncation check at `n_max + 5`.
pub fn three_level_zeno_report(
    params: &ThreeLevelModelParams,
    reg: &DeltaRegularization,
    constants: &PhysicalConstants,
) -> Result<ThreeLevelReport> {
    let (model, rows) = ladder(params, reg, constants)?;
    let (probe_model, probe_rows) = ladder(&params.with_n_max(params.n_max + TRUNCATION_PROBE), reg, constants)?;

    // Energies are compared on the scale of the softest mode quantum.
    let quantum = constants.hbar() * params.mode_frequencies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut change = 0.0_f64;
    for j in [LABEL_PLUS, LABEL_MINUS, LABEL_TWO] {
        let (a, b) = (model.strong.ground_energy(j), probe_model.strong.ground_energy(j));
        change = change.max(relative_change(a, b, quantum));
    }
    for (a, b) in rows.iter().zip(&probe_rows) {
        change = change.max(relative_change(a.rate.rate, b.rate.rate, f64::MIN_POSITIVE));
        if a.rate.forbidden_reason != b.rate.forbidden_reason {
            change = f64::INFINITY;
        }
    }
    let monotone = rows.windows(2).all(|w| w[1].rate.rate <= w[0].rate.rate);
    Ok(ThreeLevelReport {
        epsilon_plus: model.epsilon_plus,
        epsilon_minus: model.epsilon_minus,
        ground_plus: model.strong.ground_energy(LABEL_PLUS),
        ground_minus: model.strong.ground_energy(LABEL_MINUS),
        ground_two: model.strong.ground_energy(LABEL_TWO),
        analytic_ground: params.analytic_dressed_ground_energy(constants),
        sign_assumption: params.pump_term() > 0.0,
        threshold: zeno_threshold_check(&model.strong, LABEL_MINUS, LABEL_TWO)?,
        ladder: rows,
        monotone,
        truncation_converged: change <= TRUNCATION_TOL,
        truncation_change: change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{pauli, Axis};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn frozen_qubit() {
        let fam = ProjectionFamily::computational(2).unwrap();
        let cmp = zeno_projected_evolution(&pauli(Axis::X), &fam, 0, 1.0, 1024, &consts()).unwrap();
        assert!(max_abs(&(cmp.limit.clone() - fam.projections()[0].matrix())) < 1e-15);
        assert!(cmp.error < 2e-3, "{}", cmp.error);
        // cos(1/n)^n ≈ 1 − 1/(2n).
        assert!((cmp.error - 1.0 / 2048.0).abs() < 1e-5);
    }

    #[test]
    fn commuting_case_is_exact() {
        let h = pauli(Axis::Z).scaled(0.7);
        let fam = ProjectionFamily::computational(2).unwrap();
        for n in [1, 3, 64] {
            let cmp = zeno_projected_evolution(&h, &fam, 1, 2.3, n, &consts()).unwrap();
            assert!(cmp.error < 1e-12);
        }
    }

    #[test]
    fn first_order_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = HermitianOperator::random(4, &mut rng);
        let basis = spectral_decompose(&HermitianOperator::random(4, &mut rng)).eigenvectors().clone();
        let fam = ProjectionFamily::from_columns(&basis, &[2, 2]).unwrap();
        let errors: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&n| zeno_projected_evolution(&h, &fam, 0, 1.0, n, &consts()).unwrap().error)
            .collect();
        for w in errors.windows(2) {
            let ratio = w[1] / w[0];
            assert!((0.4..=0.6).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn invalid_families() {
        let p = HermitianOperator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        assert!(ProjectionFamily::new(vec![p.clone()]).is_err());
        assert!(ProjectionFamily::new(vec![p.clone(), p.clone()]).is_err());
        let half = HermitianOperator::from_real_diagonal(&[0.5, 1.0]).unwrap();
        assert!(ProjectionFamily::new(vec![half]).is_err());
        assert!(ProjectionFamily::new(vec![]).is_err());
        let fam = ProjectionFamily::computational(2).unwrap();
        assert!(zeno_projected_evolution(&pauli(Axis::X), &fam, 0, 1.0, 0, &consts()).is_err());
    }

    #[test]
    fn dephasing_channel() {
        let s = 0.5;
        let rho = CMatrix::from_element(2, 2, c(s));
        let fam = ProjectionFamily::computational(2).unwrap();
        let out = zeno_state_evolution(&rho, &HermitianOperator::zeros(2), &fam, 1.0, &consts()).unwrap();
        let want = CMatrix::identity(2, 2) * c(0.5);
        assert!(max_abs(&(out - want)) < 1e-15);
    }

    #[test]
    fn block_evolution_keeps_trace() {
        let h = HermitianOperator::from_real_diagonal(&[0.3, -1.0, 2.0]).unwrap();
        let rho = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.2), c(0.5), c(0.3)]));
        let fam = ProjectionFamily::computational(3).unwrap();
        let out = zeno_state_evolution(&rho, &h, &fam, 4.0, &consts()).unwrap();
        assert!(max_abs(&(out - rho)) < 1e-14);
    }

    #[test]
    fn rejects_bad_density() {
        let fam = ProjectionFamily::computational(2).unwrap();
        let h = HermitianOperator::zeros(2);
        let not_unit = CMatrix::identity(2, 2);
        assert!(zeno_state_evolution(&not_unit, &h, &fam, 1.0, &consts()).is_err());
        let negative = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.5), c(-0.5)]));
        assert!(zeno_state_evolution(&negative, &h, &fam, 1.0, &consts()).is_err());
    }

    fn two_label(eps: [f64; 2], shifts: [f64; 2], v: f64) -> StrongCouplingModel {
        let h_r = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let r = HermitianOperator::from_real_diagonal(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let pert = pauli(Axis::X).scaled(v);
        StrongCouplingModel::from_coupling(eps.to_vec(), &shifts, &h_r, &r, pert).unwrap()
    }

    #[test]
    fn threshold_examples() {
        let sym = two_label([0.0, 0.0], [0.0, 0.0], 0.1);
        assert!(!zeno_threshold_check(&sym, 0, 1).unwrap());
        let up = two_label([0.0, 1.0], [0.0, 0.5], 0.1);
        assert!(zeno_threshold_check(&up, 0, 1).unwrap());
        assert!(zeno_threshold_check(&up, 0, 5).is_err());
    }

    #[test]
    fn threshold_gives_exact_zero() {
        let m = two_label([0.0, 2.0], [0.0, 0.0], 0.1);
        let reg = DeltaRegularization::gaussian(0.1).unwrap();
        let id = HermitianOperator::identity(4);
        let r = strong_coupling_rate(&m, &id, 0, 1, &reg, &consts()).unwrap();
        assert_eq!(r.rate, 0.0);
        assert_eq!(r.forbidden_reason, ForbiddenReason::EnergyConservation);
        // Reverse direction releases energy and is allowed.
        let back = strong_coupling_rate(&m, &id, 1, 0, &reg, &consts()).unwrap();
        assert!(back.rate > 0.0);
    }

    #[test]
    fn vanishing_perturbation() {
        let m = two_label([0.0, 0.0], [0.0, 0.0], 0.0);
        let reg = DeltaRegularization::gaussian(0.1).unwrap();
        let r = strong_coupling_rate(&m, &HermitianOperator::identity(4), 0, 1, &reg, &consts()).unwrap();
        assert_eq!(r.forbidden_reason, ForbiddenReason::MatrixElementZero);
    }

    #[test]
    fn degenerate_ground_state_is_rejected() {
        let h_r = HermitianOperator::from_real_diagonal(&[0.0, 0.0, 1.0]).unwrap();
        let m = StrongCouplingModel::from_coupling(
            vec![0.0, -1.0],
            &[0.0, 0.0],
            &h_r,
            &HermitianOperator::identity(3),
            pauli(Axis::X),
        )
        .unwrap();
        let reg = DeltaRegularization::gaussian(0.1).unwrap();
        let err = strong_coupling_rate(&m, &HermitianOperator::identity(3), 0, 1, &reg, &consts()).unwrap_err();
        assert!(matches!(err, Error::AmbiguousGroundState(_)));
    }

    #[test]
    fn perturbation_diagonal_must_vanish() {
        let h_r = HermitianOperator::identity(2);
        let bad = pauli(Axis::Z);
        assert!(StrongCouplingModel::from_coupling(vec![0.0, 1.0], &[0.0, 0.0], &h_r, &h_r, bad).is_err());
    }

    fn single_mode(pump: f64, n_max: usize) -> ThreeLevelModelParams {
        ThreeLevelModelParams {
            omega_13: 5.0,
            rabi: 0.1,
            mode_frequencies: vec![1.0],
            couplings: vec![c(1.5f64.sqrt())],
            pump_amplitudes: vec![c(pump)],
            g13: 1.0,
            n_max,
        }
    }

    #[test]
    fn bare_model_is_block_diagonal() {
        let mut p = single_mode(0.3, 6);
        p.rabi = 0.0;
        p.g13 = 0.0;
        let m = build_three_level_model(&p, &consts()).unwrap();
        let v = m.perturbation.matrix();
        assert!(v[(LABEL_PLUS, LABEL_TWO)].norm() == 0.0 && v[(LABEL_MINUS, LABEL_TWO)].norm() == 0.0);
        assert!((v[(LABEL_PLUS, LABEL_MINUS)].re + 2.5).abs() < 1e-15);
        // Level 2 decouples from 1 and 3 in the direct form.
        let h = m.hamiltonian.matrix();
        let df = 7;
        for i in 0..df {
            for j in 0..df {
                assert_eq!(h[(df + i, j)].norm(), 0.0);
                assert_eq!(h[(df + i, 2 * df + j)].norm(), 0.0);
            }
        }
    }

    #[test]
    fn no_pump_no_shift() {
        let m = build_three_level_model(&single_mode(0.0, 6), &consts()).unwrap();
        assert_eq!(m.epsilon_plus, 2.5);
        assert_eq!(m.epsilon_minus, 2.5);
        assert!(m.reassembly_residual(0) < 1e-12);
    }

    #[test]
    fn displaced_ground_energy() {
        let p = single_mode(0.4, 30);
        let m = build_three_level_model(&p, &consts()).unwrap();
        let exact = p.analytic_dressed_ground_energy(&consts());
        assert!((exact + 1.5).abs() < 1e-15);
        assert!((m.strong.ground_energy(LABEL_PLUS) - exact).abs() < 1e-6);
        assert!((m.strong.ground_energy(LABEL_MINUS) - exact).abs() < 1e-6);
        assert!(m.strong.ground_energy(LABEL_TWO).abs() < 1e-10);
    }

    #[test]
    fn oversized_truncation() {
        let mut p = single_mode(0.1, 30);
        p.mode_frequencies = vec![1.0, 1.0, 1.0];
        p.couplings = vec![c(1.0); 3];
        p.pump_amplitudes = vec![c(0.1); 3];
        assert!(matches!(build_three_level_model(&p, &consts()), Err(Error::TruncationTooLarge(_))));
        p.mode_frequencies.clear();
        assert!(build_three_level_model(&p, &consts()).is_err());
    }
}
