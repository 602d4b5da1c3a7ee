//! Brute-force references shared by the integration tests.
#![allow(dead_code)]

use decoherence_core::operator::{
    spectral_decompose, CMatrix, CVector, HermitianOperator, SpectralDecomposition, C64,
};

/// Exact Schrödinger evolution of one initial state under a fixed Hamiltonian
/// (ħ = 1), by diagonalization.
pub struct Evolver {
    decomp: SpectralDecomposition,
    coeffs: CVector,
}

impl Evolver {
    pub fn new(h: &HermitianOperator, psi0: &CVector) -> Self {
        let decomp = spectral_decompose(h);
        let coeffs = decomp.eigenvectors().adjoint() * psi0;
        Self { decomp, coeffs }
    }

    pub fn state(&self, t: f64) -> CVector {
        let mut c = self.coeffs.clone();
        for (k, z) in c.iter_mut().enumerate() {
            *z *= C64::from_polar(1.0, -self.decomp.eigenvalues()[k] * t);
        }
        self.decomp.eigenvectors() * c
    }

    /// Weight of the state on the index range `start..start + len`.
    pub fn population(&self, t: f64, start: usize, len: usize) -> f64 {
        self.state(t).rows(start, len).norm_squared()
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Open chain `−J Σ (|i><i+1| + h.c.)` on `n` sites.
pub fn chain(n: usize, hopping: f64) -> HermitianOperator {
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n - 1 {
        h[(i, i + 1)] = C64::new(-hopping, 0.0);
        h[(i + 1, i)] = C64::new(-hopping, 0.0);
    }
    HermitianOperator::new(h).unwrap()
}

/// `|site><site|` on `n` sites.
pub fn site_projector(n: usize, site: usize) -> HermitianOperator {
    let mut d = vec![0.0; n];
    d[site] = 1.0;
    HermitianOperator::from_real_diagonal(&d).unwrap()
}

use decoherence_core::floquet::PeriodicDrive;
use decoherence_core::qubit::{pauli, Axis};
use decoherence_core::reservoir::ReservoirModel;

/// Qubit `diag(0, 1)` coupled through `σ_x` to a flat band of 199 levels on
/// `[0.5, 1.5]` above a reservoir ground level at 0.
pub struct FlatBandProblem {
    pub system: HermitianOperator,
    pub s_op: HermitianOperator,
    pub reservoir: ReservoirModel,
}

impl FlatBandProblem {
    pub const BAND_LEVELS: usize = 199;

    /// Band coupling `ρ` chosen so the golden-rule rate is `gamma_in_spacings`
    /// level spacings.
    pub fn new(gamma_in_spacings: f64) -> Self {
        let spacing = 1.0 / (Self::BAND_LEVELS - 1) as f64;
        // Γ = 2πρ²/d.
        let rho = (gamma_in_spacings * spacing * spacing / (2.0 * std::f64::consts::PI)).sqrt();
        Self {
            system: HermitianOperator::from_real_diagonal(&[0.0, 1.0]).unwrap(),
            s_op: pauli(Axis::X),
            reservoir: ReservoirModel::ground_to_band(0.0, 0.5, 1.5, Self::BAND_LEVELS, rho).unwrap(),
        }
    }

    /// `H_S ⊗ 1 + 1 ⊗ H_R + S ⊗ R` with system index slowest.
    pub fn joint_hamiltonian(&self) -> HermitianOperator {
        let n = self.reservoir.n_modes();
        let h_r = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            self.reservoir.mode_energies().iter().map(|&e| C64::new(e, 0.0)),
        ));
        let h = self.system.matrix().kronecker(&CMatrix::identity(n, n))
            + CMatrix::identity(2, 2).kronecker(&h_r)
            + self.s_op.matrix().kronecker(self.reservoir.coupling_elements());
        HermitianOperator::new(h).unwrap()
    }

    /// Population of the lower system level after starting in
    /// `|1> ⊗ |ground>`, at the given times.
    pub fn decay_curve(&self, times: &[f64]) -> Vec<f64> {
        let n = self.reservoir.n_modes();
        let mut psi = CVector::zeros(2 * n);
        psi[n] = C64::new(1.0, 0.0);
        let evolver = Evolver::new(&self.joint_hamiltonian(), &psi);
        times.iter().map(|&t| evolver.population(t, 0, n)).collect()
    }
}

/// Spin-echo drive: a `σ_x` π-pulse taking `pulse_fraction` of each period,
/// then free precession under `(Δ/2)σ_z`.
pub fn spin_echo_drive(splitting: f64, period: f64, pulse_fraction: f64) -> PeriodicDrive {
    let width = pulse_fraction * period;
    let pulse = pauli(Axis::X).scaled(std::f64::consts::PI / (2.0 * width));
    let free = pauli(Axis::Z).scaled(0.5 * splitting);
    PeriodicDrive::new(vec![(pulse, width), (free, period - width)]).unwrap()
}

/// Zero-temperature reservoir that absorbs energies in `[0.05, 1]` only.
pub fn below_cutoff_reservoir(coupling: f64) -> ReservoirModel {
    ReservoirModel::ground_to_band(0.0, 0.05, 1.0, 96, coupling).unwrap()
}
