//! Discretized reservoirs, finite-width energy deltas, and rate reports.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::operator::{hermiticity_defect, max_abs, CMatrix, C64, HERMITICITY_TOL};

/// Shape of the finite-width energy delta.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaKind {
    Gaussian,
    Lorentzian,
}

/// A normalized peak of width `η` standing in for `δ(E)` on discrete spectra.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaRegularization {
    kind: DeltaKind,
    width: f64,
}

impl DeltaRegularization {
    pub fn new(kind: DeltaKind, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "regularization width must be positive, got {width}"
            )));
        }
        Ok(Self { kind, width })
    }

    pub fn gaussian(width: f64) -> Result<Self> {
        Self::new(DeltaKind::Gaussian, width)
    }

    pub fn lorentzian(width: f64) -> Result<Self> {
        Self::new(DeltaKind::Lorentzian, width)
    }

    /// Gaussian of width 4 × the mean mode spacing of `reservoir`.
    pub fn default_for(reservoir: &ReservoirModel) -> Result<Self> {
        let spacing = reservoir.mean_spacing().ok_or_else(|| {
            Error::InvalidArgument("reservoir needs at least two modes for an automatic width".into())
        })?;
        Self::gaussian(4.0 * spacing)
    }

    #[inline]
    pub fn kind(&self) -> DeltaKind {
        self.kind
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.width
    }

    /// `δ_η(energy)`.
    pub fn eval(&self, energy: f64) -> f64 {
        let eta = self.width;
        match self.kind {
            DeltaKind::Gaussian => {
                let z = energy / eta;
                (-0.5 * z * z).exp() / (eta * (2.0 * PI).sqrt())
            }
            DeltaKind::Lorentzian => eta / (PI * (energy * energy + eta * eta)),
        }
    }

    /// Time-domain damping `D(t)` whose transform `(1/2πħ)∫ D(t) e^{iEt/ħ} dt`
    /// is `δ_η(E)`.
    pub fn damping(&self, t: f64, hbar: f64) -> f64 {
        let x = self.width * t / hbar;
        match self.kind {
            DeltaKind::Gaussian => (-0.5 * x * x).exp(),
            DeltaKind::Lorentzian => (-x.abs()).exp(),
        }
    }
}

/// Why a transition rate vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForbiddenReason {
    None,
    MatrixElementZero,
    EnergyConservation,
}

impl ForbiddenReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            ForbiddenReason::None => "none",
            ForbiddenReason::MatrixElementZero => "matrix_element_zero",
            ForbiddenReason::EnergyConservation => "energy_conservation",
        }
    }
}

/// A transition rate from `from_state` to `to_state`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReport {
    pub from_state: usize,
    pub to_state: usize,
    pub rate: f64,
    pub forbidden_reason: ForbiddenReason,
}

impl RateReport {
    pub fn allowed(from_state: usize, to_state: usize, rate: f64) -> Self {
        Self { from_state, to_state, rate: rate.max(0.0), forbidden_reason: ForbiddenReason::None }
    }

    pub fn forbidden(from_state: usize, to_state: usize, reason: ForbiddenReason) -> Self {
        debug_assert!(reason != ForbiddenReason::None);
        Self { from_state, to_state, rate: 0.0, forbidden_reason: reason }
    }

    #[inline]
    pub fn is_forbidden(&self) -> bool {
        self.forbidden_reason != ForbiddenReason::None
    }
}

/// A reservoir reduced to a finite set of levels.
///
/// Repeated energies are allowed; they play the role of degenerate levels
/// distinguished by an extra label.
#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirModel {
    mode_energies: Vec<f64>,
    coupling_elements: CMatrix,
    initial_distribution: Vec<f64>,
    cutoff_energy: f64,
    density_exponent: f64,
}

impl ReservoirModel {
    pub fn new(
        mode_energies: Vec<f64>,
        coupling_elements: CMatrix,
        initial_distribution: Vec<f64>,
        cutoff_energy: f64,
        density_exponent: f64,
    ) -> Result<Self> {
        let n = mode_energies.len();
        if n == 0 {
            return Err(Error::InvalidArgument("reservoir has no modes".into()));
        }
        if mode_energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("mode_energies must be finite".into()));
        }
        if mode_energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("mode_energies must be ascending".into()));
        }
        if coupling_elements.nrows() != n || coupling_elements.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "coupling_elements is {}x{} but there are {n} modes",
                coupling_elements.nrows(),
                coupling_elements.ncols()
            )));
        }
        if hermiticity_defect(&coupling_elements) > HERMITICITY_TOL * max_abs(&coupling_elements) {
            return Err(Error::InvalidOperator("coupling_elements must be Hermitian".into()));
        }
        if initial_distribution.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "initial_distribution has {} entries but there are {n} modes",
                initial_distribution.len()
            )));
        }
        if initial_distribution.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidArgument("initial_distribution must be nonnegative".into()));
        }
        let total: f64 = initial_distribution.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "initial_distribution must sum to 1, sums to {total}"
            )));
        }
        if !(cutoff_energy.is_finite() && cutoff_energy > 0.0) {
            return Err(Error::InvalidArgument("cutoff_energy must be positive".into()));
        }
        if !(density_exponent.is_finite() && density_exponent >= 0.0) {
            return Err(Error::InvalidArgument("density_exponent must be nonnegative".into()));
        }
        Ok(Self {
            mode_energies,
            coupling_elements,
            initial_distribution,
            cutoff_energy,
            density_exponent,
        })
    }

    /// A reservoir prepared in a single level at `ground_energy` that couples
    /// with strength `coupling` to `n_band` levels spread uniformly over
    /// `[band_low, band_high]`. Level 0 is the ground level.
    pub fn ground_to_band(
        ground_energy: f64,
        band_low: f64,
        band_high: f64,
        n_band: usize,
        coupling: f64,
    ) -> Result<Self> {
        if n_band < 2 || !(band_high > band_low) || band_low < ground_energy {
            return Err(Error::InvalidArgument(
                "band needs at least two levels above the ground level".into(),
            ));
        }
        let n = n_band + 1;
        let step = (band_high - band_low) / (n_band - 1) as f64;
        let mut energies = Vec::with_capacity(n);
        energies.push(ground_energy);
        energies.extend((0..n_band).map(|j| band_low + step * j as f64));
        let mut r = CMatrix::zeros(n, n);
        for j in 1..n {
            r[(j, 0)] = C64::new(coupling, 0.0);
            r[(0, j)] = C64::new(coupling, 0.0);
        }
        let mut sigma = vec![0.0; n];
        sigma[0] = 1.0;
        Self::new(energies, r, sigma, band_high - ground_energy, 0.0)
    }

    #[inline]
    pub fn n_modes(&self) -> usize {
        self.mode_energies.len()
    }

    #[inline]
    pub fn mode_energies(&self) -> &[f64] {
        &self.mode_energies
    }

    #[inline]
    pub fn coupling_elements(&self) -> &CMatrix {
        &self.coupling_elements
    }

    #[inline]
    pub fn initial_distribution(&self) -> &[f64] {
        &self.initial_distribution
    }

    #[inline]
    pub fn cutoff_energy(&self) -> f64 {
        self.cutoff_energy
    }

    #[inline]
    pub fn density_exponent(&self) -> f64 {
        self.density_exponent
    }

    /// Mean gap between consecutive distinct mode energies.
    pub fn mean_spacing(&self) -> Option<f64> {
        let e = &self.mode_energies;
        let span = e.last()? - e.first()?;
        let mut distinct = 1usize;
        for w in e.windows(2) {
            if w[1] > w[0] {
                distinct += 1;
            }
        }
        (distinct > 1 && span > 0.0).then(|| span / (distinct - 1) as f64)
    }

    /// `Σ_{i,j} σ_i |R_{ji}|² δ_η(E_i − E_j + released)`: the reservoir side
    /// of a transition in which the system hands `released` energy to the
    /// reservoir.
    pub fn absorption_density(&self, released: f64, reg: &DeltaRegularization) -> f64 {
        let mut total = 0.0;
        for (i, (&sigma, &ei)) in self.initial_distribution.iter().zip(&self.mode_energies).enumerate() {
            if sigma == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for (j, &ej) in self.mode_energies.iter().enumerate() {
                let r2 = self.coupling_elements[(j, i)].norm_sqr();
                if r2 != 0.0 {
                    inner += r2 * reg.eval(ei - ej + released);
                }
            }
            total += sigma * inner;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    #[test]
    fn gaussian_normalized_over_twenty_widths() {
        for &eta in &[1e-3, 0.7, 25.0] {
            let reg = DeltaRegularization::gaussian(eta).unwrap();
            let mass = integrate(|e| reg.eval(e), -20.0 * eta, 20.0 * eta, 200, 10);
            assert!((mass - 1.0).abs() < 1e-6, "eta={eta} mass={mass}");
        }
    }

    #[test]
    fn lorentzian_normalized_on_the_line() {
        // substitute E = η tan θ
        let eta = 0.3;
        let reg = DeltaRegularization::lorentzian(eta).unwrap();
        let half = std::f64::consts::FRAC_PI_2;
        let mass = integrate(
            |th: f64| {
                let e = eta * th.tan();
                reg.eval(e) * eta / th.cos().powi(2)
            },
            -half,
            half,
            50,
            10,
        );
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn width_must_be_positive() {
        assert!(DeltaRegularization::gaussian(0.0).is_err());
        assert!(DeltaRegularization::lorentzian(-1.0).is_err());
    }

    #[test]
    fn peak_value() {
        let reg = DeltaRegularization::gaussian(0.5).unwrap();
        assert!((reg.eval(0.0) - 1.0 / (0.5 * (2.0 * PI).sqrt())).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        let r = CMatrix::zeros(2, 2);
        assert!(ReservoirModel::new(vec![0.0, 1.0], r.clone(), vec![0.5, 0.5], 1.0, 1.0).is_ok());
        assert!(ReservoirModel::new(vec![1.0, 0.0], r.clone(), vec![0.5, 0.5], 1.0, 1.0).is_err());
        assert!(ReservoirModel::new(vec![0.0, 1.0], r.clone(), vec![0.5, 0.6], 1.0, 1.0).is_err());
        assert!(ReservoirModel::new(vec![0.0, 1.0], r.clone(), vec![0.5, 0.5], 0.0, 1.0).is_err());
        let mut bad = r.clone();
        bad[(0, 1)] = C64::new(1.0, 0.0);
        assert!(ReservoirModel::new(vec![0.0, 1.0], bad, vec![0.5, 0.5], 1.0, 1.0).is_err());
        assert!(ReservoirModel::new(vec![0.0, 1.0, 2.0], r, vec![0.5, 0.5], 1.0, 1.0).is_err());
    }

    #[test]
    fn default_width_tracks_spacing() {
        let res = ReservoirModel::ground_to_band(0.0, 1.0, 2.0, 11, 0.1).unwrap();
        // levels 0, 1.0, 1.1, …, 2.0 → 11 gaps over a span of 2
        let reg = DeltaRegularization::default_for(&res).unwrap();
        assert!((reg.width() - 4.0 * 2.0 / 11.0).abs() < 1e-12);
        assert_eq!(reg.kind(), DeltaKind::Gaussian);
    }
}
