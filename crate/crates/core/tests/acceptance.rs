//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use common::{below_cutoff_reservoir, chain, fit_slope, linspace, site_projector, spin_echo_drive, FlatBandProblem};
use decoherence_core::dfs::{catalan_dimension, collective_generators, dfs_nullspace};
use decoherence_core::floquet::{bangbang_rate, floquet_decompose, power_spectrum, PeriodicDrive};
use decoherence_core::golden_rule::{
    autocorrelation_rate, golden_rule_rate, minimal_decoherence_scan, weak_coupling_rate,
};
use decoherence_core::operator::{
    expm_unitary, hermiticity_defect, max_abs, spectral_decompose, CMatrix, HermitianOperator,
    PhysicalConstants, C64, HERMITICITY_TOL, UNITARITY_TOL,
};
use decoherence_core::qubit::{pauli, Axis};
use decoherence_core::reservoir::{DeltaRegularization, ForbiddenReason};
use decoherence_core::zeno::{
    build_three_level_model, strong_coupling_rate, three_level_zeno_report, zeno_projected_evolution,
    zeno_threshold_check, ProjectionFamily, StrongCouplingModel, ThreeLevelModelParams, LABEL_MINUS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn consts() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(start: Instant, seconds: f64, detail: String) -> Outcome {
    let used = start.elapsed().as_secs_f64();
    check(used < seconds, format!("{detail}; {used:.2} s of {seconds} s"))
}

fn catalan_dimensions() -> Outcome {
    let start = Instant::now();
    let mut dims = Vec::new();
    let mut worst = 0.0_f64;
    for n in 1..=4u32 {
        let gens = collective_generators(2 * n as usize).map_err(|e| e.to_string())?;
        let basis = dfs_nullspace(&gens, None).map_err(|e| e.to_string())?;
        if basis.dimension() as u128 != catalan_dimension(n).map_err(|e| e.to_string())? {
            return Err(format!("2N = {}: dimension {}", 2 * n, basis.dimension()));
        }
        for j in gens.generators() {
            let image = j.matrix() * basis.vectors();
            for col in image.column_iter() {
                worst = worst.max(col.norm());
            }
        }
        dims.push(basis.dimension());
    }
    if worst >= 1e-9 {
        return Err(format!("max |J_k v| = {worst:.2e}"));
    }
    within_budget(start, 30.0, format!("dimensions {dims:?}, max |J_k v| = {worst:.1e}"))
}

fn golden_rule_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    for case in 0..100 {
        let dim = rng.random_range(2..=8);
        let h0 = spectral_decompose(&HermitianOperator::random(dim, &mut rng));
        let v = HermitianOperator::random(dim, &mut rng).scaled(0.1);
        let from = rng.random_range(0..dim);
        let to = (from + rng.random_range(1..dim)) % dim;
        let eta = rng.random_range(0.2..2.0);
        let reg = if case % 2 == 0 {
            DeltaRegularization::gaussian(eta)
        } else {
            DeltaRegularization::lorentzian(eta)
        }
        .map_err(|e| e.to_string())?;
        let a = golden_rule_rate(&h0, &v, from, to, &reg, &consts()).map_err(|e| e.to_string())?.rate;
        let b = autocorrelation_rate(&h0, &v, from, to, &reg, &consts()).map_err(|e| e.to_string())?.rate;
        worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
    }
    check(worst < 1e-8, format!("100 instances, max relative difference {worst:.2e}"))
}

fn weak_coupling_oracle() -> Outcome {
    let start = Instant::now();
    let problem = FlatBandProblem::new(0.2);
    let system = spectral_decompose(&problem.system);
    let reg = DeltaRegularization::default_for(&problem.reservoir).map_err(|e| e.to_string())?;
    let predicted = weak_coupling_rate(&system, &problem.s_op, &problem.reservoir, 1, 0, &reg, &consts())
        .map_err(|e| e.to_string())?
        .rate;
    let times = linspace(0.01 / predicted, 0.05 / predicted, 41);
    let pops = problem.decay_curve(&times);
    let peak = pops.iter().copied().fold(0.0, f64::max);
    let fitted = fit_slope(&times, &pops);
    let rel = (predicted - fitted).abs() / fitted;
    if peak >= 0.1 {
        return Err(format!("transferred population reached {peak:.3}"));
    }
    let detail = format!(
        "predicted {predicted:.5e}, fitted {fitted:.5e}, deviation {:.2}%, max P {peak:.3}",
        100.0 * rel
    );
    if rel >= 0.1 {
        return Err(detail);
    }
    within_budget(start, 60.0, detail)
}

fn minimal_decoherence_scaling() -> Outcome {
    let gaps: Vec<f64> = (0..=10).map(|i| 0.1 * 10f64.powf(i as f64 / 10.0)).collect();
    let mut worst = 0.0_f64;
    for r in [1.0, 3.0] {
        let rates = minimal_decoherence_scan(&gaps, 0.3, r, &consts()).map_err(|e| e.to_string())?;
        let reference = rates[0].1 / rates[0].0.powf(r);
        for (gap, rate) in &rates {
            worst = worst.max((rate / gap.powf(r) - reference).abs() / reference);
        }
        let zero = minimal_decoherence_scan(&[0.0], 0.3, r, &consts()).map_err(|e| e.to_string())?;
        if zero[0].1 != 0.0 {
            return Err(format!("r = {r}: rate(0) = {:e}", zero[0].1));
        }
    }
    check(worst < 1e-10, format!("r in {{1, 3}} over one decade, max spread {worst:.1e}, rate(0) = 0"))
}

fn floquet_static_reduction() -> Outcome {
    let c = consts();
    let h = HermitianOperator::from_real_diagonal(&[-0.25, 0.25]).map_err(|e| e.to_string())?;
    let s = pauli(Axis::X).scaled(0.7).try_add(&pauli(Axis::Z).scaled(0.2)).map_err(|e| e.to_string())?;
    let drive = PeriodicDrive::constant(h.clone(), 1.5).map_err(|e| e.to_string())?;
    let decomp = floquet_decompose(&drive, 136, &c).map_err(|e| e.to_string())?;
    let spectrum = power_spectrum(&decomp, &s, 0, 1, 16, &c).map_err(|e| e.to_string())?;
    let expected = s.get(0, 1).norm_sqr();
    let nu0 = spectrum.weight(0).unwrap_or(f64::NAN);
    let others = spectrum.lines.iter().filter(|l| l.n != 0).map(|l| l.weight).fold(0.0, f64::max);
    let reservoir = below_cutoff_reservoir(0.02);
    let reg = DeltaRegularization::default_for(&reservoir).map_err(|e| e.to_string())?;
    let driven = bangbang_rate(&spectrum, &reservoir, &reg, &c).rate;
    let stat = weak_coupling_rate(&spectral_decompose(&h), &s, &reservoir, 1, 0, &reg, &c)
        .map_err(|e| e.to_string())?
        .rate;
    let rel = (driven - stat).abs() / stat;
    check(
        (nu0 - expected).abs() < 1e-8 && others < 1e-8 && rel < 1e-8,
        format!(
            "nu_0 - |S_kl|^2 = {:.1e}, other lines <= {others:.1e}, bang-bang vs weak coupling {rel:.1e}",
            nu0 - expected
        ),
    )
}

fn comb_normalization() -> Outcome {
    // Drives in the fast regime: each segment has |H| = 0.5 ħ/τ, coupling |S| = 1.
    let c = consts();
    let mut worst = 0.0_f64;
    let mut pairs = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = rng.random_range(2..=4);
        let split: f64 = rng.random_range(0.2..0.8);
        let h1 = HermitianOperator::random(dim, &mut rng);
        let h2 = HermitianOperator::random(dim, &mut rng);
        let s = HermitianOperator::random(dim, &mut rng);
        let h1 = h1.scaled(0.5 / h1.operator_norm());
        let h2 = h2.scaled(0.5 / h2.operator_norm());
        let s = s.scaled(1.0 / s.operator_norm());
        let drive = PeriodicDrive::new(vec![(h1, split), (h2, 1.0 - split)]).map_err(|e| e.to_string())?;
        let decomp = floquet_decompose(&drive, 256, &c).map_err(|e| e.to_string())?;
        for k in 0..dim {
            for l in 0..dim {
                let spectrum = power_spectrum(&decomp, &s, k, l, 16, &c).map_err(|e| e.to_string())?;
                if spectrum.lines.iter().any(|line| line.weight < 0.0) {
                    return Err(format!("seed {seed}: negative weight"));
                }
                worst = worst.max((spectrum.total_weight() - spectrum.correlation_at_zero).abs());
                pairs += 1;
            }
        }
    }
    check(worst < 1e-6, format!("50 drives, {pairs} pairs, max |sum nu_n - F(0)| = {worst:.2e}"))
}

fn echo_rate(period: f64) -> Result<f64, String> {
    let c = consts();
    let drive = spin_echo_drive(0.5, period, 0.1);
    let decomp = floquet_decompose(&drive, 256, &c).map_err(|e| e.to_string())?;
    let reservoir = below_cutoff_reservoir(0.02);
    let reg = DeltaRegularization::default_for(&reservoir).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    for (k, l) in [(0, 1), (1, 0)] {
        let spectrum = power_spectrum(&decomp, &pauli(Axis::Y), k, l, 16, &c).map_err(|e| e.to_string())?;
        worst = worst.max(bangbang_rate(&spectrum, &reservoir, &reg, &c).rate);
    }
    Ok(worst)
}

fn bangbang_suppression() -> Outcome {
    let c = consts();
    let reservoir = below_cutoff_reservoir(0.02);
    let reg = DeltaRegularization::default_for(&reservoir).map_err(|e| e.to_string())?;
    let h0 = spectral_decompose(&pauli(Axis::Z).scaled(0.25));
    let undriven = weak_coupling_rate(&h0, &pauli(Axis::Y), &reservoir, 1, 0, &reg, &c)
        .map_err(|e| e.to_string())?
        .rate;
    let tau0 = 2.0 * PI / 1.5;
    let rates = [tau0, tau0 / 2.0, tau0 / 4.0]
        .iter()
        .map(|&t| echo_rate(t))
        .collect::<Result<Vec<_>, _>>()?;
    let monotone = rates.windows(2).all(|w| w[1] <= w[0]);
    check(
        undriven > 0.0 && monotone && rates[2] <= 0.1 * undriven,
        format!(
            "undriven {undriven:.3e}; periods tau0, tau0/2, tau0/4 give {:.3e}, {:.3e}, {:.3e}",
            rates[0], rates[1], rates[2]
        ),
    )
}

fn zeno_convergence() -> Outcome {
    let c = consts();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = rng.random_range(2..=8);
        let rank = rng.random_range(1..dim);
        let h = HermitianOperator::random(dim, &mut rng);
        let h = h.scaled(1.0 / h.operator_norm());
        let basis = spectral_decompose(&HermitianOperator::random(dim, &mut rng)).eigenvectors().clone();
        let fam = ProjectionFamily::from_columns(&basis, &[rank, dim - rank]).map_err(|e| e.to_string())?;
        let mut errors = Vec::new();
        for n in [64u64, 128, 256, 512] {
            errors.push(zeno_projected_evolution(&h, &fam, 0, 1.0, n, &c).map_err(|e| e.to_string())?.error);
        }
        for w in errors.windows(2) {
            lo = lo.min(w[1] / w[0]);
            hi = hi.max(w[1] / w[0]);
        }
    }
    // Commuting instances: H block-diagonal in the projection basis.
    let mut worst_commuting = 0.0_f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let dim = rng.random_range(2..=8);
        let rank = rng.random_range(1..dim);
        let basis = spectral_decompose(&HermitianOperator::random(dim, &mut rng)).eigenvectors().clone();
        let a = HermitianOperator::random(rank, &mut rng);
        let b = HermitianOperator::random(dim - rank, &mut rng);
        let mut block = CMatrix::zeros(dim, dim);
        block.view_mut((0, 0), (rank, rank)).copy_from(a.matrix());
        block.view_mut((rank, rank), (dim - rank, dim - rank)).copy_from(b.matrix());
        let (h, _) = HermitianOperator::symmetrized(&basis * block * basis.adjoint()).map_err(|e| e.to_string())?;
        let fam = ProjectionFamily::from_columns(&basis, &[rank, dim - rank]).map_err(|e| e.to_string())?;
        for j in 0..2 {
            worst_commuting = worst_commuting.max(zeno_projected_evolution(&h, &fam, j, 1.0, 1, &c).map_err(|e| e.to_string())?.error);
        }
    }
    check(
        lo >= 0.4 && hi <= 0.6 && worst_commuting < 1e-12,
        format!("20 instances, error ratios in [{lo:.4}, {hi:.4}]; commuting error {worst_commuting:.1e}"),
    )
}

fn threshold_hard_zero() -> Outcome {
    let c = consts();
    let n = 30;
    let eta = 0.05;
    let reg = DeltaRegularization::gaussian(eta).map_err(|e| e.to_string())?;
    let model = |eps: f64| {
        StrongCouplingModel::from_coupling(vec![0.0, eps], &[-3.0, 0.0], &chain(n, 1.0), &site_projector(n, 0), pauli(Axis::X).scaled(0.01))
    };
    let probe = model(0.0).map_err(|e| e.to_string())?;
    // Smallest final energy is ε_1 + E_g^(1); put it 10η above or below the initial energy.
    let edge = probe.ground_energy(0) - probe.ground_energy(1);
    let closed = model(edge + 10.0 * eta).map_err(|e| e.to_string())?;
    let open = model(edge - 10.0 * eta).map_err(|e| e.to_string())?;
    let id = HermitianOperator::identity(n);
    let shut = strong_coupling_rate(&closed, &id, 0, 1, &reg, &c).map_err(|e| e.to_string())?;
    let flowing = strong_coupling_rate(&open, &id, 0, 1, &reg, &c).map_err(|e| e.to_string())?;
    let threshold = zeno_threshold_check(&closed, 0, 1).map_err(|e| e.to_string())?;
    check(
        threshold
            && shut.rate == 0.0
            && shut.forbidden_reason == ForbiddenReason::EnergyConservation
            && flowing.rate > 0.0,
        format!(
            "gap +10 eta: rate {} ({}); gap -10 eta: rate {:.3e}",
            shut.rate,
            shut.forbidden_reason.as_str(),
            flowing.rate
        ),
    )
}

fn three_level_model() -> Outcome {
    let start = Instant::now();
    let c = consts();
    let f = 1.5f64.sqrt();
    let params = ThreeLevelModelParams {
        omega_13: 5.0,
        rabi: 0.1,
        mode_frequencies: vec![1.0],
        couplings: vec![C64::new(f, 0.0)],
        pump_amplitudes: vec![C64::new(0.1 / f, 0.0)],
        g13: 1.0,
        n_max: 30,
    };
    let model = build_three_level_model(&params, &c).map_err(|e| e.to_string())?;
    let analytic = params.analytic_dressed_ground_energy(&c);
    let energy_error = (model.strong.ground_energy(LABEL_MINUS) - analytic).abs();
    let reg = DeltaRegularization::gaussian(0.5).map_err(|e| e.to_string())?;
    let report = three_level_zeno_report(&params, &reg, &c).map_err(|e| e.to_string())?;
    let last = report.ladder.last().ok_or("empty ladder")?;
    let rates: Vec<String> = report
        .ladder
        .iter()
        .map(|row| if row.rate.is_forbidden() { "forbidden".to_string() } else { format!("{:.3e}", row.rate.rate) })
        .collect();
    let detail = format!(
        "E_g error {energy_error:.1e}; ladder x{{0,1,2,4,8}}: [{}]; sign assumption {}, truncation converged {}",
        rates.join(", "),
        report.sign_assumption,
        report.truncation_converged
    );
    if !(energy_error < 1e-6
        && report.monotone
        && report.sign_assumption
        && report.truncation_converged
        && last.threshold
        && last.rate.forbidden_reason == ForbiddenReason::EnergyConservation)
    {
        return Err(detail);
    }
    within_budget(start, 120.0, detail)
}

fn core_invariants() -> Outcome {
    let c = consts();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut herm, mut ortho, mut recon, mut unit) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let dim = rng.random_range(1..=64);
        let h = HermitianOperator::random(dim, &mut rng);
        let scale = h.max_abs();
        herm = herm.max(hermiticity_defect(h.matrix()) / scale);
        let d = spectral_decompose(&h);
        ortho = ortho.max(d.orthonormality_defect());
        recon = recon.max(max_abs(&(d.reconstruct() - h.matrix())) / scale);
        let t = rng.random_range(-10.0..10.0);
        unit = unit.max(expm_unitary(&h, t, &c).unitarity_defect());
    }
    check(
        herm <= HERMITICITY_TOL && ortho < 1e-10 && recon < 1e-10 && unit < UNITARITY_TOL,
        format!(
            "1000 matrices: Hermiticity {herm:.1e}, orthonormality {ortho:.1e}, reconstruction {recon:.1e}, unitarity {unit:.1e}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Catalan DFS dimensions", catalan_dimensions),
        ("golden-rule consistency", golden_rule_consistency),
        ("weak-coupling oracle", weak_coupling_oracle),
        ("minimal-decoherence scaling", minimal_decoherence_scaling),
        ("Floquet static reduction", floquet_static_reduction),
        ("comb normalization", comb_normalization),
        ("bang-bang suppression", bangbang_suppression),
        ("Zeno limit convergence", zeno_convergence),
        ("threshold hard zero", threshold_hard_zero),
        ("three-level Zeno model", three_level_model),
        ("core invariant suite", core_invariants),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2} s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
