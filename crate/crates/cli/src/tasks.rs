//! Dispatch from a validated config to the analysis routines.

use std::time::Instant;

use decoherence_core::dfs::{
    catalan_dimension, collective_generators, dfs_nullspace, subsystem_decomposition, GeneratorSet,
};
use decoherence_core::floquet::{bangbang_rate, floquet_decompose, power_spectrum, PeriodicDrive};
use decoherence_core::golden_rule::{golden_rule_rate, minimal_decoherence_scan, weak_coupling_rate};
use decoherence_core::operator::{spectral_decompose, HermitianOperator, PhysicalConstants, C64};
use decoherence_core::reservoir::{DeltaKind, DeltaRegularization, ReservoirModel};
use decoherence_core::zeno::{
    strong_coupling_rate, three_level_zeno_report, zeno_projected_evolution, ProjectionFamily,
    StrongCouplingModel, ThreeLevelModelParams,
};
use decoherence_core::Error as CoreError;
use sha2::{Digest, Sha256};

use crate::config::{to_matrix, AnalysisConfig, GeneratorSpec, ParsedConfig, RegularizationKind, Task};
use crate::error::CliError;
use crate::table::{Cell, Metadata, ResultTable};

/// Regularization widths default to this many mean level spacings.
const AUTO_WIDTH_SPACINGS: f64 = 4.0;
const DEFAULT_N_MAX: usize = 16;
const DEFAULT_STEPS: [u64; 4] = [1, 16, 256, 4096];

/// Runs the configured analysis. Output depends only on the config.
pub fn run(parsed: &ParsedConfig) -> Result<ResultTable, CliError> {
    let config = &parsed.config;
    let start = Instant::now();
    let task = config.task.name();
    let wrap = |source: CoreError| CliError::Task { task, source };
    let c = PhysicalConstants::new(config.constants.hbar).map_err(wrap)?;
    let mut table = match config.task {
        Task::GoldenRule => golden_rule(config, &c),
        Task::WeakCoupling => weak_coupling(config, &c),
        Task::MinimalScan => minimal_scan(config, &c),
        Task::Floquet => floquet(config, &c),
        Task::Bangbang => bangbang(config, &c),
        Task::Dfs => dfs(config),
        Task::Subsystems => subsystems(config),
        Task::ZenoLimit => zeno_limit(config, &c),
        Task::ZenoThreshold => zeno_threshold(config, &c),
        Task::ThreeLevel => three_level(config, &c),
    }
    .map_err(|e| match e {
        TaskError::Core(source) => wrap(source),
        TaskError::Cli(e) => e,
    })?;
    let meta = table.metadata.get_or_insert_with(Metadata::default);
    meta.task = task.into();
    meta.version = env!("CARGO_PKG_VERSION").into();
    meta.config_digest = config_digest(config);
    meta.elapsed = Some(start.elapsed());
    meta.warnings = parsed.warnings.clone();
    Ok(table)
}

/// SHA-256 of the canonical TOML form of the config.
pub fn config_digest(config: &AnalysisConfig) -> String {
    hex::encode(Sha256::digest(config.to_toml().as_bytes()))
}

enum TaskError {
    Core(CoreError),
    Cli(CliError),
}

impl From<CoreError> for TaskError {
    fn from(e: CoreError) -> Self {
        TaskError::Core(e)
    }
}

impl From<CliError> for TaskError {
    fn from(e: CliError) -> Self {
        TaskError::Cli(e)
    }
}

type TaskResult = Result<ResultTable, TaskError>;

fn regularization(config: &AnalysisConfig, spectrum: &[f64]) -> Result<DeltaRegularization, TaskError> {
    let kind = match config.regularization.kind {
        RegularizationKind::Gaussian => DeltaKind::Gaussian,
        RegularizationKind::Lorentzian => DeltaKind::Lorentzian,
    };
    let width = match config.regularization.width {
        Some(w) => w,
        None => AUTO_WIDTH_SPACINGS
            * mean_spacing(spectrum).ok_or_else(|| {
                CliError::validation(
                    "regularization.width",
                    "no level spacing to derive a width from; give it explicitly",
                )
            })?,
    };
    Ok(DeltaRegularization::new(kind, width)?)
}

fn mean_spacing(energies: &[f64]) -> Option<f64> {
    let mut e: Vec<f64> = energies.to_vec();
    e.sort_by(f64::total_cmp);
    let scale = e.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    e.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * scale);
    let span = e.last()? - e.first()?;
    (e.len() > 1 && span > 0.0).then(|| span / (e.len() - 1) as f64)
}

fn reservoir(config: &AnalysisConfig) -> Result<ReservoirModel, TaskError> {
    let block = config.reservoir.as_ref().expect("validated");
    if let Some(b) = &block.band {
        return Ok(ReservoirModel::ground_to_band(b.ground, b.low, b.high, b.levels, b.coupling)?);
    }
    let coupling = to_matrix(block.coupling.as_ref().expect("validated"), "reservoir.coupling")?;
    Ok(ReservoirModel::new(
        block.mode_energies.clone().expect("validated"),
        coupling,
        block.initial_distribution.clone().expect("validated"),
        block.cutoff_energy.expect("validated"),
        block.density_exponent.unwrap_or(0.0),
    )?)
}

/// The requested `(from, to)` pair, or every ordered pair of distinct levels.
fn pairs(config: &AnalysisConfig, dim: usize) -> Vec<(usize, usize)> {
    match (config.params.from, config.params.to) {
        (Some(f), Some(t)) => vec![(f, t)],
        _ => (0..dim).flat_map(|f| (0..dim).filter(move |&t| t != f).map(move |t| (f, t))).collect(),
    }
}

fn golden_rule(config: &AnalysisConfig, c: &PhysicalConstants) -> TaskResult {
    let h0 = spectral_decompose(&config.operator("H0", "matrices.H0")?);
    let v = config.operator("V", "matrices.V")?;
    let reg = regularization(config, h0.eigenvalues())?;
    let mut table = ResultTable::new(&["from", "to", "energy_change", "rate", "reason"]);
    for (from, to) in pairs(config, h0.dim()) {
        let r = golden_rule_rate(&h0, &v, from, to, &reg, c)?;
        let de = h0.eigenvalues()[to] - h0.eigenvalues()[from];
        table.push(vec![from.into(), to.into(), de.into(), Cell::rate(&r), Cell::reason(&r)]);
    }
    Ok(table)
}

fn weak_coupling(config: &AnalysisConfig, c: &PhysicalConstants) -> TaskResult {
    let hs = spectral_decompose(&config.operator("HS", "matrices.HS")?);
    let s = config.operator("S", "matrices.S")?;
    let bath = reservoir(config)?;
    let reg = regularization(config, bath.mode_energies())?;
    let mut table = ResultTable::new(&["from", "to", "released", "rate", "reason"]);
    for (from, to) in pairs(config, hs.dim()) {
        let r = weak_coupling_rate(&hs, &s, &bath, from, to, &reg, c)?;
        let released = hs.eigenvalues()[from] - hs.eigenvalues()[to];
        table.push(vec![from.into(), to.into(), released.into(), Cell::rate(&r), Cell::reason(&r)]);
    }
    Ok(table)
}

fn minimal_scan(config: &AnalysisConfig, c: &PhysicalConstants) -> TaskResult {
    let p = &config.params;
    let rows = minimal_decoherence_scan(
        p.splittings.as_ref().expect("validated"),
        p.coupling.expect("validated"),
        p.exponent.expect("validated"),
        c,
    )?;
    let mut table = ResultTable::new(&["splitting", "rate"]);
    for (gap, rate) in rows {
        table.push(vec![gap.into(), rate.into()]);
    }
    Ok(table)
}

fn drive(config: &AnalysisConfig) -> Result<PeriodicDrive, TaskError> {
    let segments = config
        .drive
        .as_ref()
        .expect("validated")
        .iter()
        .map(|s| Ok((config.operator(&s.matrix, "drive")?, s.duration)))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(PeriodicDrive::new(segments)?)
}

fn comb_settings(config: &AnalysisConfig) -> (usize, usize) {
    let n_max = config.params.n_max.unwrap_or(DEFAULT_N_MAX);
    let grid = config.params.grid_points.unwrap_or(16 * (n_max + 1));
    (n_max, grid)
}

fn floquet(config: &AnalysisConfig, c: &PhysicalConstants) -> TaskResult {
    let drive = drive(config)?;
    let s = config.operator("S", "matrices.S")?;
    let (n_max, grid) = comb_settings(config);
    let decomp = floquet_decompose(&drive, grid, c)?;
    let mut table = ResultTable::new(&["from", "to", "n", "frequency", "weight"]);
    for (from, to) in pairs(config, drive.dim()) {
        let spectrum = power_spectrum(&decomp, &s, to, from, n_max, c)?;
        for line in &spectrum.lines {
            table.push(vec![from.into(), to.into(), Cell::Int(line.n), line.frequency.into(), line.weight.into()]);
        }
    }
    let meta = table.metadata.get_or_insert_with(Metadata::default);
    meta.notes.push(format!("quasi_energies: {:?}", decomp.quasi_energies()));
    if decomp.is_degenerate() {
        meta.notes.push("degenerate Floquet phases; comb weights depend on the basis choice".into());
    }
    Ok(table)
}

fn bangbang(config: &AnalysisConfig, c: &PhysicalConstants) -> TaskResult {
    let drive = drive(config)?;
    let s = config.operator("S", "matrices.S")?;
    let bath = reservoir(config)?;
    let reg = regularization(config, bath.mode_energies())?;
    let (n_max, grid) = comb_settings(config);
    let decomp = floquet_decompose(&drive, grid, c)?;
    let mut table = ResultTable::new(&["from", "to", "rate", "reason"]);
    for (from, to) in pairs(config, drive.dim()) {
        let spectrum = power_spectrum(&decomp, &s, to, from, n_max, c)?;
        let r = bangbang_rate(&spectrum, &bath, &reg, c);
        table.push(vec![from.into(), to.into(), Cell::rate(&r), Cell::reason(&r)]);
    }
    Ok(table)
}

/// Generator set plus the qubit count when given in collective form.
fn generators(config: &AnalysisConfig) -> Result<(GeneratorSet, String, Option<usize>), TaskError> {
    let spec = config.params.generators.as_ref().expect("validated");
    match spec {
        GeneratorSpec::Keyword(word) => {
            let n = spec.collective().expect("keyword form")?;
            Ok((collective_generators(n)?, word.clone(), Some(n)))
        }
        GeneratorSpec::Names(names) => {
            let ops = names
                .iter()
                .map(|n| config.operator(n, "params.generators"))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((GeneratorSet::new(ops)?, names.join(";"), None))
        }
    }
}

fn dfs(config: &AnalysisConfig) -> TaskResult {
    let (gens, label, qubits) = generators(config)?;
    let basis = dfs_nullspace(&gens, config.tolerances.nullspace)?;
    let mut table =
        ResultTable::new(&["generators", "hilbert_dim", "N", "dimension", "expected", "max_residual"]);
    let (pairs, expected) = match qubits {
        Some(n) if n % 2 == 0 => {
            let expected = catalan_dimension((n / 2) as u32)?;
            (Cell::Int((n / 2) as i64), Cell::Int(expected as i64))
        }
        _ => (Cell::from("-"), Cell::from("-")),
    };
    table.push(vec![
        Cell::Text(label),
        gens.dim().into(),
        pairs,
        basis.dimension().into(),
        expected,
        basis.max_residual().into(),
    ]);
    Ok(table)
}

fn subsystems(config: &AnalysisConfig) -> TaskResult {
    let (gens, _, _) = generators(config)?;
    let decomposition = subsystem_decomposition(&gens, config.seed)?;
    let mut table = ResultTable::new(&["block", "multiplicity", "dimension", "decoherence_free"]);
    for (a, block) in decomposition.blocks().iter().enumerate() {
        table.push(vec![
            a.into(),
            block.multiplicity.into(),
            block.dimension.into(),
            Cell::flag(block.is_decoherence_free()),
        ]);
    }
    let meta = table.metadata.get_or_insert_with(Metadata::default);
    meta.notes.push(format!("residual: {:e}", decomposition.residual()));
    meta.notes.push(format!("rounds: {}", decomposition.rounds()));
    Ok(table)
}

fn zeno_limit(config: &AnalysisConfig, c: &PhysicalConstants) -> TaskResult {
    let h = config.operator("H", "matrices.H")?;
    let names = config.params.projections.as_ref().expect("validated");
    let projections = names
        .iter()
        .map(|n| config.operator(n, "params.projections"))
        .collect::<Result<Vec<_>, _>>()?;
    let family = ProjectionFamily::new(projections)?;
    let t = config.params.time.unwrap_or(1.0);
    let steps = config.params.steps.clone().unwrap_or_else(|| DEFAULT_STEPS.to_vec());
    let mut table = ResultTable::new(&["projection", "steps", "error"]);
    for (j, name) in names.iter().enumerate() {
        for &n in &steps {
            let cmp = zeno_projected_evolution(&h, &family, j, t, n, c)?;
            table.push(vec![Cell::Text(name.clone()), Cell::Int(n as i64), cmp.error.into()]);
        }
    }
    Ok(table)
}

fn zeno_threshold(config: &AnalysisConfig, c: &PhysicalConstants) -> TaskResult {
    let p = &config.params;
    let dressed = p
        .dressed
        .as_ref()
        .expect("validated")
        .iter()
        .map(|n| config.operator(n, "params.dressed"))
        .collect::<Result<Vec<_>, _>>()?;
    let v = config.operator("V", "matrices.V")?;
    let model = StrongCouplingModel::from_dressed(p.pointer_energies.clone().expect("validated"), &dressed, v)?;
    let r = if config.matrices.contains_key("R") {
        config.operator("R", "matrices.R")?
    } else {
        HermitianOperator::identity(model.reservoir_dim())
    };
    let spectrum: Vec<f64> = (0..model.n_labels())
        .flat_map(|j| model.dressed_reservoir(j).eigenvalues().to_vec())
        .collect();
    let reg = regularization(config, &spectrum)?;
    let mut table = ResultTable::new(&["from", "to", "threshold_gap", "threshold", "rate", "reason"]);
    for (from, to) in pairs(config, model.n_labels()) {
        let rate = strong_coupling_rate(&model, &r, from, to, &reg, c)?;
        let gap = model.threshold_gap(from, to);
        table.push(vec![
            from.into(),
            to.into(),
            gap.into(),
            Cell::flag(gap > 0.0),
            Cell::rate(&rate),
            Cell::reason(&rate),
        ]);
    }
    Ok(table)
}

fn three_level(config: &AnalysisConfig, c: &PhysicalConstants) -> TaskResult {
    let m = config.model_params.as_ref().expect("validated");
    let complex = |v: &[[f64; 2]]| v.iter().map(|z| C64::new(z[0], z[1])).collect::<Vec<_>>();
    let params = ThreeLevelModelParams {
        omega_13: m.omega_13,
        rabi: m.rabi,
        mode_frequencies: m.mode_frequencies.clone(),
        couplings: complex(&m.couplings),
        pump_amplitudes: complex(&m.pump_amplitudes),
        g13: m.g13,
        n_max: m.n_max,
    };
    params.validate().map_err(|e| match e {
        CoreError::TruncationTooLarge(_) => TaskError::Core(e),
        other => TaskError::Cli(CliError::validation("model_params", other.to_string())),
    })?;
    // One dressed-field quantum per mode sets the spacing.
    let quanta: Vec<f64> = m.mode_frequencies.iter().flat_map(|w| [0.0, c.hbar() * w]).collect();
    let reg = regularization(config, &quanta)?;
    let report = three_level_zeno_report(&params, &reg, c)?;
    let mut table = ResultTable::new(&[
        "pump_scale",
        "pump_term",
        "epsilon_minus",
        "threshold_gap",
        "threshold",
        "rate",
        "reason",
    ]);
    for row in &report.ladder {
        table.push(vec![
            row.pump_scale.into(),
            row.pump_term.into(),
            row.epsilon_minus.into(),
            row.threshold_gap.into(),
            Cell::flag(row.threshold),
            Cell::rate(&row.rate),
            Cell::reason(&row.rate),
        ]);
    }
    table.truncation_unconverged = !report.truncation_converged;
    let meta = table.metadata.get_or_insert_with(Metadata::default);
    meta.notes.extend([
        format!("epsilon_plus: {:e}", report.epsilon_plus),
        format!("epsilon_minus: {:e}", report.epsilon_minus),
        format!("ground_plus: {:e}", report.ground_plus),
        format!("ground_minus: {:e}", report.ground_minus),
        format!("ground_two: {:e}", report.ground_two),
        format!("analytic_ground: {:e}", report.analytic_ground),
        format!("sign_assumption: {}", report.sign_assumption),
        format!("threshold: {}", report.threshold),
        format!("monotone: {}", report.monotone),
        format!("truncation_converged: {}", report.truncation_converged),
        format!("truncation_change: {:e}", report.truncation_change),
    ]);
    Ok(table)
}
