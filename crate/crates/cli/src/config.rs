//! Configuration documents: parsing, validation and ingestion of matrices.

use std::collections::BTreeMap;

use decoherence_core::operator::{CMatrix, HermitianOperator, C64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Corrections above this size are reported when a matrix is symmetrized.
pub const SYMMETRIZATION_WARNING: f64 = 1e-9;

/// A dense complex matrix written row by row as `[re, im]` pairs.
pub type MatrixEntries = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    GoldenRule,
    WeakCoupling,
    MinimalScan,
    Floquet,
    Bangbang,
    Dfs,
    Subsystems,
    ZenoLimit,
    ZenoThreshold,
    ThreeLevel,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::GoldenRule => "golden-rule",
            Task::WeakCoupling => "weak-coupling",
            Task::MinimalScan => "minimal-scan",
            Task::Floquet => "floquet",
            Task::Bangbang => "bangbang",
            Task::Dfs => "dfs",
            Task::Subsystems => "subsystems",
            Task::ZenoLimit => "zeno-limit",
            Task::ZenoThreshold => "zeno-threshold",
            Task::ThreeLevel => "three-level",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(default = "one")]
    pub hbar: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { hbar: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularizationKind {
    #[default]
    Gaussian,
    Lorentzian,
}

/// Delta regularization. A missing width means four mean level spacings of
/// the spectrum the task works on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regularization {
    #[serde(default)]
    pub kind: RegularizationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

/// Uniform band of levels coupled to a single occupied ground level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSpec {
    #[serde(default)]
    pub ground: f64,
    pub low: f64,
    pub high: f64,
    pub levels: usize,
    pub coupling: f64,
}

/// Either an explicit discretized reservoir or the `band` shorthand.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_energies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<MatrixEntries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_distribution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub matrix: String,
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub omega_13: f64,
    pub rabi: f64,
    pub mode_frequencies: Vec<f64>,
    pub couplings: Vec<[f64; 2]>,
    pub pump_amplitudes: Vec<[f64; 2]>,
    pub g13: f64,
    pub n_max: usize,
}

/// Generators given as matrix names or as `"collective(n)"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    Keyword(String),
    Names(Vec<String>),
}

impl GeneratorSpec {
    /// Qubit count of the `collective(n)` form.
    pub fn collective(&self) -> Option<Result<usize, CliError>> {
        let GeneratorSpec::Keyword(word) = self else { return None };
        let inner = word
            .trim()
            .strip_prefix("collective(")
            .and_then(|rest| rest.strip_suffix(')'));
        Some(match inner.map(|n| n.trim().parse::<usize>()) {
            Some(Ok(n)) => Ok(n),
            _ => Err(CliError::validation(
                "params.generators",
                format!("expected \"collective(<n_qubits>)\" or a list of matrix names, got {word:?}"),
            )),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nullspace: Option<f64>,
}

/// Task knobs. Which ones apply depends on the task.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splittings: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projections: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pointer_energies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dressed: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub regularization: Regularization,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub matrices: BTreeMap<String, MatrixEntries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reservoir: Option<ReservoirBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<Vec<Segment>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_params: Option<ModelParams>,
}

/// A validated configuration together with the ingestion warnings it raised.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedConfig {
    pub config: AnalysisConfig,
    pub warnings: Vec<String>,
}

/// Parses and validates a TOML document. Matrices are replaced by their
/// Hermitian parts.
pub fn parse_config(text: &str) -> Result<ParsedConfig, CliError> {
    let mut config: AnalysisConfig =
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut warnings = Vec::new();
    let names: Vec<String> = config.matrices.keys().cloned().collect();
    for name in names {
        let key = format!("matrices.{name}");
        let entries = config.matrices.get_mut(&name).expect("key listed above");
        symmetrize_entries(entries, &key, &mut warnings)?;
    }
    if let Some(coupling) = config.reservoir.as_mut().and_then(|r| r.coupling.as_mut()) {
        symmetrize_entries(coupling, "reservoir.coupling", &mut warnings)?;
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    config.validate()?;
    Ok(ParsedConfig { config, warnings })
}

fn symmetrize_entries(
    entries: &mut MatrixEntries,
    key: &str,
    warnings: &mut Vec<String>,
) -> Result<(), CliError> {
    let m = to_matrix(entries, key)?;
    let (op, correction) = HermitianOperator::symmetrized(m)
        .map_err(|e| CliError::validation(key, e.to_string()))?;
    if correction > SYMMETRIZATION_WARNING {
        warnings.push(format!("{key} symmetrized, correction {correction:.3e}"));
    }
    *entries = from_matrix(op.matrix());
    Ok(())
}

/// Checks that `entries` is a nonempty square array of finite pairs.
pub fn to_matrix(entries: &MatrixEntries, key: &str) -> Result<CMatrix, CliError> {
    let n = entries.len();
    if n == 0 {
        return Err(CliError::validation(key, "matrix is empty"));
    }
    if let Some((i, row)) = entries.iter().enumerate().find(|(_, row)| row.len() != n) {
        return Err(CliError::validation(
            key,
            format!("row {i} has {} entries, expected {n} for a square matrix", row.len()),
        ));
    }
    if entries.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(CliError::validation(key, "matrix has non-finite entries"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| C64::new(entries[i][j][0], entries[i][j][1])))
}

pub fn from_matrix(m: &CMatrix) -> MatrixEntries {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

impl AnalysisConfig {
    /// Serializes back to a TOML document that parses to an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config values are always representable")
    }

    /// A named matrix as a Hermitian operator. Missing names are reported
    /// against `key`, the config key that referred to them.
    pub fn operator(&self, name: &str, key: &str) -> Result<HermitianOperator, CliError> {
        let entries = self.matrices.get(name).ok_or_else(|| {
            CliError::validation(key, format!("matrix {name:?} is not defined under [matrices]"))
        })?;
        let m = to_matrix(entries, &format!("matrices.{name}"))?;
        HermitianOperator::new(m).map_err(|e| CliError::validation(format!("matrices.{name}"), e.to_string()))
    }

    pub fn matrix_dim(&self, name: &str) -> Option<usize> {
        self.matrices.get(name).map(|m| m.len())
    }

    fn require_matrix(&self, name: &str) -> Result<usize, CliError> {
        self.matrix_dim(name).ok_or_else(|| {
            CliError::validation(
                format!("matrices.{name}"),
                format!("task {} needs a matrix named {name}", self.task.name()),
            )
        })
    }

    fn require_same_dim(&self, a: &str, b: &str) -> Result<usize, CliError> {
        let da = self.require_matrix(a)?;
        let db = self.require_matrix(b)?;
        if da != db {
            return Err(CliError::Dimension { first: a.into(), first_dim: da, second: b.into(), second_dim: db });
        }
        Ok(da)
    }

    fn require_all_same(&self, names: &[String], key: &str) -> Result<usize, CliError> {
        let first = names
            .first()
            .ok_or_else(|| CliError::validation(key, "list must not be empty"))?;
        let dim = self.matrix_dim(first).ok_or_else(|| {
            CliError::validation(key, format!("matrix {first:?} is not defined under [matrices]"))
        })?;
        for name in &names[1..] {
            let d = self.matrix_dim(name).ok_or_else(|| {
                CliError::validation(key, format!("matrix {name:?} is not defined under [matrices]"))
            })?;
            if d != dim {
                return Err(CliError::Dimension { first: first.clone(), first_dim: dim, second: name.clone(), second_dim: d });
            }
        }
        Ok(dim)
    }

    fn require_reservoir(&self) -> Result<&ReservoirBlock, CliError> {
        let block = self.reservoir.as_ref().ok_or_else(|| {
            CliError::validation("reservoir", format!("task {} needs a [reservoir] block", self.task.name()))
        })?;
        let explicit = [
            block.mode_energies.is_some(),
            block.coupling.is_some(),
            block.initial_distribution.is_some(),
            block.cutoff_energy.is_some(),
        ];
        match (&block.band, explicit.iter().any(|&x| x)) {
            (Some(_), true) => Err(CliError::validation(
                "reservoir.band",
                "give either band or mode_energies/coupling/initial_distribution/cutoff_energy, not both",
            )),
            (None, _) if !explicit.iter().all(|&x| x) => Err(CliError::validation(
                "reservoir",
                "needs band, or all of mode_energies, coupling, initial_distribution and cutoff_energy",
            )),
            _ => Ok(block),
        }
    }

    fn require_drive(&self) -> Result<usize, CliError> {
        let drive = self.drive.as_ref().ok_or_else(|| {
            CliError::validation("drive", format!("task {} needs [[drive]] segments", self.task.name()))
        })?;
        let names: Vec<String> = drive.iter().map(|s| s.matrix.clone()).collect();
        self.require_all_same(&names, "drive")
    }

    fn require_param<T>(&self, value: &Option<T>, key: &str) -> Result<(), CliError> {
        match value {
            Some(_) => Ok(()),
            None => Err(CliError::validation(
                format!("params.{key}"),
                format!("task {} needs params.{key}", self.task.name()),
            )),
        }
    }

    /// Checks that every block the task reads is present and that matrix
    /// dimensions agree.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.constants.hbar.is_finite() && self.constants.hbar > 0.0) {
            return Err(CliError::validation("constants.hbar", "must be positive"));
        }
        if let Some(w) = self.regularization.width {
            if !(w.is_finite() && w > 0.0) {
                return Err(CliError::validation("regularization.width", "must be positive"));
            }
        }
        let p = &self.params;
        if p.from.is_some() != p.to.is_some() {
            return Err(CliError::validation("params.from", "params.from and params.to go together"));
        }
        let dim = match self.task {
            Task::GoldenRule => Some(self.require_same_dim("H0", "V")?),
            Task::WeakCoupling => {
                self.require_reservoir()?;
                Some(self.require_same_dim("HS", "S")?)
            }
            Task::MinimalScan => {
                self.require_param(&p.splittings, "splittings")?;
                self.require_param(&p.coupling, "coupling")?;
                self.require_param(&p.exponent, "exponent")?;
                None
            }
            Task::Floquet | Task::Bangbang => {
                if self.task == Task::Bangbang {
                    self.require_reservoir()?;
                }
                let d = self.require_drive()?;
                let ds = self.require_matrix("S")?;
                if d != ds {
                    let first = self.drive.as_ref().expect("checked")[0].matrix.clone();
                    return Err(CliError::Dimension { first, first_dim: d, second: "S".into(), second_dim: ds });
                }
                Some(d)
            }
            Task::Dfs | Task::Subsystems => {
                self.require_param(&p.generators, "generators")?;
                match p.generators.as_ref().expect("checked") {
                    GeneratorSpec::Names(names) => {
                        self.require_all_same(names, "params.generators")?;
                    }
                    spec => {
                        spec.collective().expect("keyword form")?;
                    }
                }
                None
            }
            Task::ZenoLimit => {
                self.require_param(&p.projections, "projections")?;
                let d = self.require_matrix("H")?;
                let names = p.projections.as_ref().expect("checked");
                let dp = self.require_all_same(names, "params.projections")?;
                if d != dp {
                    return Err(CliError::Dimension { first: "H".into(), first_dim: d, second: names[0].clone(), second_dim: dp });
                }
                Some(d)
            }
            Task::ZenoThreshold => {
                self.require_param(&p.pointer_energies, "pointer_energies")?;
                self.require_param(&p.dressed, "dressed")?;
                let dressed = p.dressed.as_ref().expect("checked");
                let labels = p.pointer_energies.as_ref().expect("checked").len();
                if dressed.len() != labels {
                    return Err(CliError::validation(
                        "params.dressed",
                        format!("{} dressed reservoirs for {labels} pointer energies", dressed.len()),
                    ));
                }
                let dr = self.require_all_same(dressed, "params.dressed")?;
                let dv = self.require_matrix("V")?;
                if dv != labels {
                    return Err(CliError::validation(
                        "matrices.V",
                        format!("V acts on the {labels} pointer labels but is {dv}x{dv}"),
                    ));
                }
                if self.matrices.contains_key("R") {
                    let d = self.require_matrix("R")?;
                    if d != dr {
                        return Err(CliError::Dimension { first: "R".into(), first_dim: d, second: dressed[0].clone(), second_dim: dr });
                    }
                }
                Some(labels)
            }
            Task::ThreeLevel => {
                if self.model_params.is_none() {
                    return Err(CliError::validation("model_params", "task three-level needs a [model_params] block"));
                }
                None
            }
        };
        if let (Some(d), Some(from), Some(to)) = (dim, p.from, p.to) {
            for (key, idx) in [("params.from", from), ("params.to", to)] {
                if idx >= d {
                    return Err(CliError::validation(key, format!("index {idx} out of range for dimension {d}")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
task = "golden-rule"

[matrices]
H0 = [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
V = [[[0.0, 0.0], [0.1, 0.0]], [[0.1, 0.0], [0.0, 0.0]]]
"#;

    #[test]
    fn minimal_golden_rule_gets_defaults() {
        let parsed = parse_config(MINIMAL).unwrap();
        let c = &parsed.config;
        assert_eq!(c.task, Task::GoldenRule);
        assert_eq!(c.constants.hbar, 1.0);
        assert_eq!(c.regularization.kind, RegularizationKind::Gaussian);
        assert_eq!(c.regularization.width, None);
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn parse_error_reports_position() {
        let err = parse_config("task = \"golden-rule\"\n[matrices\n").unwrap_err();
        assert!(matches!(err, CliError::Parse(_)));
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn unknown_task_is_rejected() {
        let err = parse_config("task = \"teleport\"\n").unwrap_err();
        assert!(err.to_string().contains("task"), "{err}");
    }

    #[test]
    fn ragged_matrix_names_the_key() {
        let text = "task = \"golden-rule\"\n[matrices]\nH0 = [[[0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]\nV = [[[1.0, 0.0]]]\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("matrices.H0"), "{err}");
    }

    #[test]
    fn collective_keyword() {
        let spec = GeneratorSpec::Keyword("collective(4)".into());
        assert_eq!(spec.collective().unwrap().unwrap(), 4);
        let bad = GeneratorSpec::Keyword("collective(four)".into());
        assert!(bad.collective().unwrap().is_err());
        assert!(GeneratorSpec::Names(vec!["A".into()]).collective().is_none());
    }
}
