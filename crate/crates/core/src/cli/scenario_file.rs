//! JSON scenario files and the `--scenario` source syntax.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolution::{HamiltonianSchedule, Segment};
use crate::numerics::{ComplexMatrix, ComplexVector, HermitianOperator, QuantumState, C64, MAX_DIM, MIN_DIM};
use crate::scenarios::{builtin, Scenario, DEFAULT_STEPS};
use crate::tolerances::Tolerances;

pub const SCHEMA_VERSION: u32 = 1;

fn default_hbar() -> f64 {
    1.0
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

/// On-disk scenario. Complex numbers are `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentFile>>,
    pub initial_state: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentFile {
    pub hamiltonian: Vec<Vec<[f64; 2]>>,
    pub duration: f64,
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Validation { field: field.to_string(), message: message.into() }
}

fn pairs(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn matrix(field: &str, rows: &[Vec<[f64; 2]>], dim: usize, tol: &Tolerances) -> Result<HermitianOperator> {
    if rows.len() != dim {
        return Err(invalid(field, format!("expected {dim} rows, found {}", rows.len())));
    }
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(invalid(field, format!("row {i} has {} entries, expected {dim}", row.len())));
        }
        for (j, [re, im]) in row.iter().enumerate() {
            if !(re.is_finite() && im.is_finite()) {
                return Err(invalid(field, format!("entry ({i}, {j}) is not finite")));
            }
            m[(i, j)] = C64::new(*re, *im);
        }
    }
    HermitianOperator::new_with(m, tol).map_err(|e| invalid(field, e.to_string()))
}

fn finite_positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the compact canonical serialization.
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("scenario serializes")))
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let segs = s.schedule.segments();
        let (hamiltonian, segments, t_final) = if segs.len() == 1 {
            (Some(pairs(segs[0].hamiltonian.matrix())), None, Some(s.t_final))
        } else {
            let list = segs
                .iter()
                .map(|seg| SegmentFile { hamiltonian: pairs(seg.hamiltonian.matrix()), duration: seg.duration })
                .collect();
            (None, Some(list), None)
        };
        Self {
            schema: SCHEMA_VERSION,
            name: Some(s.name.clone()),
            hbar: s.schedule.hbar(),
            dimension: s.psi0.dim(),
            hamiltonian,
            segments,
            initial_state: s.psi0.amplitudes().iter().map(|c| [c.re, c.im]).collect(),
            t_final,
            steps: s.default_steps,
        }
    }

    pub fn to_scenario(&self, fallback_name: &str) -> Result<Scenario> {
        let tol = Tolerances::default();
        if self.schema != SCHEMA_VERSION {
            return Err(invalid("schema", format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema)));
        }
        let dim = self.dimension;
        if !(MIN_DIM..=MAX_DIM).contains(&dim) {
            return Err(invalid("dimension", format!("{dim} outside {MIN_DIM}..={MAX_DIM}")));
        }
        let hbar = finite_positive("hbar", self.hbar)?;
        if self.initial_state.len() != dim {
            return Err(invalid(
                "initial_state",
                format!("expected {dim} amplitudes, found {}", self.initial_state.len()),
            ));
        }
        if self.initial_state.iter().any(|[re, im]| !(re.is_finite() && im.is_finite())) {
            return Err(invalid("initial_state", "amplitudes must be finite"));
        }
        let amps = ComplexVector::from_iterator(dim, self.initial_state.iter().map(|[re, im]| C64::new(*re, *im)));
        let psi0 = QuantumState::new_with(amps, &tol).map_err(|e| invalid("initial_state", e.to_string()))?;
        let segments = match (&self.hamiltonian, &self.segments) {
            (Some(_), Some(_)) => return Err(invalid("segments", "give either hamiltonian or segments, not both")),
            (None, None) => return Err(invalid("hamiltonian", "missing: give hamiltonian or segments")),
            (Some(h), None) => {
                let Some(t) = self.t_final else {
                    return Err(invalid("t_final", "required with a single hamiltonian"));
                };
                vec![Segment {
                    hamiltonian: matrix("hamiltonian", h, dim, &tol)?,
                    duration: finite_positive("t_final", t)?,
                }]
            }
            (None, Some(list)) => {
                if list.is_empty() {
                    return Err(invalid("segments", "must not be empty"));
                }
                list.iter()
                    .enumerate()
                    .map(|(i, seg)| {
                        Ok(Segment {
                            hamiltonian: matrix(&format!("segments[{i}].hamiltonian"), &seg.hamiltonian, dim, &tol)?,
                            duration: finite_positive(&format!("segments[{i}].duration"), seg.duration)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let schedule = HamiltonianSchedule::new(segments, hbar).map_err(|e| invalid("segments", e.to_string()))?;
        let total = schedule.total_duration();
        if let (Some(t), Some(_)) = (self.t_final, &self.segments) {
            if (t - total).abs() > 1e-12 * total.max(1.0) {
                return Err(invalid("t_final", format!("{t} differs from the summed segment durations {total}")));
            }
        }
        if self.steps < crate::evolution::MIN_STEPS {
            return Err(invalid("steps", format!("{} below the minimum {}", self.steps, crate::evolution::MIN_STEPS)));
        }
        Ok(Scenario {
            name: self.name.clone().unwrap_or_else(|| fallback_name.to_string()),
            description: "scenario file".into(),
            schedule,
            psi0,
            t_final: total,
            default_steps: self.steps,
            oracle: None,
        })
    }
}

/// Where a scenario comes from: `builtin:NAME` or a file path.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    Builtin(String),
    File(PathBuf),
}

impl std::str::FromStr for ScenarioSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.strip_prefix("builtin:") {
            Some("") => Err("empty builtin name".into()),
            Some(name) => Ok(Self::Builtin(name.to_string())),
            None if s.is_empty() => Err("empty scenario path".into()),
            None => Ok(Self::File(PathBuf::from(s))),
        }
    }
}

/// A resolved scenario with the hash of its canonical file form.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub sha256: String,
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into())
}

pub fn load(source: &ScenarioSource) -> Result<LoadedScenario> {
    match source {
        ScenarioSource::Builtin(name) => {
            let scenario = builtin(name)?;
            let sha256 = ScenarioFile::from_scenario(&scenario).sha256();
            Ok(LoadedScenario { scenario, sha256 })
        }
        ScenarioSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid("scenario", format!("cannot read {}: {e}", path.display())))?;
            let file = ScenarioFile::parse(&text)?;
            let scenario = file.to_scenario(&file_stem(path))?;
            Ok(LoadedScenario { scenario, sha256: file.sha256() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::catalog;

    const QUBIT: &str = r#"{
        "schema": 1,
        "dimension": 2,
        "hamiltonian": [[[0.5, 0], [0, 0]], [[0, 0], [-0.5, 0]]],
        "initial_state": [[0.8, 0], [0.6, 0]],
        "t_final": 6.283185307179586
    }"#;

    #[test]
    fn parses_minimal_file() {
        let f = ScenarioFile::parse(QUBIT).unwrap();
        assert_eq!(f.hbar, 1.0);
        assert_eq!(f.steps, DEFAULT_STEPS);
        let s = f.to_scenario("qubit").unwrap();
        assert_eq!(s.name, "qubit");
        assert_eq!(s.psi0.dim(), 2);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = QUBIT.replace("\"schema\": 1,", "\"schema\": 1, \"colour\": 3,");
        let err = ScenarioFile::parse(&text).unwrap_err();
        assert!(matches!(&err, Error::Parse(m) if m.contains("colour")), "{err}");
    }

    #[test]
    fn validation_names_fields() {
        let field_of = |text: &str| match ScenarioFile::parse(text).unwrap().to_scenario("x").unwrap_err() {
            Error::Validation { field, .. } => field,
            e => panic!("{e}"),
        };
        assert_eq!(field_of(&QUBIT.replace("[0.6, 0]", "[0.7, 0]")), "initial_state");
        assert_eq!(field_of(&QUBIT.replace("[[0, 0], [-0.5, 0]]", "[[0, 1], [-0.5, 0]]")), "hamiltonian");
        assert_eq!(field_of(&QUBIT.replace("\"dimension\": 2", "\"dimension\": 3")), "initial_state");
        assert_eq!(field_of(&QUBIT.replace("\"schema\": 1", "\"schema\": 2")), "schema");
        assert_eq!(field_of(&QUBIT.replace(",\n        \"t_final\": 6.283185307179586", "")), "t_final");
    }

    #[test]
    fn builtins_round_trip_through_files() {
        for s in catalog() {
            let file = ScenarioFile::from_scenario(&s);
            let back = ScenarioFile::parse(&file.to_json()).unwrap();
            assert_eq!(back, file, "{}", s.name);
            let rebuilt = back.to_scenario("x").unwrap();
            assert_eq!(rebuilt.schedule, s.schedule);
            assert_eq!(rebuilt.psi0, s.psi0);
            assert_eq!(rebuilt.name, s.name);
        }
    }

    #[test]
    fn source_syntax() {
        assert_eq!("builtin:eigenstate".parse(), Ok(ScenarioSource::Builtin("eigenstate".into())));
        assert_eq!("a/b.json".parse(), Ok(ScenarioSource::File("a/b.json".into())));
        assert!("builtin:".parse::<ScenarioSource>().is_err());
    }
}
