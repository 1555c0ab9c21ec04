//! JSON state files.

use std::path::Path;

use kaleidocycle_core::{validate_state, ClosureMode, KaleidocycleState, Vec3};
use kaleidocycle_core::model::ValidationSummary;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::atomic::write_atomic;
use crate::error::{IoError, Result};

pub const SCHEMA_VERSION: u64 = 1;

/// Defects above this are reported as a validation warning on load.
pub const VALIDATION_TOL: f64 = 1e-9;

const GAUGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    pub schema_version: u64,
    pub n: usize,
    #[serde(with = "mode_tag")]
    pub mode: ClosureMode,
    pub c: f64,
    pub b: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Map<String, Value>>,
}

mod mode_tag {
    use kaleidocycle_core::ClosureMode;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(mode: &ClosureMode, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(mode.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ClosureMode, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|_| D::Error::custom(format!("unknown mode `{s}`")))
    }
}

impl StateDocument {
    pub fn from_state(state: &KaleidocycleState, metadata: Option<Map<String, Value>>) -> Self {
        StateDocument {
            schema_version: SCHEMA_VERSION,
            n: state.n(),
            mode: state.mode(),
            c: state.c(),
            b: state.hinges().iter().map(|v| [v.x, v.y, v.z]).collect(),
            metadata,
        }
    }

    pub fn to_state(&self) -> Result<KaleidocycleState> {
        if self.b.len() != self.n {
            return Err(kaleidocycle_core::Error::InvalidParameter(format!(
                "n = {} but b has {} rows",
                self.n,
                self.b.len()
            ))
            .into());
        }
        let b = self.b.iter().map(|r| Vec3::new(r[0], r[1], r[2])).collect();
        Ok(KaleidocycleState::new(self.mode, self.c, b)?)
    }

    /// Pretty JSON with one line per hinge row.
    pub fn to_json(&self) -> String {
        let num = |v: f64| serde_json::to_string(&v).expect("finite numbers serialise");
        let mut s = String::from("{\n");
        s += &format!("  \"schema_version\": {},\n", self.schema_version);
        s += &format!("  \"n\": {},\n", self.n);
        s += &format!("  \"mode\": \"{}\",\n", self.mode.as_str());
        s += &format!("  \"c\": {},\n", num(self.c));
        s += "  \"b\": [\n";
        for (i, r) in self.b.iter().enumerate() {
            let sep = if i + 1 == self.b.len() { "" } else { "," };
            s += &format!("    [{}, {}, {}]{sep}\n", num(r[0]), num(r[1]), num(r[2]));
        }
        s += "  ]";
        if let Some(meta) = &self.metadata {
            let body = serde_json::to_string_pretty(meta).expect("json values serialise");
            s += ",\n  \"metadata\": ";
            s += &body.replace('\n', "\n  ");
        }
        s += "\n}\n";
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        // untyped pass first so a newer schema is reported as such rather
        // than as whatever field it happens to break
        let raw: Value = serde_json::from_str(text).map_err(parse_error)?;
        if let Some(v) = raw.get("schema_version").and_then(Value::as_u64) {
            if v != SCHEMA_VERSION {
                return Err(IoError::SchemaVersion { found: v, supported: SCHEMA_VERSION });
            }
        }
        serde_json::from_str(text).map_err(parse_error)
    }
}

fn parse_error(e: serde_json::Error) -> IoError {
    let message = e.to_string();
    // serde_json appends " at line L column C"; keep only the description
    let message = match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message,
    };
    IoError::Parse { line: e.line(), column: e.column(), message }
}

/// A loaded document with its checked state.
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub document: StateDocument,
    pub state: KaleidocycleState,
    pub validation: ValidationSummary,
    /// Set when the state misses the constraints by more than [`VALIDATION_TOL`].
    pub warning: Option<String>,
    /// Set when the hinges are not in the solver's gauge.
    pub gauge_note: Option<String>,
}

pub fn read_state(text: &str) -> Result<LoadReport> {
    let document = StateDocument::from_json(text)?;
    let state = document.to_state()?;
    let validation = validate_state(&state, VALIDATION_TOL);
    let warning = (!validation.valid).then(|| {
        format!(
            "state misses the constraints: unit norm {:e}, twist {:e}, closure {:e}",
            validation.unit_norm_defect, validation.twist_defect, validation.closure_defect
        )
    });
    let gauge_note = gauge_note(&state);
    Ok(LoadReport { document, state, validation, warning, gauge_note })
}

pub fn load_state(path: &Path) -> Result<LoadReport> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    read_state(&text)
}

pub fn save_state(path: &Path, document: &StateDocument) -> Result<()> {
    write_atomic(path, document.to_json().as_bytes())
}

fn gauge_note(state: &KaleidocycleState) -> Option<String> {
    let b0 = state.hinge(0);
    let b1 = state.hinge(1);
    let first = (b0 - Vec3::z()).norm() <= GAUGE_TOL;
    let second = b1.x.abs() <= GAUGE_TOL && b1.y >= 0.0;
    if first && second {
        None
    } else {
        Some("hinges are not in the solver gauge (b_0 = z, b_1 in the yz half-plane); solvers will re-gauge".into())
    }
}
