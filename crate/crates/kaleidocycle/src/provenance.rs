use kaleidocycle_core::SolverSettings;
use serde_json::{json, Map, Value};

/// What produced an output file. Contains nothing time- or host-dependent,
/// so equal inputs give byte-identical files.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub generator: String,
    pub command: Vec<String>,
    pub seed: u64,
    pub tol_residual: f64,
    pub max_iters: usize,
    pub num_restarts: usize,
}

impl Provenance {
    pub fn new(command: Vec<String>, settings: &SolverSettings) -> Self {
        Provenance {
            generator: concat!("kaleidocycle ", env!("CARGO_PKG_VERSION")).to_string(),
            command,
            seed: settings.seed,
            tol_residual: settings.tol_residual,
            max_iters: settings.max_iters,
            num_restarts: settings.num_restarts,
        }
    }

    pub fn to_map(&self) -> Map<String, Value> {
        let v = json!({
            "generator": self.generator,
            "command": self.command,
            "seed": self.seed,
            "tol_residual": self.tol_residual,
            "max_iters": self.max_iters,
            "num_restarts": self.num_restarts,
        });
        match v {
            Value::Object(m) => m,
            _ => unreachable!(),
        }
    }

    /// `key: value` lines for formats that only carry comments.
    pub fn lines(&self) -> Vec<String> {
        vec![
            format!("generator: {}", self.generator),
            format!("command: {}", self.command.join(" ")),
            format!("seed: {}", self.seed),
            format!("tol_residual: {:e}", self.tol_residual),
            format!("max_iters: {}", self.max_iters),
            format!("num_restarts: {}", self.num_restarts),
        ]
    }
}
