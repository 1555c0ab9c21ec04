//! Run settings: profile defaults overridden by an optional `key = value`
//! (TOML) config file.

use std::path::Path;
use std::str::FromStr;

use kaleidocycle_core::extremal::ExtremalOptions;
use kaleidocycle_core::{SolverSettings, TraceSettings};
use serde::Deserialize;

use crate::error::{IoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    /// Looser tolerances and fewer restarts, for smoke runs.
    Quick,
    /// Library defaults.
    #[default]
    Strict,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "quick" => Ok(Profile::Quick),
            "strict" => Ok(Profile::Strict),
            other => Err(format!("unknown profile `{other}` (expected quick or strict)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub solver: SolverSettings,
    pub extremal: ExtremalOptions,
    pub trace: TraceSettings,
}

impl RunSettings {
    pub fn for_profile(profile: Profile) -> Self {
        let mut s = RunSettings {
            solver: SolverSettings::default(),
            extremal: ExtremalOptions::default(),
            trace: TraceSettings::default(),
        };
        // long enough that extreme loops close well inside the step budget
        s.trace.step = 0.03;
        if profile == Profile::Quick {
            s.solver.tol_residual = 1e-10;
            s.solver.max_iters = 100;
            s.solver.num_restarts = 8;
            s.extremal.tol_c = 1e-5;
            s.extremal.polish = false;
            s.trace.step = 0.05;
        }
        s
    }

    pub fn apply(&mut self, file: &ConfigFile) {
        let s = &mut self.solver;
        set(&mut s.tol_residual, file.tol_residual);
        set(&mut s.max_iters, file.max_iters);
        set(&mut s.num_restarts, file.num_restarts);
        set(&mut s.damping, file.damping);
        set(&mut s.seed, file.seed);
        set(&mut s.perturbation, file.perturbation);
        set(&mut s.svd_cutoff, file.svd_cutoff);
        set(&mut self.extremal.tol_c, file.tol_c);
        set(&mut self.extremal.polish, file.polish);
        set(&mut self.trace.step, file.step);
        set(&mut self.trace.max_steps, file.max_steps);
    }
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Recognised config keys. Anything else is an error.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub tol_residual: Option<f64>,
    pub max_iters: Option<usize>,
    pub num_restarts: Option<usize>,
    pub damping: Option<f64>,
    pub seed: Option<u64>,
    pub perturbation: Option<f64>,
    pub svd_cutoff: Option<f64>,
    pub tol_c: Option<f64>,
    pub polish: Option<bool>,
    pub step: Option<f64>,
    pub max_steps: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = match e.span() {
                Some(span) => line_column(text, span.start),
                None => (0, 0),
            };
            IoError::Parse { line, column, message: e.message().to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Self::parse(&text)
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}
