#![allow(dead_code)]

use kaleidocycle_core::{solve_slice, ClosureMode, ConstraintSystem, KaleidocycleState, SolverSettings};

pub fn solved(n: usize, mode: ClosureMode, c: f64) -> KaleidocycleState {
    let sys = ConstraintSystem::new(n, mode, c).unwrap();
    let rep = solve_slice(&sys, &SolverSettings::default());
    let summary = rep.summary();
    rep.state.unwrap_or_else(|| panic!("n={n} {mode} c={c}: {summary}"))
}
