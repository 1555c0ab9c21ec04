//! Projection onto a fixed-`c` slice of the configuration space.
//!
//! Steps are minimum-norm least-squares Gauss–Newton steps computed from a
//! truncated SVD, so rank-deficient Jacobians (the boundary slices are
//! singular everywhere) are handled without special casing. Each step is
//! halved until `|r|^2` strictly decreases.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::{ConstraintSystem, GaugedVariables, InitStrategy};
use crate::linalg::{norm_sq, pinv_solve};
use crate::model::{gamma_from_b, KaleidocycleState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Converged when the Euclidean residual norm is at most this.
    pub tol_residual: f64,
    pub max_iters: usize,
    /// Initial guesses tried by [`solve_slice`].
    pub num_restarts: usize,
    /// First trial step length of the line search (1 = full Gauss–Newton step).
    pub damping: f64,
    pub seed: u64,
    /// Noise amplitude of the first perturbed restart; later ones scale up linearly.
    pub perturbation: f64,
    /// Singular values below `svd_cutoff * sigma_max` are dropped.
    pub svd_cutoff: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol_residual: 1e-12,
            max_iters: 200,
            num_restarts: 32,
            damping: 1.0,
            seed: 0,
            perturbation: 0.1,
            svd_cutoff: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    NotConverged,
    /// Iterates left the unit ball region, or converged onto a folded
    /// configuration in which two hinge centres coincide.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Present iff converged.
    pub state: Option<KaleidocycleState>,
    /// Final (best) iterate, useful for warm starts and diagnostics.
    pub variables: GaugedVariables,
    pub residual_norm: f64,
    pub iterations: usize,
    pub restarts_used: usize,
    pub status: SolveStatus,
    /// Residual norm after each accepted step, starting with the initial one.
    pub history: Vec<f64>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// One-line description for logs and error messages.
    pub fn summary(&self) -> alloc::string::String {
        format!(
            "{:?} after {} iterations ({} restarts), residual {:e}",
            self.status, self.iterations, self.restarts_used, self.residual_norm
        )
    }
}

const MAX_HALVINGS: usize = 40;
const SLOW_RATIO: f64 = 0.995;
const SLOW_LIMIT: usize = 30;
const BLOW_UP: f64 = 1e3;

/// Damped Gauss–Newton from `x0` onto the solution set of `system`.
pub fn project_to_manifold(
    system: &ConstraintSystem,
    x0: &GaugedVariables,
    settings: &SolverSettings,
) -> SolveReport {
    let mut x = x0.clone();
    let mut r = system.residual(&x);
    let mut f = norm_sq(&r);
    let mut history = Vec::with_capacity(settings.max_iters + 1);
    history.push(libm::sqrt(f));
    let mut iterations = 0;
    let mut slow = 0;
    let mut status = SolveStatus::NotConverged;

    while iterations < settings.max_iters {
        if libm::sqrt(f) <= settings.tol_residual {
            break;
        }
        let jac = system.jacobian(&x);
        let step = -pinv_solve(&jac, &r, settings.svd_cutoff);
        let mut t = settings.damping;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = GaugedVariables { x: &x.x + &step * t };
            let r_trial = system.residual(&trial);
            let f_trial = norm_sq(&r_trial);
            if f_trial < f {
                accepted = Some((trial, r_trial, f_trial));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, r_new, f_new)) = accepted else {
            break;
        };
        iterations += 1;
        if !x_new.x.iter().all(|v| v.is_finite() && v.abs() < BLOW_UP) {
            status = SolveStatus::Degenerate;
            break;
        }
        if libm::sqrt(f_new) > SLOW_RATIO * libm::sqrt(f) {
            slow += 1;
        } else {
            slow = 0;
        }
        x = x_new;
        r = r_new;
        f = f_new;
        history.push(libm::sqrt(f));
        if slow >= SLOW_LIMIT {
            break;
        }
    }

    let residual_norm = libm::sqrt(f);
    let mut state = None;
    if status != SolveStatus::Degenerate && residual_norm <= settings.tol_residual {
        let candidate = system.state(&x);
        if is_folded(&candidate) {
            status = SolveStatus::Degenerate;
        } else {
            status = SolveStatus::Converged;
            state = Some(candidate);
        }
    }
    SolveReport { state, variables: x, residual_norm, iterations, restarts_used: 1, status, history }
}

/// True when two hinge centres coincide, i.e. neighbouring tetrahedra are
/// folded flat onto each other.
fn is_folded(state: &KaleidocycleState) -> bool {
    let Ok(line) = gamma_from_b(state, Default::default()) else {
        return true;
    };
    let scale = libm::sqrt(1.0 - state.c() * state.c());
    let pts = line.points();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if (pts[i] - pts[j]).norm() < 1e-8 * scale {
                return true;
            }
        }
    }
    false
}

/// Strategy used for restart `k` of [`solve_slice`]: symmetric first, then
/// perturbed-symmetric with growing amplitude, then random.
pub fn restart_strategy(k: usize, settings: &SolverSettings) -> InitStrategy {
    let perturbed = settings.num_restarts.saturating_sub(1) / 2;
    if k == 0 {
        InitStrategy::Symmetric
    } else if k <= perturbed {
        InitStrategy::PerturbedSymmetric { amplitude: (settings.perturbation * k as f64).min(1.0) }
    } else {
        InitStrategy::Random
    }
}

fn restart_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64)
}

/// Multi-start solve of one slice. Returns the first converged restart, or
/// the restart with the smallest residual when none converges.
pub fn solve_slice(system: &ConstraintSystem, settings: &SolverSettings) -> SolveReport {
    let mut best: Option<SolveReport> = None;
    let restarts = settings.num_restarts.max(1);
    for k in 0..restarts {
        let strategy = restart_strategy(k, settings);
        let x0 = system.initial_guess(strategy, restart_seed(settings.seed, k));
        let mut report = project_to_manifold(system, &x0, settings);
        report.restarts_used = k + 1;
        if report.converged() {
            return report;
        }
        let better = match &best {
            None => true,
            Some(b) => report.residual_norm < b.residual_norm,
        };
        if better {
            best = Some(report);
        }
    }
    let mut best = best.expect("at least one restart");
    best.restarts_used = restarts;
    best
}

/// One-sided feasibility test: convergence proves a real configuration
/// exists at this `c`; failure is only evidence against it.
pub fn feasible(system: &ConstraintSystem, settings: &SolverSettings) -> (bool, SolveReport) {
    let report = solve_slice(system, settings);
    (report.converged(), report)
}

/// Warm-started projection with a few small perturbations of the start.
pub(crate) fn warm_solve(
    system: &ConstraintSystem,
    start: &GaugedVariables,
    retries: usize,
    settings: &SolverSettings,
) -> SolveReport {
    let mut report = project_to_manifold(system, start, settings);
    let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(settings.seed, retries));
    for k in 0..retries {
        if report.converged() {
            break;
        }
        let amplitude = 1e-3 * (k + 1) as f64;
        let mut x = start.clone();
        for v in x.x.iter_mut() {
            *v += amplitude * (2.0 * rng.gen::<f64>() - 1.0);
        }
        let mut next = project_to_manifold(system, &x, settings);
        next.restarts_used = k + 2;
        if next.converged() || next.residual_norm < report.residual_norm {
            report = next;
        }
    }
    report
}
