//! Tangent spaces, real local dimension and the rotating motion.
//!
//! All work happens in the gauge-fixed chart of [`ConstraintSystem`], so
//! rigid motions never show up as degrees of freedom.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::{ConstraintSystem, GaugedVariables};
use crate::error::{Error, Result};
use crate::linalg::{full_svd, norm, norm_sq, pinv_solve};
use crate::model::{validate_state, KaleidocycleState};
use crate::observables::{observe, EnergyParams, ObservableSet};
use crate::solver::{project_to_manifold, SolverSettings};

/// Numerical null space of the gauged Jacobian at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentSpace {
    pub system: ConstraintSystem,
    pub point: GaugedVariables,
    /// Orthonormal columns spanning the null space.
    pub basis: DMatrix<f64>,
    /// Full spectrum, descending, padded with zeros to the number of unknowns.
    pub singular_values: DVector<f64>,
}

impl TangentSpace {
    pub fn nullity(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthogonal projection of `v` onto the null space.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }
}

fn system_for(state: &KaleidocycleState) -> Result<(ConstraintSystem, GaugedVariables)> {
    let system = ConstraintSystem::new(state.n(), state.mode(), state.c())?;
    let x = system.gauge(state)?;
    Ok((system, x))
}

fn null_space(system: &ConstraintSystem, x: &GaugedVariables, threshold: f64) -> TangentSpace {
    let jac = system.jacobian(x);
    let (sv, v) = full_svd(&jac);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] < threshold * smax).collect();
    let mut basis = DMatrix::zeros(v.nrows(), keep.len());
    for (col, &k) in keep.iter().enumerate() {
        let mut column = v.column(k).into_owned();
        // fix the sign so the basis is reproducible
        let lead = column.iamax();
        if column[lead] < 0.0 {
            column = -column;
        }
        basis.set_column(col, &column);
    }
    TangentSpace { system: *system, point: x.clone(), basis, singular_values: sv }
}

/// Null space of the Jacobian at `state`, keeping right singular vectors
/// with `sigma < threshold * sigma_max`.
pub fn tangent_basis(state: &KaleidocycleState, threshold: f64) -> Result<TangentSpace> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("threshold = {threshold}")));
    }
    let (system, x) = system_for(state)?;
    Ok(null_space(&system, &x, threshold))
}

/// Outcome of [`probe_motions`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    /// Rank of the retained displacements: the real local dimension.
    pub dof: usize,
    pub nullity: usize,
    /// Probes whose projection converged and kept at least half the step.
    pub retained: usize,
    /// Probes that converged but collapsed back towards the start.
    pub collapsed: usize,
    /// Probes whose projection failed.
    pub failed: usize,
    /// Retained displacements, one column each.
    pub displacements: DMatrix<f64>,
}

pub const DEFAULT_NULL_THRESHOLD: f64 = 1e-8;

/// Real local dimension of the solution set at `state`.
///
/// Steps of length `step_eps` are taken along tangent directions and
/// projected back with [`project_to_manifold`]. A direction counts when the
/// projected displacement keeps a component of at least `step_eps / 2`
/// along the probe; the result is the number of independent retained
/// displacements.
pub fn probe_local_dof(
    state: &KaleidocycleState,
    num_probes: usize,
    step_eps: f64,
    settings: &SolverSettings,
) -> Result<usize> {
    probe_motions(state, num_probes, step_eps, settings).map(|r| r.dof)
}

/// [`probe_local_dof`] with the full diagnostic record.
pub fn probe_motions(
    state: &KaleidocycleState,
    num_probes: usize,
    step_eps: f64,
    settings: &SolverSettings,
) -> Result<ProbeReport> {
    if !(step_eps > 0.0) || num_probes == 0 {
        return Err(Error::InvalidParameter(alloc::format!(
            "probe needs step_eps > 0 and at least one probe (got {step_eps}, {num_probes})"
        )));
    }
    let (system, x0) = system_for(state)?;
    let space = null_space(&system, &x0, DEFAULT_NULL_THRESHOLD);
    probe_space(&space, num_probes, step_eps, settings)
}

fn probe_space(
    space: &TangentSpace,
    num_probes: usize,
    step_eps: f64,
    settings: &SolverSettings,
) -> Result<ProbeReport> {
    let k = space.nullity();
    let x0 = &space.point;
    let empty = ProbeReport {
        dof: 0,
        nullity: k,
        retained: 0,
        collapsed: 0,
        failed: 0,
        displacements: DMatrix::zeros(x0.len(), 0),
    };
    if k == 0 {
        return Ok(empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed ^ 0x5EED_0F_D0F);
    let mut kept: Vec<DVector<f64>> = Vec::new();
    let mut drift: Vec<DVector<f64>> = Vec::new();
    let mut report = empty;
    for p in 0..num_probes {
        // basis vectors of both signs first, then random combinations
        let coeff = if p < 2 * k {
            let mut c = DVector::zeros(k);
            c[p / 2] = if p % 2 == 0 { 1.0 } else { -1.0 };
            c
        } else {
            let mut c = DVector::from_fn(k, |_, _| gaussian(&mut rng));
            let l = norm(&c);
            c /= l;
            c
        };
        let dir = &space.basis * coeff;
        let start = GaugedVariables { x: &x0.x + &dir * step_eps };
        let rep = project_to_manifold(&space.system, &start, settings);
        if !rep.converged() {
            report.failed += 1;
            continue;
        }
        let disp = &rep.variables.x - &x0.x;
        if disp.dot(&dir) >= 0.5 * step_eps {
            report.retained += 1;
            kept.push(disp);
        } else {
            report.collapsed += 1;
            drift.push(disp);
        }
    }
    // A collapsed probe still drifts along whatever real motion it had a
    // component on. When the null space is much larger than the solution
    // set, random probes rarely reach the half-step threshold, so probe
    // again along the largest drift not yet explained by kept directions.
    for _ in 0..REFINE_ROUNDS {
        let Some(dir) = largest_unexplained(&drift, &kept, step_eps).map(|d| space.project(&d)) else { break };
        let l = norm(&dir);
        if l < DRIFT_FLOOR * step_eps {
            break;
        }
        let dir = dir / l;
        let start = GaugedVariables { x: &x0.x + &dir * step_eps };
        let rep = project_to_manifold(&space.system, &start, settings);
        if !rep.converged() {
            report.failed += 1;
            break;
        }
        let disp = &rep.variables.x - &x0.x;
        if disp.dot(&dir) >= 0.5 * step_eps {
            report.retained += 1;
            kept.push(disp);
        } else {
            report.collapsed += 1;
            break;
        }
    }
    // A displacement adds a direction only if it reaches at least half a
    // step away from the span of those already counted. Near a fold the
    // residual tolerance leaves slack of order sqrt(tol) across the motion,
    // so a relative rank test would overcount.
    let mut span: Vec<DVector<f64>> = Vec::new();
    for d in &kept {
        let mut rest = d.clone();
        for q in &span {
            rest -= q * q.dot(&rest);
        }
        let l = norm(&rest);
        if l >= 0.5 * step_eps {
            span.push(rest / l);
        }
    }
    report.dof = span.len();
    if !kept.is_empty() {
        report.displacements = DMatrix::from_columns(&kept);
    }
    Ok(report)
}

const REFINE_ROUNDS: usize = 4;
const DRIFT_FLOOR: f64 = 1e-3;

/// Drift vector with the largest component outside the span of `kept`,
/// returned as that component.
fn largest_unexplained(drift: &[DVector<f64>], kept: &[DVector<f64>], step_eps: f64) -> Option<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for d in kept {
        let mut rest = d.clone();
        for q in &basis {
            rest -= q * q.dot(&rest);
        }
        let l = norm(&rest);
        if l >= 0.5 * step_eps {
            basis.push(rest / l);
        }
    }
    drift
        .iter()
        .map(|d| {
            let mut rest = d.clone();
            for q in &basis {
                rest -= q * q.dot(&rest);
            }
            rest
        })
        .max_by(|a, b| norm(a).partial_cmp(&norm(b)).unwrap_or(core::cmp::Ordering::Equal))
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSettings {
    /// Nominal chord length between consecutive states, in gauged coordinates.
    pub step: f64,
    pub max_steps: usize,
    /// The loop is closed once the trace passes within this distance of the
    /// start; `None` means half a step.
    pub closure_tol: Option<f64>,
    /// Relative singular-value cutoff for null spaces.
    pub null_threshold: f64,
    /// Stall once the step falls below this fraction of the nominal one.
    pub min_step_ratio: f64,
    pub corrector_iters: usize,
    /// Probes used to pick the initial direction at singular starts.
    pub probes: usize,
    pub probe_eps: f64,
}

impl Default for TraceSettings {
    fn default() -> Self {
        TraceSettings {
            step: 0.02,
            max_steps: 2000,
            closure_tol: None,
            null_threshold: DEFAULT_NULL_THRESHOLD,
            min_step_ratio: 1e-8,
            corrector_iters: 30,
            probes: 32,
            probe_eps: 1e-4,
        }
    }
}

/// A sampled path of the rotating motion.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionTrace {
    pub states: Vec<KaleidocycleState>,
    pub variables: Vec<GaugedVariables>,
    /// Cumulative chord length.
    pub arclength: Vec<f64>,
    pub closed: bool,
    /// Real local dimension estimated at the start.
    pub start_dof: usize,
    /// Filled by [`MotionTrace::observe`].
    pub observables: Vec<ObservableSet>,
}

impl MotionTrace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Evaluate observables on every state.
    pub fn observe(&mut self, params: &EnergyParams) -> Result<()> {
        self.observables = self.states.iter().map(|s| observe(s, params)).collect::<Result<_>>()?;
        Ok(())
    }

    /// `|x_last - x_first|` in gauged coordinates.
    pub fn closure_gap(&self) -> f64 {
        match (self.variables.first(), self.variables.last()) {
            (Some(a), Some(b)) => norm(&(&b.x - &a.x)),
            _ => 0.0,
        }
    }
}

/// Follow the one-parameter motion through `start` by pseudo-arclength
/// continuation at fixed `c`.
///
/// The initial direction is the unique tangent when the null space is one
/// dimensional. Otherwise tangent probes decide: a single real direction is
/// followed; several real directions (an interior slice) fall back to the
/// first null vector.
pub fn trace_rotation(
    start: &KaleidocycleState,
    trace: &TraceSettings,
    settings: &SolverSettings,
) -> Result<MotionTrace> {
    if !(trace.step > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("step = {}", trace.step)));
    }
    let (system, x_start) = system_for(start)?;
    let first = project_to_manifold(&system, &x_start, settings);
    if !first.converged() {
        return Err(Error::Degenerate(alloc::format!(
            "start is not on the solution set (residual {:e})",
            first.residual_norm
        )));
    }
    let x0 = first.variables;
    let space = null_space(&system, &x0, trace.null_threshold);
    if space.nullity() == 0 {
        return Err(Error::Degenerate(alloc::format!("start is rigid")));
    }
    let (mut dir, start_dof) = if space.nullity() == 1 {
        (space.basis.column(0).into_owned(), 1)
    } else {
        let probe = probe_space(&space, trace.probes, trace.probe_eps, settings)?;
        if probe.dof == 1 {
            let d = probe.displacements.column(0).into_owned();
            let d = space.project(&d);
            (&d / norm(&d), 1)
        } else if probe.dof == 0 {
            return Err(Error::Degenerate(alloc::format!("no real motion through the start")));
        } else {
            (space.basis.column(0).into_owned(), probe.dof)
        }
    };

    let closure_tol = trace.closure_tol.unwrap_or(0.5 * trace.step);
    let mut out = MotionTrace {
        states: alloc::vec![system.state(&x0)],
        variables: alloc::vec![x0.clone()],
        arclength: alloc::vec![0.0],
        closed: false,
        start_dof,
        observables: Vec::new(),
    };
    let mut x = x0.clone();
    let mut h = trace.step;
    let mut left_start = false;
    while out.states.len() <= trace.max_steps {
        let next = loop {
            match correct(&system, &x, &dir, h, trace.corrector_iters, settings) {
                Some(y) => break y,
                None => {
                    h *= 0.5;
                    if h < trace.min_step_ratio * trace.step {
                        return Err(Error::Stall { arclength: *out.arclength.last().unwrap(), step: h });
                    }
                }
            }
        };
        let chord = &next.x - &x.x;
        let len = norm(&chord);
        let s = out.arclength.last().unwrap() + len;

        let from_start = norm(&(&next.x - &x0.x));
        if from_start > 2.0 * trace.step {
            left_start = true;
        }
        let closing = left_start && segment_point_distance(&x.x, &next.x, &x0.x) <= closure_tol;

        // next direction: secant restricted to the local null space
        let local = null_space(&system, &next, trace.null_threshold);
        let secant = &chord / len;
        let mut d = if local.nullity() > 0 { local.project(&secant) } else { secant.clone() };
        let dn = norm(&d);
        if dn < 0.5 {
            return Err(Error::BranchAmbiguity { index: out.states.len(), nullity: local.nullity() });
        }
        d /= dn;
        if d.dot(&dir) < 0.0 {
            d = -d;
        }

        out.states.push(system.state(&next));
        out.variables.push(next.clone());
        out.arclength.push(s);
        x = next;
        dir = d;
        h = (2.0 * h).min(trace.step);
        if closing {
            out.closed = true;
            break;
        }
    }
    Ok(out)
}

/// Gauss–Newton on `[r(y); t.(y - x - h t)] = 0` from the predictor.
fn correct(
    system: &ConstraintSystem,
    x: &GaugedVariables,
    t: &DVector<f64>,
    h: f64,
    iters: usize,
    settings: &SolverSettings,
) -> Option<GaugedVariables> {
    let nv = x.len();
    let nr = system.num_rows();
    let pred = &x.x + t * h;
    let mut y = GaugedVariables { x: pred.clone() };
    let eval = |y: &GaugedVariables| {
        let mut f = DVector::zeros(nr + 1);
        f.rows_mut(0, nr).copy_from(&system.residual(y));
        f[nr] = t.dot(&(&y.x - &pred));
        f
    };
    let mut f = eval(&y);
    let mut fn2 = norm_sq(&f);
    for _ in 0..iters {
        if libm::sqrt(fn2) <= settings.tol_residual {
            break;
        }
        let mut jac = DMatrix::zeros(nr + 1, nv);
        jac.view_mut((0, 0), (nr, nv)).copy_from(&system.jacobian(&y));
        jac.view_mut((nr, 0), (1, nv)).copy_from(&t.transpose());
        let step = -pinv_solve(&jac, &f, settings.svd_cutoff);
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = GaugedVariables { x: &y.x + &step * s };
            let ft = eval(&trial);
            let ft2 = norm_sq(&ft);
            if ft2 < fn2 {
                y = trial;
                f = ft;
                fn2 = ft2;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if libm::sqrt(norm_sq(&system.residual(&y))) > settings.tol_residual {
        return None;
    }
    // reject jumps to another sheet
    let chord = norm(&(&y.x - &x.x));
    if chord > 1.5 * h || chord < 0.5 * h {
        return None;
    }
    let state = system.state(&y);
    if !validate_state(&state, 10.0 * settings.tol_residual).valid {
        return None;
    }
    Some(y)
}

fn segment_point_distance(a: &DVector<f64>, b: &DVector<f64>, p: &DVector<f64>) -> f64 {
    let ab = b - a;
    let l2 = norm_sq(&ab);
    let t = if l2 > 0.0 { ((p - a).dot(&ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
    norm(&(a + ab * t - p))
}
