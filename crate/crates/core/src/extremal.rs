//! The boundary `c_n` of the feasible twist range and feasibility profiles.
//!
//! [`find_extreme_c`] works in three stages:
//!
//! 1. **Anchor.** Scan `c = ±0.95, ±0.90, ...` from the requested side
//!    inwards with [`solve_slice`] until a slice converges.
//! 2. **March and bisect.** Step outwards from the anchor, warm-starting
//!    every slice from the last feasible witness, until a slice fails; then
//!    bisect that interval down to `tol_c`, still warm-starting.
//! 3. **Polish.** Near the boundary the slice collapses onto the set where
//!    `c` is extremal, which is a critical set of `c` on the variety. The
//!    bisection witness is refined by Gauss–Newton on the Lagrange system
//!
//!    ```text
//!    r(x, c) = 0,   J_x(x, c)^T l = 0,   (dr/dc)^T l = ±1
//!    ```
//!
//!    and accepted only if the refined `c` lies inside the final bracket.
//!    The polished witness sits on the boundary to rounding error, which is
//!    what the local-dimension probe and the rotation trace need.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::constraints::{ConstraintSystem, GaugedVariables};
use crate::error::{Error, Result};
use crate::linalg::{norm, norm_sq, pinv_solve};
use crate::model::{ClosureMode, KaleidocycleState};
use crate::solver::{project_to_manifold, solve_slice, warm_solve, SolveReport, SolverSettings};

/// Which end of the feasible range to locate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "upper" | "+" => Ok(Side::Upper),
            "lower" | "-" => Ok(Side::Lower),
            other => Err(Error::InvalidParameter(alloc::format!("unknown side `{other}`"))),
        }
    }
}

/// Search parameters beyond the solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalOptions {
    /// Final bracket width.
    pub tol_c: f64,
    /// Spacing of the anchor scan.
    pub coarse_step: f64,
    /// Outward step of the warm-started march.
    pub march_step: f64,
    /// Perturbed warm starts tried before a slice is declared infeasible.
    pub warm_retries: usize,
    /// Refine the witness on the Lagrange system.
    pub polish: bool,
}

impl Default for ExtremalOptions {
    fn default() -> Self {
        ExtremalOptions { tol_c: 1e-6, coarse_step: 0.05, march_step: 0.01, warm_retries: 2, polish: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalResult {
    pub n: usize,
    pub mode: ClosureMode,
    pub side: Side,
    /// Boundary estimate; equals `witness.c()`.
    pub c_n: f64,
    pub witness: KaleidocycleState,
    /// Final bisection interval `(low, high)`; the feasible end is the one
    /// nearer the anchor.
    pub bracket: (f64, f64),
    pub anchor_c: f64,
    pub march_steps: usize,
    pub bisection_steps: usize,
    /// Whether the Lagrange refinement was accepted.
    pub polished: bool,
    /// `|F|` of the Lagrange system at the returned witness (NaN if not polished).
    pub polish_residual: f64,
}

/// Locate `c_n` on the given side of the feasible range.
///
/// Fails with [`Error::NoFeasibleAnchor`] when no slice in the coarse scan
/// converges, and with [`Error::NoInteriorBoundary`] when the range extends
/// all the way to the trivial value `±1`.
pub fn find_extreme_c(
    n: usize,
    mode: ClosureMode,
    side: Side,
    tol_c: f64,
    settings: &SolverSettings,
) -> Result<ExtremalResult> {
    let options = ExtremalOptions { tol_c, ..Default::default() };
    find_extreme_c_with(n, mode, side, &options, settings)
}

pub fn find_extreme_c_with(
    n: usize,
    mode: ClosureMode,
    side: Side,
    options: &ExtremalOptions,
    settings: &SolverSettings,
) -> Result<ExtremalResult> {
    if !(options.tol_c > 0.0) {
        return Err(Error::InvalidParameter("tol_c must be positive".into()));
    }
    let d = side.sign();
    // probe that n is admissible before the scan
    ConstraintSystem::new(n, mode, 0.0)?;

    let (anchor_c, mut x_lo) = find_anchor(n, mode, d, options, settings)?;
    let mut lo = anchor_c;

    let limit = 1.0 - 1e-4;
    let mut march_steps = 0;
    let hi = loop {
        if d * lo >= limit {
            return Err(Error::NoInteriorBoundary(d));
        }
        let next = d * (d * lo + options.march_step).min(limit);
        let sys = ConstraintSystem::new(n, mode, next)?;
        let rep = warm_solve(&sys, &x_lo, options.warm_retries, settings);
        march_steps += 1;
        if rep.converged() {
            lo = next;
            x_lo = rep.variables;
        } else {
            break next;
        }
    };

    let mut hi = hi;
    let mut bisection_steps = 0;
    while (hi - lo).abs() > options.tol_c {
        let mid = 0.5 * (lo + hi);
        let sys = ConstraintSystem::new(n, mode, mid)?;
        let rep = warm_solve(&sys, &x_lo, options.warm_retries, settings);
        bisection_steps += 1;
        if rep.converged() {
            lo = mid;
            x_lo = rep.variables;
        } else {
            hi = mid;
        }
    }
    let bracket = if lo < hi { (lo, hi) } else { (hi, lo) };

    let mut result = ExtremalResult {
        n,
        mode,
        side,
        c_n: lo,
        witness: ConstraintSystem::new(n, mode, lo)?.state(&x_lo),
        bracket,
        anchor_c,
        march_steps,
        bisection_steps,
        polished: false,
        polish_residual: f64::NAN,
    };

    if options.polish {
        if let Some((c_star, x_star, residual)) = polish(n, mode, d, lo, &x_lo, settings) {
            let slack = 1e-12;
            if c_star >= bracket.0 - slack && c_star <= bracket.1 + slack {
                let sys = ConstraintSystem::new(n, mode, c_star)?;
                let rep = project_to_manifold(&sys, &x_star, settings);
                if let Some(state) = rep.state {
                    result.c_n = c_star;
                    result.witness = state;
                    result.polished = true;
                    result.polish_residual = residual;
                }
            }
        }
    }
    Ok(result)
}

fn find_anchor(
    n: usize,
    mode: ClosureMode,
    d: f64,
    options: &ExtremalOptions,
    settings: &SolverSettings,
) -> Result<(f64, GaugedVariables)> {
    let steps = libm::floor(1.0 / options.coarse_step) as i64;
    // from just inside the requested end towards the opposite one
    for k in 1..2 * steps {
        let c = d * (1.0 - k as f64 * options.coarse_step);
        let c = if c.abs() < 1e-12 { 0.0 } else { c };
        if c.abs() >= 1.0 {
            continue;
        }
        let sys = ConstraintSystem::new(n, mode, c)?;
        let rep = solve_slice(&sys, settings);
        if rep.converged() {
            return Ok((c, rep.variables));
        }
    }
    Err(Error::NoFeasibleAnchor)
}

/// Lagrange residual `F(x, c, l)`.
fn lagrange_residual(n: usize, mode: ClosureMode, d: f64, z: &DVector<f64>) -> Option<DVector<f64>> {
    let nv = 3 * (n - 2);
    let nr = 2 * n;
    let c = z[nv];
    if !(c.abs() < 1.0) {
        return None;
    }
    let sys = ConstraintSystem::new(n, mode, c).ok()?;
    let x = GaugedVariables { x: z.rows(0, nv).into_owned() };
    let lambda = z.rows(nv + 1, nr);
    let r = sys.residual(&x);
    let jac = sys.jacobian(&x);
    let rc = sys.residual_dc(&x);
    let mut f = DVector::zeros(nr + nv + 1);
    f.rows_mut(0, nr).copy_from(&r);
    f.rows_mut(nr, nv).copy_from(&(jac.transpose() * lambda));
    f[nr + nv] = rc.dot(&lambda) - d;
    Some(f)
}

fn polish(
    n: usize,
    mode: ClosureMode,
    d: f64,
    c0: f64,
    x0: &GaugedVariables,
    settings: &SolverSettings,
) -> Option<(f64, GaugedVariables, f64)> {
    let nv = 3 * (n - 2);
    let nr = 2 * n;
    let sys = ConstraintSystem::new(n, mode, c0).ok()?;
    // multiplier from the left singular vector of the smallest singular value
    let jac = sys.jacobian(x0);
    let svd = jac.svd(true, false);
    let u = svd.u.as_ref()?;
    let (kmin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, s)| if *s < acc.1 { (k, *s) } else { acc });
    let w = u.column(kmin).into_owned();
    let rc = sys.residual_dc(x0);
    let proj = rc.dot(&w);
    if proj.abs() < 1e-12 {
        return None;
    }
    let lambda = w * (d / proj);

    let mut z = DVector::zeros(nv + 1 + nr);
    z.rows_mut(0, nv).copy_from(&x0.x);
    z[nv] = c0;
    z.rows_mut(nv + 1, nr).copy_from(&lambda);

    let mut f = lagrange_residual(n, mode, d, &z)?;
    let mut fnorm = norm_sq(&f);
    for _ in 0..60 {
        if libm::sqrt(fnorm) < 1e-13 {
            break;
        }
        let jf = lagrange_jacobian(n, mode, d, &z)?;
        let step = -pinv_solve(&jf, &f, settings.svd_cutoff);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &z + &step * t;
            if let Some(ft) = lagrange_residual(n, mode, d, &trial) {
                let fn_t = norm_sq(&ft);
                if fn_t < fnorm {
                    z = trial;
                    f = ft;
                    fnorm = fn_t;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let c_star = z[nv];
    let x_star = GaugedVariables { x: z.rows(0, nv).into_owned() };
    let r_norm = norm(&f.rows(0, nr).into_owned());
    if r_norm > settings.tol_residual {
        return None;
    }
    Some((c_star, x_star, libm::sqrt(fnorm)))
}

/// Jacobian of the Lagrange system. The constraint rows are analytic; the
/// stationarity rows are differenced centrally, which is exact up to
/// rounding in `x` because the constraints are quadratic there.
fn lagrange_jacobian(n: usize, mode: ClosureMode, d: f64, z: &DVector<f64>) -> Option<DMatrix<f64>> {
    let nv = 3 * (n - 2);
    let nr = 2 * n;
    let dim = nv + 1 + nr;
    let c = z[nv];
    let sys = ConstraintSystem::new(n, mode, c).ok()?;
    let x = GaugedVariables { x: z.rows(0, nv).into_owned() };
    let jac = sys.jacobian(&x);
    let rc = sys.residual_dc(&x);
    let mut out = DMatrix::zeros(dim, dim);
    out.view_mut((0, 0), (nr, nv)).copy_from(&jac);
    out.view_mut((0, nv), (nr, 1)).copy_from(&rc);
    out.view_mut((nr, nv + 1), (nv, nr)).copy_from(&jac.transpose());
    out.view_mut((nr + nv, nv + 1), (1, nr)).copy_from(&rc.transpose());
    for col in 0..=nv {
        let h = 1e-6;
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[col] += h;
        zm[col] -= h;
        let fp = lagrange_residual(n, mode, d, &zp)?;
        let fm = lagrange_residual(n, mode, d, &zm)?;
        for row in nr..dim {
            out[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    Some(out)
}

/// One grid point of a feasibility profile.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityPoint {
    pub c: f64,
    pub feasible: bool,
    /// Smallest residual norm reached by any attempt.
    pub min_residual: f64,
    pub witness: Option<KaleidocycleState>,
    /// Feasibility was established by continuation from a neighbouring
    /// feasible grid point rather than by a fresh multi-start solve.
    pub via_continuation: bool,
}

const CONTINUATION_STEP: f64 = 0.01;

/// Feasibility of each `c` in `grid`.
///
/// Every point first gets an independent [`solve_slice`]. Points that fail
/// are then retried by warm-started continuation in `c` from the nearest
/// feasible grid point. The result is in input order and depends only on
/// the inputs.
pub fn scan_feasibility(
    n: usize,
    mode: ClosureMode,
    grid: &[f64],
    settings: &SolverSettings,
) -> Result<Vec<FeasibilityPoint>> {
    let first = grid
        .iter()
        .map(|&c| scan_point(n, mode, c, settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(complete_scan(n, mode, first, settings))
}

/// First pass of [`scan_feasibility`] for a single grid value. Independent
/// of every other point, so callers may evaluate a grid in parallel.
pub fn scan_point(
    n: usize,
    mode: ClosureMode,
    c: f64,
    settings: &SolverSettings,
) -> Result<(FeasibilityPoint, Option<GaugedVariables>)> {
    let sys = ConstraintSystem::new(n, mode, c)?;
    let rep = solve_slice(&sys, settings);
    let vars = rep.converged().then(|| rep.variables.clone());
    Ok((point_from(c, &rep, false), vars))
}

/// Second pass of [`scan_feasibility`]: continuation retries for the
/// points that failed in `first`.
pub fn complete_scan(
    n: usize,
    mode: ClosureMode,
    first: Vec<(FeasibilityPoint, Option<GaugedVariables>)>,
    settings: &SolverSettings,
) -> Vec<FeasibilityPoint> {
    let (mut points, mut variables): (Vec<_>, Vec<_>) = first.into_iter().unzip();
    for i in 0..points.len() {
        if points[i].feasible {
            continue;
        }
        let source = (0..points.len())
            .filter(|&j| points[j].feasible && variables[j].is_some())
            .min_by(|&a, &b| {
                let da = (points[a].c - points[i].c).abs();
                let db = (points[b].c - points[i].c).abs();
                da.partial_cmp(&db).unwrap_or(core::cmp::Ordering::Equal)
            });
        let Some(j) = source else { continue };
        let start = variables[j].clone().expect("filtered on Some");
        match continue_in_c(n, mode, points[j].c, points[i].c, start, settings) {
            Ok(rep) => {
                points[i] = point_from(points[i].c, &rep, true);
                variables[i] = Some(rep.variables);
            }
            Err(residual) => points[i].min_residual = points[i].min_residual.min(residual),
        }
    }
    points
}

fn point_from(c: f64, rep: &SolveReport, via_continuation: bool) -> FeasibilityPoint {
    FeasibilityPoint {
        c,
        feasible: rep.converged(),
        min_residual: rep.residual_norm,
        witness: rep.state.clone(),
        via_continuation,
    }
}

/// Warm-started walk in `c`; on failure returns the residual reached at
/// the first slice that did not converge.
fn continue_in_c(
    n: usize,
    mode: ClosureMode,
    from: f64,
    to: f64,
    start: GaugedVariables,
    settings: &SolverSettings,
) -> core::result::Result<SolveReport, f64> {
    let steps = libm::ceil((to - from).abs() / CONTINUATION_STEP).max(1.0) as usize;
    let mut x = start;
    let mut last = None;
    for k in 1..=steps {
        let c = if k == steps { to } else { from + (to - from) * k as f64 / steps as f64 };
        let sys = ConstraintSystem::new(n, mode, c).map_err(|_| f64::INFINITY)?;
        let rep = project_to_manifold(&sys, &x, settings);
        if !rep.converged() {
            return Err(if k == steps { rep.residual_norm } else { f64::INFINITY });
        }
        x = rep.variables.clone();
        last = Some(rep);
    }
    last.ok_or(f64::INFINITY)
}
