//! Energies and ribbon invariants of a single configuration.
//!
//! Distances are taken between hinge centres `gamma_i`, so every quantity
//! here is invariant under rigid motions and under cyclic relabelling.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{gamma_from_b, CenterLine, ClosureMode, KaleidocycleState, Vec3};

const TWO_PI: f64 = 2.0 * PI;
const FOUR_PI: f64 = 4.0 * PI;

/// Largest `|2(Tw + Wr) - h|` accepted by [`half_twists`].
pub const INTEGRALITY_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    /// Exponent of the Coulomb kernel `|r|^-alpha`.
    pub alpha: f64,
    /// Evaluate the dipole energy. Requires an oriented state.
    pub dipole: bool,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams { alpha: 1.0, dipole: false }
    }
}

impl EnergyParams {
    /// Default exponent, dipole enabled exactly when the mode supports it.
    pub fn for_mode(mode: ClosureMode) -> Self {
        EnergyParams { alpha: 1.0, dipole: mode == ClosureMode::Oriented }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSet {
    pub e_bend: f64,
    pub e_clmb: f64,
    pub alpha: f64,
    pub e_dipl: Option<f64>,
    pub tw: f64,
    pub wr: f64,
    pub half_twists: i64,
    /// `|2(Tw + Wr) - half_twists|`.
    pub integrality_defect: f64,
    /// Spherical area of the tangent indicatrix, in `[0, 4 pi)`.
    pub gauss_area: f64,
}

impl ObservableSet {
    /// `2 pi Wr` reduced into `[0, 2 pi)`, the value `gauss_area` should match mod `2 pi`.
    pub fn gauss_check(&self) -> f64 {
        rem(TWO_PI * self.wr, TWO_PI)
    }

    /// Distance between `gauss_area` and `2 pi Wr` on the circle `R / 2 pi Z`.
    pub fn gauss_mismatch(&self) -> f64 {
        circle_distance(self.gauss_area, TWO_PI * self.wr, TWO_PI)
    }
}

/// Evaluate every observable of `state`.
pub fn observe(state: &KaleidocycleState, params: &EnergyParams) -> Result<ObservableSet> {
    if !params.alpha.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!("alpha = {}", params.alpha)));
    }
    let line = gamma_from_b(state, Vec3::zeros())?;
    let e_dipl = if params.dipole { Some(dipole_energy_on(state, &line)?) } else { None };
    let tw = twist(state);
    let wr = writhe(&line)?;
    let (h, defect) = integral_part(tw, wr)?;
    Ok(ObservableSet {
        e_bend: bend_energy(state)?,
        e_clmb: coulomb_kernel(line.points(), params.alpha)?,
        alpha: params.alpha,
        e_dipl,
        tw,
        wr,
        half_twists: h,
        integrality_defect: defect,
        gauss_area: gauss_area(&line)?,
    })
}

fn clamped_acos(x: f64) -> f64 {
    libm::acos(x.clamp(-1.0, 1.0))
}

/// Sum of squared turning angles between consecutive centre-line edges.
pub fn bend_energy(state: &KaleidocycleState) -> Result<f64> {
    let n = state.n();
    let edges: Vec<Vec3> = (0..n).map(|i| state.edge(i)).collect();
    bend_energy_of_edges(&edges)
}

/// [`bend_energy`] for an arbitrary closed list of edge vectors.
pub fn bend_energy_of_edges(edges: &[Vec3]) -> Result<f64> {
    let n = edges.len();
    let mut norms = Vec::with_capacity(n);
    for (i, e) in edges.iter().enumerate() {
        let l = e.norm();
        if l < 1e-12 {
            return Err(Error::Degenerate(alloc::format!("edge {i} has length {l:e}")));
        }
        norms.push(l);
    }
    let mut sum = 0.0;
    for i in 0..n {
        let j = (i + n - 1) % n;
        let angle = clamped_acos(edges[j].dot(&edges[i]) / (norms[j] * norms[i]));
        sum += angle * angle;
    }
    Ok(sum)
}

/// `sum_{i<j} |gamma_i - gamma_j|^-alpha` over the hinge centres.
pub fn coulomb_energy(state: &KaleidocycleState, alpha: f64) -> Result<f64> {
    let line = gamma_from_b(state, Vec3::zeros())?;
    coulomb_kernel(line.points(), alpha)
}

/// Pairwise Coulomb sum for arbitrary point charges.
pub fn coulomb_kernel(points: &[Vec3], alpha: f64) -> Result<f64> {
    let mut sum = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let r = (points[i] - points[j]).norm();
            if r < 1e-12 {
                return Err(Error::CoincidentCenters(i, j));
            }
            sum += libm::pow(r, -alpha);
        }
    }
    Ok(sum)
}

/// Interaction energy of unit dipoles `b_i` placed at the hinge centres.
pub fn dipole_energy(state: &KaleidocycleState) -> Result<f64> {
    let line = gamma_from_b(state, Vec3::zeros())?;
    dipole_energy_on(state, &line)
}

fn dipole_energy_on(state: &KaleidocycleState, line: &CenterLine) -> Result<f64> {
    if state.mode() != ClosureMode::Oriented {
        return Err(Error::ModeError);
    }
    dipole_kernel(line.points(), state.hinges())
}

/// `sum_{i<j} m_i.m_j / r^3 - 3 (m_i.d)(m_j.d) / r^5` with `d = p_i - p_j`.
pub fn dipole_kernel(points: &[Vec3], moments: &[Vec3]) -> Result<f64> {
    if points.len() != moments.len() {
        return Err(Error::InvalidParameter(alloc::format!(
            "{} points but {} moments",
            points.len(),
            moments.len()
        )));
    }
    let mut sum = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = points[i] - points[j];
            let r = d.norm();
            if r < 1e-12 {
                return Err(Error::CoincidentCenters(i, j));
            }
            let r3 = r * r * r;
            sum += moments[i].dot(&moments[j]) / r3
                - 3.0 * moments[i].dot(&d) * moments[j].dot(&d) / (r3 * r * r);
        }
    }
    Ok(sum)
}

/// Discrete twist `n arccos(c) / 2 pi`, in turns.
pub fn twist(state: &KaleidocycleState) -> f64 {
    state.n() as f64 * clamped_acos(state.c()) / TWO_PI
}

/// Twist from the actual neighbour angles, `sum_i arccos(b_{i-1}.b_i) / 2 pi`.
/// Agrees with [`twist`] on valid states.
pub fn twist_sum(state: &KaleidocycleState) -> f64 {
    (1..=state.n())
        .map(|i| clamped_acos(state.hinge(i - 1).dot(&state.hinge(i)) / (state.hinge(i - 1).norm() * state.hinge(i).norm())))
        .sum::<f64>()
        / TWO_PI
}

/// Writhe of a closed polygon, summing the exact signed solid angle of
/// every pair of non-adjacent segments (Klenin and Langowski).
pub fn writhe(line: &CenterLine) -> Result<f64> {
    let pts = line.points();
    let n = pts.len();
    let mut scale: f64 = 0.0;
    for i in 0..n {
        let l = (pts[(i + 1) % n] - pts[i]).norm();
        if l < 1e-12 {
            return Err(Error::DegenerateSegment(i));
        }
        scale = scale.max(l);
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (p1, p2) = (pts[i], pts[(i + 1) % n]);
            let (p3, p4) = (pts[j], pts[(j + 1) % n]);
            if segment_distance(&p1, &p2, &p3, &p4) < 1e-9 * scale {
                return Err(Error::NumericalIllConditioning(i, j));
            }
            total += pair_solid_angle(&p1, &p2, &p3, &p4);
        }
    }
    Ok(total / TWO_PI)
}

/// Signed solid angle subtended by segment `p3 p4` as seen along `p1 p2`.
fn pair_solid_angle(p1: &Vec3, p2: &Vec3, p3: &Vec3, p4: &Vec3) -> f64 {
    let r13 = p3 - p1;
    let r14 = p4 - p1;
    let r23 = p3 - p2;
    let r24 = p4 - p2;
    let r12 = p2 - p1;
    let r34 = p4 - p3;
    let triple = r34.cross(&r12).dot(&r13);
    let size = r12.norm() * r34.norm() * r13.norm().max(r14.norm());
    if triple.abs() <= 1e-14 * size {
        return 0.0;
    }
    let normals = [r13.cross(&r14), r14.cross(&r24), r24.cross(&r23), r23.cross(&r13)];
    let mut omega = 0.0;
    for k in 0..4 {
        let a = normals[k].normalize();
        let b = normals[(k + 1) % 4].normalize();
        omega += libm::asin(a.dot(&b).clamp(-1.0, 1.0));
    }
    if triple > 0.0 {
        omega
    } else {
        -omega
    }
}

/// Shortest distance between the segments `p1 p2` and `p3 p4`.
fn segment_distance(p1: &Vec3, p2: &Vec3, p3: &Vec3, p4: &Vec3) -> f64 {
    let d1 = p2 - p1;
    let d2 = p4 - p3;
    let r = p1 - p3;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let c = d1.dot(&r);
    let b = d1.dot(&d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-300 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    (p1 + d1 * s - (p3 + d2 * t)).norm()
}

fn integral_part(tw: f64, wr: f64) -> Result<(i64, f64)> {
    let value = 2.0 * (tw + wr);
    let h = libm::round(value);
    let defect = (value - h).abs();
    if !(defect <= INTEGRALITY_LIMIT) {
        return Err(Error::IntegralityViolation { value, defect });
    }
    Ok((h as i64, defect))
}

/// Half-twist count `round(2 (Tw + Wr))` of the strip, with its defect.
pub fn half_twists(state: &KaleidocycleState) -> Result<(i64, f64)> {
    let line = gamma_from_b(state, Vec3::zeros())?;
    integral_part(twist(state), writhe(&line)?)
}

/// Area on the left of the geodesic polygon through the unit tangents,
/// reduced into `[0, 4 pi)`.
///
/// Repeated consecutive tangents (collinear edges) are skipped.
pub fn gauss_area(line: &CenterLine) -> Result<f64> {
    let mut t: Vec<Vec3> = Vec::with_capacity(line.len());
    for (i, e) in line.segments().iter().enumerate() {
        let l = e.norm();
        if l < 1e-12 {
            return Err(Error::DegenerateSegment(i));
        }
        let u = e / l;
        if t.last().map_or(true, |p: &Vec3| (u - p).norm() > 1e-14) {
            t.push(u);
        }
    }
    while t.len() > 1 && (t[0] - t[t.len() - 1]).norm() <= 1e-14 {
        t.pop();
    }
    let m = t.len();
    if m < 3 {
        return Ok(TWO_PI);
    }
    for i in 0..m {
        let j = (i + 1) % m;
        if t[i].dot(&t[j]) < -1.0 + 1e-12 {
            return Err(Error::AntipodalTangents(i, j));
        }
    }
    let mut turning = 0.0;
    for i in 0..m {
        let prev = t[(i + m - 1) % m];
        let here = t[i];
        let next = t[(i + 1) % m];
        let incoming = prev.cross(&here).cross(&here);
        let outgoing = here.cross(&next.cross(&here));
        turning += libm::atan2(here.dot(&incoming.cross(&outgoing)), incoming.dot(&outgoing));
    }
    Ok(rem(TWO_PI - turning, FOUR_PI))
}

/// Sum of squared great-circle distances between consecutive unit tangents.
pub fn tangent_arc_energy(line: &CenterLine) -> f64 {
    let seg = line.segments();
    let n = seg.len();
    (0..n)
        .map(|i| {
            let a = seg[(i + n - 1) % n];
            let b = seg[i];
            let arc = libm::atan2(a.cross(&b).norm(), a.dot(&b));
            arc * arc
        })
        .sum()
}

/// `bend_weight E_bend + twist_weight sum_i arccos(b_{i-1}.b_i)^2`.
pub fn kirchhoff_energy(state: &KaleidocycleState, bend_weight: f64, twist_weight: f64) -> Result<f64> {
    let bend = if bend_weight == 0.0 { 0.0 } else { bend_energy(state)? };
    let twist_sq: f64 = (1..=state.n())
        .map(|i| {
            let a = clamped_acos(state.hinge(i - 1).dot(&state.hinge(i)));
            a * a
        })
        .sum();
    Ok(bend_weight * bend + twist_weight * twist_sq)
}

fn rem(x: f64, m: f64) -> f64 {
    let r = x - m * libm::floor(x / m);
    if r >= m {
        0.0
    } else {
        r
    }
}

fn circle_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = rem(a - b, period);
    d.min(period - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::ConstraintSystem;
    use crate::solver::{solve_slice, SolverSettings};

    fn solved(n: usize, mode: ClosureMode, c: f64) -> KaleidocycleState {
        let sys = ConstraintSystem::new(n, mode, c).unwrap();
        solve_slice(&sys, &SolverSettings::default()).state.unwrap()
    }

    fn polygon(n: usize) -> CenterLine {
        let pts = (0..n)
            .map(|k| {
                let a = TWO_PI * k as f64 / n as f64;
                Vec3::new(libm::cos(a), libm::sin(a), 0.0)
            })
            .collect();
        CenterLine::from_points(pts).unwrap()
    }

    #[test]
    fn square_coulomb() {
        let e = coulomb_kernel(polygon(4).points(), 1.0).unwrap();
        assert!((e - (4.0 / libm::sqrt(2.0) + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn two_point_kernels() {
        let p = [Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0)];
        assert!((coulomb_kernel(&p, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let q = [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)];
        let m = [Vec3::z(), -Vec3::z()];
        assert!((dipole_kernel(&q, &m).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(coulomb_kernel(&[Vec3::zeros(), Vec3::zeros()], 1.0), Err(Error::CoincidentCenters(0, 1)));
    }

    #[test]
    fn planar_polygon() {
        let line = polygon(9);
        assert_eq!(writhe(&line).unwrap(), 0.0);
        assert!((gauss_area(&line).unwrap() - TWO_PI).abs() < 1e-12);
        let e = bend_energy_of_edges(line.segments()).unwrap();
        let expected = 9.0 * (TWO_PI / 9.0) * (TWO_PI / 9.0);
        assert!((e - expected).abs() < 1e-12);
        assert!((tangent_arc_energy(&line) - expected).abs() < 1e-12);
    }

    #[test]
    fn bricard_values() {
        let s = solved(6, ClosureMode::NonOriented, 0.0);
        assert!((twist(&s) - 1.5).abs() < 1e-15);
        assert!((twist_sum(&s) - 1.5).abs() < 1e-10);
        let (h, defect) = half_twists(&s).unwrap();
        assert_eq!(h, 3);
        assert!(defect < 1e-6);
        let k = kirchhoff_energy(&s, 0.0, 1.0).unwrap();
        assert!((k - 6.0 * (PI / 2.0) * (PI / 2.0)).abs() < 1e-9);
        assert_eq!(dipole_energy(&s), Err(Error::ModeError));
    }

    #[test]
    fn kirchhoff_bend_only() {
        let s = solved(8, ClosureMode::NonOriented, 0.2);
        assert_eq!(kirchhoff_energy(&s, 1.0, 0.0).unwrap(), bend_energy(&s).unwrap());
    }

    #[test]
    fn writhe_flags_near_intersection() {
        let pts = alloc::vec![
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ];
        let line = CenterLine::from_points(pts).unwrap();
        assert!(matches!(writhe(&line), Err(Error::NumericalIllConditioning(..))));
    }

    #[test]
    fn observe_respects_mode() {
        let s = solved(7, ClosureMode::NonOriented, 0.1);
        let p = EnergyParams { alpha: 1.0, dipole: true };
        assert_eq!(observe(&s, &p), Err(Error::ModeError));
        let o = observe(&s, &EnergyParams::default()).unwrap();
        assert!(o.e_dipl.is_none());
        assert!(o.gauss_mismatch() < 1e-6);
    }
}
