//! States, centre lines and the classical mobility count.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

/// How the open chain closes up after `n` hinges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClosureMode {
    /// `b_n = b_0`.
    Oriented,
    /// `b_n = -b_0`, a discrete Möbius band.
    NonOriented,
}

impl ClosureMode {
    /// Sign `s` in `b_{n+k} = s b_k`.
    pub fn wrap_sign(self) -> f64 {
        match self {
            ClosureMode::Oriented => 1.0,
            ClosureMode::NonOriented => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ClosureMode::Oriented => ClosureMode::NonOriented,
            ClosureMode::NonOriented => ClosureMode::Oriented,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClosureMode::Oriented => "oriented",
            ClosureMode::NonOriented => "nonoriented",
        }
    }
}

impl fmt::Display for ClosureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClosureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "oriented" => Ok(ClosureMode::Oriented),
            "nonoriented" => Ok(ClosureMode::NonOriented),
            other => Err(Error::InvalidParameter(format!("unknown closure mode `{other}`"))),
        }
    }
}

/// Hinge directions of an `n`-Kaleidocycle together with its closure mode
/// and twist cosine `c`.
///
/// The constructor only checks shape (at least three finite hinges,
/// `|c| <= 1`); whether the constraint equations hold is reported by
/// [`validate_state`].
#[derive(Debug, Clone, PartialEq)]
pub struct KaleidocycleState {
    mode: ClosureMode,
    c: f64,
    b: Vec<Vec3>,
}

impl KaleidocycleState {
    pub fn new(mode: ClosureMode, c: f64, b: Vec<Vec3>) -> Result<Self> {
        if b.len() < 3 {
            return Err(Error::TooFewHinges { n: b.len(), min: 3 });
        }
        if !c.is_finite() || c.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!("twist cosine {c} outside [-1, 1]")));
        }
        if b.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidParameter("hinge directions must be finite".into()));
        }
        Ok(KaleidocycleState { mode, c, b })
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn mode(&self) -> ClosureMode {
        self.mode
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn hinges(&self) -> &[Vec3] {
        &self.b
    }

    /// `b_i` for any `i >= 0`, extended periodically with the mode's sign.
    pub fn hinge(&self, i: usize) -> Vec3 {
        let n = self.n();
        let wraps = i / n;
        let b = self.b[i % n];
        if wraps % 2 == 1 {
            b * self.mode.wrap_sign()
        } else {
            b
        }
    }

    /// Centre-line edge `e_i = b_i x b_{i+1}`.
    pub fn edge(&self, i: usize) -> Vec3 {
        self.hinge(i).cross(&self.hinge(i + 1))
    }

    /// Flip every other hinge: `b_i -> (-1)^i b_i`.
    ///
    /// The twist cosine changes sign. For odd `n` the closure mode flips
    /// too, because `b_n` picks up an extra sign.
    pub fn alternating_flip(&self) -> Self {
        let n = self.n();
        let b = self
            .b
            .iter()
            .enumerate()
            .map(|(i, v)| if i % 2 == 1 { -v } else { *v })
            .collect();
        let mode = if n % 2 == 1 { self.mode.flipped() } else { self.mode };
        KaleidocycleState { mode, c: -self.c, b }
    }

    /// Reflection `x -> -x`, which fixes the gauge plane spanned by
    /// `b_0 = e_z` and `b_1`.
    pub fn mirrored(&self) -> Self {
        let b = self.b.iter().map(|v| Vec3::new(-v.x, v.y, v.z)).collect();
        KaleidocycleState { mode: self.mode, c: self.c, b }
    }

    /// Apply the same rotation to every hinge direction.
    pub fn rotated(&self, rot: &nalgebra::Rotation3<f64>) -> Self {
        let b = self.b.iter().map(|v| rot * v).collect();
        KaleidocycleState { mode: self.mode, c: self.c, b }
    }

    /// Relabel hinges cyclically so that the old `b_k` becomes `b_0`.
    pub fn shifted(&self, k: usize) -> Self {
        let b = (0..self.n()).map(|i| self.hinge(i + k)).collect();
        KaleidocycleState { mode: self.mode, c: self.c, b }
    }
}

/// Closed polygon of hinge centres.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterLine {
    gamma: Vec<Vec3>,
    segments: Vec<Vec3>,
}

impl CenterLine {
    /// Closed polygon through `points`, the last one joined back to the first.
    pub fn from_points(points: Vec<Vec3>) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(Error::TooFewHinges { n, min: 3 });
        }
        let segments = (0..n).map(|i| points[(i + 1) % n] - points[i]).collect();
        Ok(CenterLine { gamma: points, segments })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.gamma
    }

    pub fn segments(&self) -> &[Vec3] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// `|sum_i e_i|`; zero for an exactly closed polygon.
    pub fn closure_defect(&self) -> f64 {
        self.segments.iter().fold(Vec3::zeros(), |acc, e| acc + e).norm()
    }

    pub fn translated(&self, shift: &Vec3) -> Self {
        CenterLine {
            gamma: self.gamma.iter().map(|p| p + shift).collect(),
            segments: self.segments.clone(),
        }
    }
}

/// Hinge centres from `gamma_{i+1} = gamma_i + b_i x b_{i+1}`, starting at `base`.
pub fn gamma_from_b(state: &KaleidocycleState, base: Vec3) -> Result<CenterLine> {
    let n = state.n();
    if n < 3 {
        return Err(Error::TooFewHinges { n, min: 3 });
    }
    let segments: Vec<Vec3> = (0..n).map(|i| state.edge(i)).collect();
    let scale = state.hinges().iter().map(|b| b.norm_squared()).fold(0.0, f64::max);
    for (i, e) in segments.iter().enumerate() {
        if e.norm() <= 1e-12 * scale.max(1.0) {
            return Err(Error::ParallelHinges(i, (i + 1) % n));
        }
    }
    let mut gamma = Vec::with_capacity(n);
    let mut p = base;
    for e in &segments[..n - 1] {
        gamma.push(p);
        p += e;
    }
    gamma.push(p);
    Ok(CenterLine { gamma, segments })
}

/// Chebychev–Grübler–Kutzbach count `6 (N - 1 - j) + sum f_i` for `N`
/// bodies and `j` joints of freedoms `f_i`.
pub fn mobility_estimate(num_bodies: usize, joint_dofs: &[u32]) -> i64 {
    let joints = joint_dofs.len() as i64;
    let freedoms: i64 = joint_dofs.iter().map(|f| i64::from(*f)).sum();
    6 * (num_bodies as i64 - 1 - joints) + freedoms
}

/// Constraint defects of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationSummary {
    /// `max_i | |b_i|^2 - 1 |`.
    pub unit_norm_defect: f64,
    /// `max_i | b_{i-1} . b_i - c |`, wrapping with the mode's sign.
    pub twist_defect: f64,
    /// `| sum_i b_{i-1} x b_i |`.
    pub closure_defect: f64,
    pub valid: bool,
}

impl ValidationSummary {
    pub fn max_defect(&self) -> f64 {
        self.unit_norm_defect.max(self.twist_defect).max(self.closure_defect)
    }
}

pub fn validate_state(state: &KaleidocycleState, tol: f64) -> ValidationSummary {
    let n = state.n();
    let unit_norm_defect = state
        .hinges()
        .iter()
        .map(|b| (b.norm_squared() - 1.0).abs())
        .fold(0.0, f64::max);
    let twist_defect = (1..=n)
        .map(|i| (state.hinge(i - 1).dot(&state.hinge(i)) - state.c()).abs())
        .fold(0.0, f64::max);
    let closure_defect = (1..=n)
        .fold(Vec3::zeros(), |acc, i| acc + state.hinge(i - 1).cross(&state.hinge(i)))
        .norm();
    let valid = unit_norm_defect <= tol && twist_defect <= tol && closure_defect <= tol;
    ValidationSummary { unit_norm_defect, twist_defect, closure_defect, valid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn z() -> Vec3 {
        Vec3::new(0.0, 0.0, 1.0)
    }

    #[test]
    fn parallel_hinges_are_rejected() {
        let s = KaleidocycleState::new(ClosureMode::Oriented, 1.0, vec![z(); 7]).unwrap();
        assert!(matches!(gamma_from_b(&s, Vec3::zeros()), Err(Error::ParallelHinges(0, 1))));
    }

    #[test]
    fn orthogonal_pair_gives_unit_edge() {
        let b = vec![z(), Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0)];
        let s = KaleidocycleState::new(ClosureMode::Oriented, 0.0, b).unwrap();
        let e0 = s.edge(0);
        assert_eq!(e0, Vec3::new(-1.0, 0.0, 0.0));
        assert!((e0.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fewer_than_three_hinges_rejected() {
        assert!(matches!(
            KaleidocycleState::new(ClosureMode::Oriented, 0.0, vec![z(), z()]),
            Err(Error::TooFewHinges { n: 2, min: 3 })
        ));
    }

    #[test]
    fn mobility_counts() {
        assert_eq!(mobility_estimate(6, &[1; 6]), 0);
        assert_eq!(mobility_estimate(9, &[1; 9]), 3);
        assert_eq!(mobility_estimate(2, &[1]), 1);
        for n in 1..40usize {
            assert_eq!(mobility_estimate(n, &vec![1; n]), n as i64 - 6);
        }
    }

    #[test]
    fn scaled_hinge_is_invalid() {
        let b: Vec<Vec3> = (0..7)
            .map(|i| {
                let t = i as f64;
                Vec3::new(libm::cos(t), libm::sin(t), 0.0)
            })
            .collect();
        let mut scaled = b.clone();
        scaled[3] *= 1.1;
        let s = KaleidocycleState::new(ClosureMode::Oriented, 0.0, scaled).unwrap();
        let v = validate_state(&s, 1e-8);
        assert!(!v.valid);
        assert!((v.unit_norm_defect - 0.21).abs() < 1e-12);
    }

    #[test]
    fn trivial_parallel_state_is_valid() {
        let s = KaleidocycleState::new(ClosureMode::Oriented, 1.0, vec![z(); 9]).unwrap();
        let v = validate_state(&s, 0.0);
        assert!(v.valid);
    }

    #[test]
    fn nonoriented_wrap_negates() {
        let b = vec![z(), Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0)];
        let s = KaleidocycleState::new(ClosureMode::NonOriented, 0.0, b).unwrap();
        assert_eq!(s.hinge(3), -z());
        assert_eq!(s.hinge(6), z());
        // (-b_0) x (-b_1) = b_0 x b_1
        assert_eq!(s.hinge(3).cross(&s.hinge(4)), s.edge(0));
    }

    #[test]
    fn mode_parses() {
        assert_eq!("non-oriented".parse::<ClosureMode>().unwrap(), ClosureMode::NonOriented);
        assert_eq!("Oriented".parse::<ClosureMode>().unwrap(), ClosureMode::Oriented);
        assert!("twisted".parse::<ClosureMode>().is_err());
    }
}
