//! Residual and Jacobian of the closure equations in gauge-fixed coordinates.
//!
//! The rigid rotations are removed by freezing `b_0 = (0, 0, 1)` and
//! `b_1 = (0, sqrt(1 - c^2), c)`. The unknowns are the `3 (n - 2)`
//! coordinates of `b_2 .. b_{n-1}`. The residual has exactly `2 n` rows in
//! this order:
//!
//! | rows                 | constraint                                   |
//! |----------------------|----------------------------------------------|
//! | `0 .. 3`             | `sum_{i=1..n} b_{i-1} x b_i` (closure)       |
//! | `3 .. n + 2`         | `b_{i-1} . b_i - c` for `i = 2 ..= n`        |
//! | `n + 2 .. 2 n`       | `b_i . b_i - 1` for `i = 2 ..= n - 1`        |
//!
//! `b_n` is `b_0` or `-b_0` according to the closure mode. Rows are not
//! rescaled.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ClosureMode, KaleidocycleState, Vec3};

/// Coordinates of `b_2 .. b_{n-1}` stacked into one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugedVariables {
    pub x: DVector<f64>,
}

impl GaugedVariables {
    pub fn from_hinges(free: &[Vec3]) -> Self {
        let mut x = DVector::zeros(3 * free.len());
        for (k, b) in free.iter().enumerate() {
            x.fixed_rows_mut::<3>(3 * k).copy_from(b);
        }
        GaugedVariables { x }
    }

    pub fn hinge(&self, k: usize) -> Vec3 {
        Vec3::new(self.x[3 * k], self.x[3 * k + 1], self.x[3 * k + 2])
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// How [`ConstraintSystem::initial_guess`] places the free hinges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitStrategy {
    /// A ring with `n`-fold rotational structure: the exact alternating
    /// pattern for even `n` at `c = 0` when its closure matches the mode,
    /// otherwise the twisted ring whose mean neighbour cosine is closest to `c`.
    Symmetric,
    /// [`InitStrategy::Symmetric`] plus uniform noise in `[-amplitude, amplitude]`.
    PerturbedSymmetric { amplitude: f64 },
    /// Each free hinge uniform on the sphere.
    Random,
}

impl FromStr for InitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(InitStrategy::Symmetric),
            "perturbed" | "perturbed-symmetric" => Ok(InitStrategy::PerturbedSymmetric { amplitude: 0.1 }),
            "random" => Ok(InitStrategy::Random),
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }
}

/// The closure equations for fixed `n`, closure mode and twist cosine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSystem {
    n: usize,
    mode: ClosureMode,
    c: f64,
}

fn skew(a: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

impl ConstraintSystem {
    pub const MIN_HINGES: usize = 6;

    pub fn new(n: usize, mode: ClosureMode, c: f64) -> Result<Self> {
        if n < Self::MIN_HINGES {
            return Err(Error::TooFewHinges { n, min: Self::MIN_HINGES });
        }
        if !c.is_finite() || c.abs() >= 1.0 {
            return Err(Error::InvalidParameter(format!("twist cosine must satisfy |c| < 1, got {c}")));
        }
        Ok(ConstraintSystem { n, mode, c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> ClosureMode {
        self.mode
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Same `n` and mode at another twist cosine.
    pub fn with_c(&self, c: f64) -> Result<Self> {
        ConstraintSystem::new(self.n, self.mode, c)
    }

    pub fn num_rows(&self) -> usize {
        2 * self.n
    }

    pub fn num_vars(&self) -> usize {
        3 * (self.n - 2)
    }

    /// The frozen pair `(b_0, b_1)`.
    pub fn gauge_pair(&self) -> (Vec3, Vec3) {
        let s = libm::sqrt(1.0 - self.c * self.c);
        (Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, s, self.c))
    }

    /// All `n` hinge directions.
    pub fn hinges(&self, x: &GaugedVariables) -> Vec<Vec3> {
        debug_assert_eq!(x.len(), self.num_vars());
        let (b0, b1) = self.gauge_pair();
        let mut b = Vec::with_capacity(self.n);
        b.push(b0);
        b.push(b1);
        b.extend((0..self.n - 2).map(|k| x.hinge(k)));
        b
    }

    /// `b_i` for `0 <= i <= n`.
    fn wrapped(&self, b: &[Vec3], i: usize) -> Vec3 {
        if i == self.n {
            b[0] * self.mode.wrap_sign()
        } else {
            b[i]
        }
    }

    pub fn state(&self, x: &GaugedVariables) -> KaleidocycleState {
        KaleidocycleState::new(self.mode, self.c, self.hinges(x)).expect("gauge hinges are finite")
    }

    pub fn residual(&self, x: &GaugedVariables) -> DVector<f64> {
        let n = self.n;
        let b = self.hinges(x);
        let mut r = DVector::zeros(self.num_rows());
        let closure = (1..=n).fold(Vec3::zeros(), |acc, i| {
            acc + self.wrapped(&b, i - 1).cross(&self.wrapped(&b, i))
        });
        r.fixed_rows_mut::<3>(0).copy_from(&closure);
        for i in 2..=n {
            r[3 + i - 2] = self.wrapped(&b, i - 1).dot(&self.wrapped(&b, i)) - self.c;
        }
        for i in 2..n {
            r[n + 2 + i - 2] = b[i].norm_squared() - 1.0;
        }
        r
    }

    /// Analytic Jacobian, `2 n` rows by `3 (n - 2)` columns.
    pub fn jacobian(&self, x: &GaugedVariables) -> DMatrix<f64> {
        let n = self.n;
        let b = self.hinges(x);
        let mut jac = DMatrix::zeros(self.num_rows(), self.num_vars());
        for j in 2..n {
            let col = 3 * (j - 2);
            // d/db_j of (b_{j-1} x b_j + b_j x b_{j+1})
            let block = skew(&(b[j - 1] - self.wrapped(&b, j + 1)));
            jac.fixed_view_mut::<3, 3>(0, col).copy_from(&block);
            // twist row i = j (b_{j-1} . b_j) and i = j + 1 (b_j . b_{j+1})
            let prev = b[j - 1];
            let next = self.wrapped(&b, j + 1);
            for k in 0..3 {
                jac[(3 + j - 2, col + k)] = prev[k];
                jac[(3 + j - 1, col + k)] = next[k];
                jac[(n + 2 + j - 2, col + k)] = 2.0 * b[j][k];
            }
        }
        jac
    }

    /// Partial derivative of the residual in `c`, through the explicit `-c`
    /// terms and the gauge hinge `b_1(c)`.
    pub fn residual_dc(&self, x: &GaugedVariables) -> DVector<f64> {
        let b = self.hinges(x);
        let s = libm::sqrt(1.0 - self.c * self.c);
        let db1 = Vec3::new(0.0, -self.c / s, 1.0);
        let mut d = DVector::zeros(self.num_rows());
        let closure = b[0].cross(&db1) + db1.cross(&b[2]);
        d.fixed_rows_mut::<3>(0).copy_from(&closure);
        for i in 2..=self.n {
            d[3 + i - 2] = -1.0;
        }
        d[3] += db1.dot(&b[2]);
        d
    }

    /// Express an arbitrary state in this system's gauge.
    ///
    /// The state is rotated so that `b_0` points along `+z` and `b_1` lies in
    /// the `yz` half-plane with positive `y`.
    pub fn gauge(&self, state: &KaleidocycleState) -> Result<GaugedVariables> {
        if state.n() != self.n {
            return Err(Error::InvalidParameter(format!(
                "state has {} hinges, system expects {}",
                state.n(),
                self.n
            )));
        }
        let aligned = gauge_align(state.hinges())?;
        Ok(GaugedVariables::from_hinges(&aligned[2..]))
    }

    /// Reflection across the gauge plane `x = 0`; maps solutions to solutions.
    pub fn mirror(&self, x: &GaugedVariables) -> GaugedVariables {
        let mut m = x.clone();
        for k in 0..self.n - 2 {
            m.x[3 * k] = -m.x[3 * k];
        }
        m
    }

    pub fn initial_guess(&self, strategy: InitStrategy, seed: u64) -> GaugedVariables {
        match strategy {
            InitStrategy::Symmetric => self.symmetric_guess(),
            InitStrategy::PerturbedSymmetric { amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut g = self.symmetric_guess();
                for v in g.x.iter_mut() {
                    *v += amplitude * (2.0 * rng.gen::<f64>() - 1.0);
                }
                g
            }
            InitStrategy::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let free: Vec<Vec3> = (2..self.n).map(|_| random_unit(&mut rng)).collect();
                GaugedVariables::from_hinges(&free)
            }
        }
    }

    fn symmetric_guess(&self) -> GaugedVariables {
        let n = self.n;
        if n % 2 == 0 && self.c == 0.0 {
            let closes_oriented = (n / 2) % 2 == 0;
            if closes_oriented == (self.mode == ClosureMode::Oriented) {
                let aligned = gauge_align(&alternating_ring(n)).expect("ring is non-degenerate");
                return GaugedVariables::from_hinges(&aligned[2..]);
            }
        }
        let mut best: Option<(f64, Vec<Vec3>)> = None;
        for h in 1..n {
            let ring = twisted_ring(n, h);
            let ring_mode = if h % 2 == 1 { ClosureMode::NonOriented } else { ClosureMode::Oriented };
            let flipped_mode = if n % 2 == 1 { ring_mode.flipped() } else { ring_mode };
            let mean = mean_neighbour_cosine(&ring, ring_mode);
            let mut consider = |m: ClosureMode, cos: f64, b: Vec<Vec3>| {
                if m != self.mode {
                    return;
                }
                let gap = (cos - self.c).abs();
                if best.as_ref().map_or(true, |(g, _)| gap < *g) {
                    best = Some((gap, b));
                }
            };
            consider(ring_mode, mean, ring.clone());
            let flipped = ring
                .iter()
                .enumerate()
                .map(|(i, v)| if i % 2 == 1 { -v } else { *v })
                .collect();
            consider(flipped_mode, -mean, flipped);
        }
        let (_, ring) = best.expect("every mode has a twisted ring candidate");
        let aligned = gauge_align(&ring).expect("ring is non-degenerate");
        GaugedVariables::from_hinges(&aligned[2..])
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = 2.0 * rng.gen::<f64>() - 1.0;
    let phi: f64 = 2.0 * PI * rng.gen::<f64>();
    let rho = libm::sqrt((1.0 - z * z).max(0.0));
    Vec3::new(rho * libm::cos(phi), rho * libm::sin(phi), z)
}

/// Hinges normal to a circle, turning `h` half-turns about it in one lap.
/// Closes with `b_n = (-1)^h b_0`.
fn twisted_ring(n: usize, h: usize) -> Vec<Vec3> {
    (0..n)
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / n as f64;
            let theta = PI * (h * i) as f64 / n as f64;
            let ct = libm::cos(theta);
            Vec3::new(ct * libm::cos(phi), ct * libm::sin(phi), libm::sin(theta))
        })
        .collect()
}

/// Every other hinge along `(-1)^k e_z`, the rest `(-1)^k w_k` with `w_k`
/// a regular `n/2`-gon in the `xy` plane. Exact at `c = 0`; closes oriented
/// when `n/2` is even and non-oriented otherwise.
pub(crate) fn alternating_ring(n: usize) -> Vec<Vec3> {
    let m = n / 2;
    let mut b = Vec::with_capacity(n);
    for k in 0..m {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let a = 2.0 * PI * k as f64 / m as f64;
        b.push(Vec3::new(0.0, 0.0, sign));
        b.push(Vec3::new(libm::cos(a), libm::sin(a), 0.0) * sign);
    }
    b
}

fn mean_neighbour_cosine(b: &[Vec3], mode: ClosureMode) -> f64 {
    let n = b.len();
    let sum: f64 = (0..n)
        .map(|i| {
            let next = if i + 1 == n { b[0] * mode.wrap_sign() } else { b[i + 1] };
            b[i].dot(&next)
        })
        .sum();
    sum / n as f64
}

/// Rotate all directions so that `b_0 -> +z` and `b_1` lands in the `yz`
/// half-plane with `y > 0`.
pub(crate) fn gauge_align(b: &[Vec3]) -> Result<Vec<Vec3>> {
    let ez = b[0].try_normalize(1e-300).ok_or_else(|| Error::Degenerate("zero hinge b_0".into()))?;
    let ey = (b[1] - ez * b[1].dot(&ez))
        .try_normalize(1e-12)
        .ok_or(Error::ParallelHinges(0, 1))?;
    let ex = ey.cross(&ez);
    let rot = Matrix3::from_rows(&[ex.transpose(), ey.transpose(), ez.transpose()]);
    Ok(b.iter().map(|v| rot * v).collect())
}
