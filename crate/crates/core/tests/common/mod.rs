#![allow(dead_code)]

use kaleidocycle_core::{
    solve_slice, CenterLine, ClosureMode, ConstraintSystem, KaleidocycleState, SolverSettings, Vec3,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn solved(n: usize, mode: ClosureMode, c: f64) -> KaleidocycleState {
    let sys = ConstraintSystem::new(n, mode, c).unwrap();
    let rep = solve_slice(&sys, &SolverSettings::default());
    let summary = rep.summary();
    rep.state.unwrap_or_else(|| panic!("n={n} {mode} c={c}: {summary}"))
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let l = v.norm();
        if l > 0.1 && l <= 1.0 {
            return v / l;
        }
    }
}

pub fn random_polygon(k: usize, rng: &mut ChaCha8Rng) -> CenterLine {
    let pts = (0..k)
        .map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    CenterLine::from_points(pts).unwrap()
}

/// Signed crossing count of the polygon seen along `dir`.
pub fn signed_crossings(line: &CenterLine, dir: &Vec3) -> i64 {
    let u = if dir.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = dir.cross(&u).normalize();
    let e2 = dir.cross(&e1);
    let pts = line.points();
    let n = pts.len();
    let flat = |p: &Vec3| (p.dot(&e1), p.dot(&e2));
    let mut total = 0;
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            let (pa, pb, pc, pd) = (flat(&a), flat(&b), flat(&c), flat(&d));
            let r = (pb.0 - pa.0, pb.1 - pa.1);
            let q = (pd.0 - pc.0, pd.1 - pc.1);
            let den = r.0 * q.1 - r.1 * q.0;
            if den == 0.0 {
                continue;
            }
            let w = (pc.0 - pa.0, pc.1 - pa.1);
            let s = (w.0 * q.1 - w.1 * q.0) / den;
            let t = (w.0 * r.1 - w.1 * r.0) / den;
            if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
                continue;
            }
            let xi = a + (b - a) * s;
            let xj = c + (d - c) * t;
            let sign = (b - a).cross(&(d - c)).dot(&(xi - xj));
            total += if sign > 0.0 { 1 } else { -1 };
        }
    }
    total
}

/// Mean and standard error of the signed crossing number over random directions.
pub fn projected_writhe(line: &CenterLine, samples: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let counts: Vec<f64> = (0..samples).map(|_| signed_crossings(line, &random_unit(rng)) as f64).collect();
    let mean = counts.iter().sum::<f64>() / samples as f64;
    let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (samples as f64 - 1.0);
    (mean, (var / samples as f64).sqrt())
}

/// `(max - min) / |mean|`.
pub fn relative_spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (max - min) / mean.abs()
}

/// Central-difference Jacobian of the residual.
pub fn fd_jacobian(sys: &ConstraintSystem, x: &kaleidocycle_core::GaugedVariables, h: f64) -> nalgebra::DMatrix<f64> {
    let rows = sys.num_rows();
    let mut out = nalgebra::DMatrix::zeros(rows, x.len());
    for k in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp.x[k] += h;
        xm.x[k] -= h;
        let d = (sys.residual(&xp) - sys.residual(&xm)) / (2.0 * h);
        out.set_column(k, &d);
    }
    out
}
