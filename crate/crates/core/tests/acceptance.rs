//! One line per acceptance criterion. Run with
//! `cargo test -p kaleidocycle-core --test acceptance`; set
//! `ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit.

mod common;

use std::time::Instant;

use kaleidocycle_core::observables::{dipole_energy, half_twists, tangent_arc_energy, twist};
use kaleidocycle_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{fd_jacobian, projected_writhe, random_polygon, relative_spread, solved};

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: usize, ok: bool, detail: String) {
        if !ok {
            self.failures += 1;
        }
        println!("{} [{id:>2}] {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

struct Traced {
    label: String,
    trace: MotionTrace,
}

fn extreme(n: usize, mode: ClosureMode, side: Side) -> ExtremalResult {
    find_extreme_c(n, mode, side, 1e-6, &SolverSettings::default())
        .unwrap_or_else(|e| panic!("n={n} {mode} {side}: {e}"))
}

fn traced(label: &str, start: &KaleidocycleState) -> Traced {
    let mut trace = trace_rotation(start, &TraceSettings::default(), &SolverSettings::default())
        .unwrap_or_else(|e| panic!("{label}: {e}"));
    trace.observe(&EnergyParams::for_mode(start.mode())).unwrap();
    Traced { label: label.to_string(), trace }
}

fn main() {
    let t0 = Instant::now();
    let settings = SolverSettings::default();
    let mut report = Report { failures: 0 };

    // 1. extremal values
    let table = [(7, 0.2954, 5e-4), (8, 0.4700, 5e-4), (9, 0.5852, 5e-4), (15, 0.8533, 5e-4), (38, 0.9773, 1e-3)];
    let t1 = Instant::now();
    let upper: Vec<ExtremalResult> =
        table.iter().map(|&(n, _, _)| extreme(n, ClosureMode::NonOriented, Side::Upper)).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for ((n, want, tol), r) in table.iter().zip(&upper) {
        ok &= (r.c_n - want).abs() <= *tol;
        parts.push(format!("c_{n}={:.6}", r.c_n));
    }
    let elapsed = t1.elapsed().as_secs_f64();
    ok &= elapsed < 300.0;
    report.line(1, ok, format!("extremal values {} in {elapsed:.1}s", parts.join(" ")));

    // 2. twist
    let bricard = solved(6, ClosureMode::NonOriented, 0.0);
    let tw_table = [1.416, 1.377, 1.355, 1.309, 1.291];
    let mut ok = (twist(&bricard) - 1.5).abs() <= 1e-3;
    let mut parts = vec![format!("Tw_6={:.4}", twist(&bricard))];
    for (((n, _, _), r), want) in table.iter().zip(&upper).zip(tw_table) {
        let tw = twist(&r.witness);
        ok &= (tw - want).abs() <= 1e-3;
        parts.push(format!("Tw_{n}={tw:.4}"));
    }
    report.line(2, ok, format!("twist {}", parts.join(" ")));

    // 3. bend energy
    let eb_table = [11.9, 10.4, 9.24, 5.60, 2.23];
    let mut ok = true;
    let mut parts = Vec::new();
    for (((n, _, _), r), want) in table.iter().zip(&upper).zip(eb_table) {
        let e = observables::bend_energy(&r.witness).unwrap();
        ok &= ((e - want) / want).abs() <= 0.01;
        parts.push(format!("E_bend_{n}={e:.4}"));
    }
    report.line(3, ok, format!("bend energy {}", parts.join(" ")));

    // 4. dipole energy
    let dip_table = [(7, -4.23), (9, -10.0), (15, -83.7)];
    let oriented: Vec<ExtremalResult> =
        dip_table.iter().map(|&(n, _)| extreme(n, ClosureMode::Oriented, Side::Lower)).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for ((n, want), r) in dip_table.iter().zip(&oriented) {
        let e = dipole_energy(&r.witness).unwrap();
        ok &= ((e - want) / want).abs() <= 0.015;
        parts.push(format!("E_dipl_{n}={e:.3}"));
    }
    let na = dipole_energy(&upper[0].witness);
    ok &= na == Err(Error::ModeError);
    parts.push(format!("non-oriented -> {}", if na == Err(Error::ModeError) { "ModeError" } else { "no error" }));
    report.line(4, ok, format!("dipole energy {}", parts.join(" ")));

    // traces shared by 5, 6 and 9
    let lower8 = extreme(8, ClosureMode::NonOriented, Side::Lower);
    let traces = vec![
        (3, traced("n=7 +c_7", &upper[0].witness)),
        (4, traced("n=7 -c_7", &oriented[0].witness)),
        (3, traced("n=8 +c_8", &upper[1].witness)),
        (5, traced("n=8 -c_8", &lower8.witness)),
        (3, traced("n=9 +c_9", &upper[2].witness)),
        (6, traced("n=9 -c_9", &oriented[1].witness)),
    ];

    // 5. half twists
    let mut ok = true;
    let mut parts = Vec::new();
    let mut worst_defect: f64 = 0.0;
    for (want, t) in &traces {
        let all = t.trace.observables.iter().all(|o| o.half_twists == *want);
        let d = t.trace.observables.iter().map(|o| o.integrality_defect).fold(0.0, f64::max);
        worst_defect = worst_defect.max(d);
        ok &= all;
        parts.push(format!("{}: h={}{}", t.label, want, if all { "" } else { " (mismatch)" }));
    }
    let mut others: Vec<KaleidocycleState> = upper.iter().chain(&oriented).map(|r| r.witness.clone()).collect();
    others.push(bricard.clone());
    others.push(lower8.witness.clone());
    for s in &others {
        worst_defect = worst_defect.max(half_twists(s).map(|(_, d)| d).unwrap_or(f64::INFINITY));
    }
    ok &= worst_defect <= 1e-6;
    report.line(5, ok, format!("half twists {}; max defect {worst_defect:.1e}", parts.join(", ")));

    // 6. energy constancy on closed n = 7 and n = 9 traces
    let mut ok = true;
    let mut parts = Vec::new();
    for (_, t) in traces.iter().filter(|(_, t)| t.label.starts_with("n=7") || t.label.starts_with("n=9")) {
        let obs = &t.trace.observables;
        let long = t.trace.closed && t.trace.len() >= 500;
        let bend = relative_spread(&obs.iter().map(|o| o.e_bend).collect::<Vec<_>>());
        let clmb = relative_spread(&obs.iter().map(|o| o.e_clmb).collect::<Vec<_>>());
        let mut line = format!(
            "{} ({} states, closed={}): bend {bend:.1e} clmb {clmb:.1e}",
            t.label,
            t.trace.len(),
            t.trace.closed
        );
        ok &= long && bend <= 1e-3 && clmb <= 1e-3;
        if obs[0].e_dipl.is_some() {
            let dipl = relative_spread(&obs.iter().map(|o| o.e_dipl.unwrap()).collect::<Vec<_>>());
            ok &= dipl <= 1e-3;
            line.push_str(&format!(" dipl {dipl:.1e}"));
        }
        parts.push(line);
    }
    report.line(6, ok, format!("energy constancy (spread <= 1e-3) {}", parts.join("; ")));

    // 7. DOF phenomena
    let interior = solved(9, ClosureMode::NonOriented, 0.3);
    let d6 = probe_local_dof(&bricard, 32, 1e-4, &settings).unwrap();
    let d9 = probe_local_dof(&interior, 32, 1e-4, &settings).unwrap();
    let d9x = probe_local_dof(&upper[2].witness, 32, 1e-4, &settings).unwrap();
    let bricard_trace = trace_rotation(&bricard, &TraceSettings::default(), &settings).unwrap();
    let ok = d6 == 1 && d9 == 3 && d9x == 1 && bricard_trace.closed;
    report.line(
        7,
        ok,
        format!(
            "local DOF n=6/c=0 -> {d6} (mobility estimate {}), n=9/c=0.3 -> {d9}, n=9/c_9 -> {d9x}; Bricard trace closed={} after {} states",
            mobility_estimate(6, &[1; 6]),
            bricard_trace.closed,
            bricard_trace.len()
        ),
    );

    // 8. feasibility structure
    let grid: Vec<f64> = (-19..=19).map(|k| k as f64 * 0.05).collect();
    let s6 = scan_feasibility(6, ClosureMode::NonOriented, &grid, &settings).unwrap();
    let ok6 = s6.iter().all(|p| p.feasible == (p.c == 0.0));
    let c7 = upper[0].c_n;
    let s7 = scan_feasibility(7, ClosureMode::NonOriented, &grid, &settings).unwrap();
    let ok7 = s7.iter().all(|p| p.feasible == (p.c <= c7));
    let s8 = scan_feasibility(8, ClosureMode::Oriented, &[-0.9, 0.0, 0.9], &settings).unwrap();
    let ok8 = s8.iter().all(|p| p.feasible);
    let count = |s: &[FeasibilityPoint]| s.iter().filter(|p| p.feasible).count();
    report.line(
        8,
        ok6 && ok7 && ok8,
        format!(
            "feasibility n=6 NO {}/{} feasible (c=0 only: {ok6}), n=7 NO {}/{} (c <= c_7 only: {ok7}), n=8 O {}/3",
            count(&s6),
            s6.len(),
            count(&s7),
            s7.len(),
            count(&s8)
        ),
    );

    // 9. numerical hygiene
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut jac_err: f64 = 0.0;
    for k in 0..100 {
        let n = 6 + k % 5;
        let mode = if rng.gen::<bool>() { ClosureMode::Oriented } else { ClosureMode::NonOriented };
        let sys = ConstraintSystem::new(n, mode, rng.gen_range(-0.95..0.95)).unwrap();
        let x = sys.initial_guess(InitStrategy::Random, rng.gen());
        let exact = sys.jacobian(&x);
        let approx = fd_jacobian(&sys, &x, 1e-6);
        let scale = exact.amax().max(1.0);
        jac_err = jac_err.max((exact - approx).amax() / scale);
    }
    let mut writhe_ok = true;
    let mut wparts = Vec::new();
    for _ in 0..5 {
        let line = random_polygon(10, &mut rng);
        let wr = observables::writhe(&line).unwrap();
        let (mean, se) = projected_writhe(&line, 200, &mut rng);
        writhe_ok &= (wr - mean).abs() <= 3.0 * se;
        wparts.push(format!("{:.2}sigma", (wr - mean).abs() / se));
    }
    let mut states: Vec<&KaleidocycleState> = others.iter().collect();
    for (_, t) in &traces {
        states.extend(t.trace.states.iter());
    }
    states.extend(bricard_trace.states.iter());
    let mut gauss_err: f64 = 0.0;
    let mut arc_err: f64 = 0.0;
    for s in &states {
        let o = observe(s, &EnergyParams::default()).unwrap();
        gauss_err = gauss_err.max(o.gauss_mismatch());
        let line = gamma_from_b(s, Vec3::zeros()).unwrap();
        arc_err = arc_err.max((o.e_bend - tangent_arc_energy(&line)).abs());
    }
    let ok = jac_err < 1e-6 && writhe_ok && gauss_err <= 1e-6 && arc_err <= 1e-10;
    report.line(
        9,
        ok,
        format!(
            "hygiene: Jacobian rel err {jac_err:.1e}; writhe vs projections [{}]; Gauss area mismatch {gauss_err:.1e} and E_bend vs arcs {arc_err:.1e} over {} states",
            wparts.join(" "),
            states.len()
        ),
    );

    // 10. duality
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, n) in [(0, 7), (1, 9)] {
        let up = upper[if n == 7 { 0 } else { 2 }].c_n;
        let low = oriented[k].c_n;
        let gap = (low.abs() - up).abs();
        ok &= gap <= 2e-6;
        parts.push(format!("n={n}: |{low:.7}| vs {up:.7} (gap {gap:.1e})"));
    }
    report.line(10, ok, format!("duality {}", parts.join(", ")));

    println!(
        "{} of 10 criteria passed in {:.1}s",
        10 - report.failures,
        t0.elapsed().as_secs_f64()
    );
    if report.failures > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
