//! The `kaleidocycle` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 mathematical failure, 3 I/O.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use kaleidocycle_core::extremal::find_extreme_c_with;
use kaleidocycle_core::{
    complete_scan, observe, scan_point, solve_slice, trace_rotation, ClosureMode,
    ConstraintSystem, EnergyParams, Error, KaleidocycleState, Side,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{ConfigFile, Profile, RunSettings};
use crate::document::{load_state, save_state, LoadReport, StateDocument};
use crate::error::IoError;
use crate::export::{export_mesh, export_net_svg, export_trace_csv, fmt_num, SvgOptions};
use crate::provenance::Provenance;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MATH: i32 = 2;
pub const EXIT_IO: i32 = 3;

const MIN_N: usize = 6;
const TABLE_NS: [usize; 6] = [6, 7, 8, 9, 15, 38];

#[derive(Debug, Parser)]
#[command(name = "kaleidocycle", version, about = "Solve, trace and export n-Kaleidocycles")]
struct Cli {
    /// Tolerance profile: quick or strict.
    #[arg(long, global = true, default_value = "strict")]
    profile: Profile,
    /// Seed for randomised restarts and probes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `key = value` file overriding profile defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the closure equations at one twist parameter.
    Solve {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        mode: String,
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        /// Write the solved state here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find the boundary c_n of the feasible range.
    Extreme {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        mode: String,
        #[arg(long, default_value = "upper")]
        side: String,
        /// Bracket width in c.
        #[arg(long)]
        tol: Option<f64>,
        /// Decimal places printed for c_n.
        #[arg(long, default_value_t = 6)]
        digits: usize,
        /// Write the witness state here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Follow the rotating motion through a state and write a CSV.
    Trace {
        #[arg(long)]
        input: PathBuf,
        /// Maximum number of steps.
        #[arg(long)]
        steps: Option<usize>,
        /// Chord length between states.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write every state as a JSON document into this directory.
        #[arg(long)]
        states_dir: Option<PathBuf>,
    },
    /// Print energies, twist, writhe and related quantities of a state.
    Observables {
        #[arg(long)]
        input: PathBuf,
        /// Exponent of the Coulomb kernel.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Also evaluate the dipole energy (oriented states only).
        #[arg(long)]
        dipole: bool,
    },
    /// Feasibility profile over an evenly spaced grid of c.
    Scan {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        mode: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the tetrahedra as OBJ and/or the unfolded net as SVG.
    Export {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        net: Option<PathBuf>,
        /// Half length of each hinge edge.
        #[arg(long, default_value_t = 0.5)]
        half_length: f64,
        /// Width of the glue tabs; 0 for none.
        #[arg(long, default_value_t = 0.1)]
        margin: f64,
        /// Millimetres per length unit in the SVG.
        #[arg(long, default_value_t = 20.0)]
        scale: f64,
    },
    /// Recompute the table of extreme values for n = 6, 7, 8, 9, 15, 38.
    ReproduceTable1 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failed command and its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn math(message: impl Into<String>) -> Self {
        Failure { code: EXIT_MATH, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::math(e.to_string())
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::InvalidState(e) => e.into(),
            e => Failure { code: EXIT_IO, message: e.to_string() },
        }
    }
}

type Outcome = Result<(), Failure>;

/// Run with explicit arguments (the first is the program name) and streams.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let command: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, command, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

struct Context {
    settings: RunSettings,
    provenance: Provenance,
}

impl Context {
    fn metadata(&self, extra: Map<String, Value>) -> Map<String, Value> {
        let mut m = self.provenance.to_map();
        m.extend(extra);
        m
    }
}

fn execute(cli: Cli, command: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    validate(&cli.command)?;
    let mut settings = RunSettings::for_profile(cli.profile);
    if let Some(path) = &cli.config {
        if !path.exists() {
            return Err(Failure::usage(format!("config file {} does not exist", path.display())));
        }
        let file = ConfigFile::load(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        settings.apply(&file);
    }
    if let Some(seed) = cli.seed {
        settings.solver.seed = seed;
    }
    let provenance = Provenance::new(command, &settings.solver);
    let ctx = Context { settings, provenance };
    match cli.command {
        Command::Solve { n, mode, c, out: path } => cmd_solve(&ctx, n, parse_mode(&mode)?, c, path.as_deref(), out),
        Command::Extreme { n, mode, side, tol, digits, out: path } => {
            cmd_extreme(&ctx, n, parse_mode(&mode)?, parse_side(&side)?, tol, digits, path.as_deref(), out)
        }
        Command::Trace { input, steps, step, out: path, states_dir } => {
            cmd_trace(&ctx, &input, steps, step, &path, states_dir.as_deref(), out, err)
        }
        Command::Observables { input, alpha, dipole } => cmd_observables(&input, alpha, dipole, out, err),
        Command::Scan { n, mode, from, to, points, out: path } => {
            cmd_scan(&ctx, n, parse_mode(&mode)?, &grid(from, to, points), path.as_deref(), out)
        }
        Command::Export { input, mesh, net, half_length, margin, scale } => {
            cmd_export(&ctx, &input, mesh.as_deref(), net.as_deref(), half_length, margin, scale, out, err)
        }
        Command::ReproduceTable1 { out: path } => cmd_table(&ctx, path.as_deref(), out),
    }
}

/// Every flag problem at once, before any computation.
fn validate(command: &Command) -> Outcome {
    let mut problems = Vec::new();
    let check_n = |n: usize, problems: &mut Vec<String>| {
        if n < MIN_N {
            problems.push(format!("--n must be at least {MIN_N}, got {n}"));
        }
    };
    let check_mode = |mode: &str, problems: &mut Vec<String>| {
        if let Err(e) = mode.parse::<ClosureMode>() {
            problems.push(format!("--mode: {e}"));
        }
    };
    let check_c = |name: &str, c: f64, problems: &mut Vec<String>| {
        if !c.is_finite() || c.abs() >= 1.0 {
            problems.push(format!("{name} must lie in (-1, 1), got {c}"));
        }
    };
    let check_input = |path: &Path, problems: &mut Vec<String>| {
        if !path.is_file() {
            problems.push(format!("input file {} does not exist", path.display()));
        }
    };
    match command {
        Command::Solve { n, mode, c, .. } => {
            check_n(*n, &mut problems);
            check_mode(mode, &mut problems);
            check_c("--c", *c, &mut problems);
        }
        Command::Extreme { n, mode, side, tol, .. } => {
            check_n(*n, &mut problems);
            check_mode(mode, &mut problems);
            if let Err(e) = side.parse::<Side>() {
                problems.push(format!("--side: {e}"));
            }
            if let Some(t) = tol {
                if !(*t > 0.0) {
                    problems.push(format!("--tol must be positive, got {t}"));
                }
            }
        }
        Command::Trace { input, steps, step, .. } => {
            check_input(input, &mut problems);
            if *steps == Some(0) {
                problems.push("--steps must be positive".into());
            }
            if let Some(h) = step {
                if !(*h > 0.0) {
                    problems.push(format!("--step must be positive, got {h}"));
                }
            }
        }
        Command::Observables { input, alpha, .. } => {
            check_input(input, &mut problems);
            if !alpha.is_finite() {
                problems.push(format!("--alpha must be finite, got {alpha}"));
            }
        }
        Command::Scan { n, mode, from, to, points, .. } => {
            check_n(*n, &mut problems);
            check_mode(mode, &mut problems);
            check_c("--from", *from, &mut problems);
            check_c("--to", *to, &mut problems);
            if from > to {
                problems.push(format!("--from ({from}) exceeds --to ({to})"));
            }
            if *points == 0 {
                problems.push("the grid is empty (--points 0)".into());
            }
        }
        Command::Export { input, mesh, net, half_length, margin, scale } => {
            check_input(input, &mut problems);
            if mesh.is_none() && net.is_none() {
                problems.push("nothing to export: give --mesh and/or --net".into());
            }
            if !(*half_length >= 0.0) {
                problems.push(format!("--half-length must be non-negative, got {half_length}"));
            }
            if !(*margin >= 0.0) {
                problems.push(format!("--margin must be non-negative, got {margin}"));
            }
            if !(*scale > 0.0) {
                problems.push(format!("--scale must be positive, got {scale}"));
            }
        }
        Command::ReproduceTable1 { .. } => {}
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::usage(format!("invalid arguments:\n  - {}", problems.join("\n  - "))))
    }
}

fn parse_mode(s: &str) -> Result<ClosureMode, Failure> {
    s.parse().map_err(|e: Error| Failure::usage(e.to_string()))
}

fn parse_side(s: &str) -> Result<Side, Failure> {
    s.parse().map_err(|e: Error| Failure::usage(e.to_string()))
}

/// `points` evenly spaced values from `from` to `to` inclusive.
pub fn grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..points)
            .map(|k| if k + 1 == points { to } else { from + (to - from) * k as f64 / (points - 1) as f64 })
            .collect(),
    }
}

fn io_out(e: std::io::Error) -> Failure {
    Failure { code: EXIT_IO, message: format!("writing output: {e}") }
}

fn load_input(path: &Path, err: &mut dyn Write) -> Result<LoadReport, Failure> {
    // a state file that does not describe a state is bad input, not a failed computation
    let report = load_state(path).map_err(|e| Failure { code: EXIT_IO, message: e.to_string() })?;
    if let Some(w) = &report.warning {
        writeln!(err, "warning: {}: {w}", path.display()).map_err(io_out)?;
    }
    if let Some(note) = &report.gauge_note {
        writeln!(err, "note: {}: {note}", path.display()).map_err(io_out)?;
    }
    Ok(report)
}

fn cmd_solve(ctx: &Context, n: usize, mode: ClosureMode, c: f64, path: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let system = ConstraintSystem::new(n, mode, c)?;
    let report = solve_slice(&system, &ctx.settings.solver);
    writeln!(out, "status: {:?}", report.status).map_err(io_out)?;
    writeln!(out, "residual: {:e}", report.residual_norm).map_err(io_out)?;
    writeln!(out, "iterations: {}", report.iterations).map_err(io_out)?;
    writeln!(out, "restarts: {}", report.restarts_used).map_err(io_out)?;
    let Some(state) = report.state.as_ref().filter(|_| report.converged()) else {
        return Err(Failure::math(format!("no solution at n = {n}, {mode}, c = {c}: {}", report.summary())));
    };
    if let Some(path) = path {
        let mut extra = Map::new();
        extra.insert("residual".into(), json!(report.residual_norm));
        let doc = StateDocument::from_state(state, Some(ctx.metadata(extra)));
        save_state(path, &doc)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_extreme(
    ctx: &Context,
    n: usize,
    mode: ClosureMode,
    side: Side,
    tol: Option<f64>,
    digits: usize,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Outcome {
    let mut options = ctx.settings.extremal;
    if let Some(t) = tol {
        options.tol_c = t;
    }
    let r = find_extreme_c_with(n, mode, side, &options, &ctx.settings.solver)?;
    writeln!(out, "n: {n}").map_err(io_out)?;
    writeln!(out, "mode: {mode}").map_err(io_out)?;
    writeln!(out, "side: {side}").map_err(io_out)?;
    writeln!(out, "c_n: {:.*}", digits, r.c_n).map_err(io_out)?;
    writeln!(out, "bracket: [{}, {}]", r.bracket.0, r.bracket.1).map_err(io_out)?;
    writeln!(out, "polished: {}", r.polished).map_err(io_out)?;
    if let Some(path) = path {
        let mut extra = Map::new();
        extra.insert("side".into(), json!(side.as_str()));
        extra.insert("c_n".into(), json!(r.c_n));
        extra.insert("bracket".into(), json!([r.bracket.0, r.bracket.1]));
        extra.insert("polished".into(), json!(r.polished));
        extra.insert("tol_c".into(), json!(options.tol_c));
        let doc = StateDocument::from_state(&r.witness, Some(ctx.metadata(extra)));
        save_state(path, &doc)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_trace(
    ctx: &Context,
    input: &Path,
    steps: Option<usize>,
    step: Option<f64>,
    path: &Path,
    states_dir: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let start = load_input(input, err)?.state;
    let mut trace_settings = ctx.settings.trace;
    if let Some(s) = steps {
        trace_settings.max_steps = s;
    }
    if let Some(h) = step {
        trace_settings.step = h;
    }
    let mut trace = trace_rotation(&start, &trace_settings, &ctx.settings.solver)?;
    if trace.start_dof > 1 {
        writeln!(
            err,
            "warning: the start has {} local degrees of freedom; following the first null direction",
            trace.start_dof
        )
        .map_err(io_out)?;
    }
    trace.observe(&EnergyParams::for_mode(start.mode()))?;
    export_trace_csv(&trace, path)?;
    if let Some(dir) = states_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure::from(IoError::Io { path: dir.to_path_buf(), source: e }))?;
        for (k, s) in trace.states.iter().enumerate() {
            let mut extra = Map::new();
            extra.insert("trace_index".into(), json!(k));
            extra.insert("arclength".into(), json!(trace.arclength[k]));
            let doc = StateDocument::from_state(s, Some(ctx.metadata(extra)));
            save_state(&dir.join(format!("state_{k:05}.json")), &doc)?;
        }
    }
    writeln!(out, "states: {}", trace.len()).map_err(io_out)?;
    writeln!(out, "closed: {}", trace.closed).map_err(io_out)?;
    writeln!(out, "arclength: {}", trace.arclength.last().copied().unwrap_or(0.0)).map_err(io_out)?;
    writeln!(out, "start_dof: {}", trace.start_dof).map_err(io_out)?;
    Ok(())
}

fn cmd_observables(input: &Path, alpha: f64, dipole: bool, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let state = load_input(input, err)?.state;
    let o = observe(&state, &EnergyParams { alpha, dipole })?;
    writeln!(out, "n: {}", state.n()).map_err(io_out)?;
    writeln!(out, "mode: {}", state.mode()).map_err(io_out)?;
    writeln!(out, "c: {}", state.c()).map_err(io_out)?;
    writeln!(out, "e_bend: {}", o.e_bend).map_err(io_out)?;
    writeln!(out, "e_clmb: {}", o.e_clmb).map_err(io_out)?;
    writeln!(out, "alpha: {}", o.alpha).map_err(io_out)?;
    match o.e_dipl {
        Some(v) => writeln!(out, "e_dipl: {v}"),
        None => writeln!(out, "e_dipl: NA"),
    }
    .map_err(io_out)?;
    writeln!(out, "tw: {}", o.tw).map_err(io_out)?;
    writeln!(out, "wr: {}", o.wr).map_err(io_out)?;
    writeln!(out, "half_twists: {}", o.half_twists).map_err(io_out)?;
    writeln!(out, "integrality_defect: {:e}", o.integrality_defect).map_err(io_out)?;
    writeln!(out, "gauss_area: {}", o.gauss_area).map_err(io_out)?;
    Ok(())
}

fn cmd_scan(
    ctx: &Context,
    n: usize,
    mode: ClosureMode,
    grid: &[f64],
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Outcome {
    let solver = &ctx.settings.solver;
    let first = grid.par_iter().map(|&c| scan_point(n, mode, c, solver)).collect::<Result<Vec<_>, _>>()?;
    let points = complete_scan(n, mode, first, solver);
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::from(IoError::from(e));
    w.write_record(["c", "feasible", "min_residual", "via_continuation"]).map_err(csv_err)?;
    for p in &points {
        w.write_record([fmt_num(p.c), p.feasible.to_string(), fmt_num(p.min_residual), p.via_continuation.to_string()])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
    emit(path, &bytes, out)
}

fn emit(path: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> Outcome {
    match path {
        Some(p) => Ok(crate::atomic::write_atomic(p, bytes)?),
        None => out.write_all(bytes).map_err(io_out),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_export(
    ctx: &Context,
    input: &Path,
    mesh: Option<&Path>,
    net: Option<&Path>,
    half_length: f64,
    margin: f64,
    scale: f64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let state = load_input(input, err)?.state;
    if let Some(path) = mesh {
        let m = export_mesh(&state, half_length, path, Some(&ctx.provenance))?;
        writeln!(out, "mesh: {} vertices, {} faces -> {}", m.vertices.len(), m.faces.len(), path.display())
            .map_err(io_out)?;
    }
    if let Some(path) = net {
        let options = SvgOptions { scale_mm: scale, ..SvgOptions::default() };
        let r = export_net_svg(&state, half_length, margin, path, &options, Some(&ctx.provenance))?;
        writeln!(out, "net: {} faces, {} margins -> {}", r.layout.faces.len(), r.layout.margins.len(), path.display())
            .map_err(io_out)?;
        if let Some(w) = r.overlap_warning {
            writeln!(err, "warning: {w}").map_err(io_out)?;
        }
    }
    Ok(())
}

/// One row of the extreme-value table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub n: usize,
    pub c_n: f64,
    pub tw: f64,
    pub e_bend: f64,
    pub half_twists: i64,
    /// Oriented extreme dipole energy; `None` where no oriented extreme exists.
    pub e_dipl: Option<f64>,
}

/// Row for `n`: the non-oriented upper extreme (c = 0 for n = 6) and, for
/// odd `n`, the oriented lower extreme.
pub fn table_row(n: usize, settings: &RunSettings) -> Result<TableRow, Error> {
    let state: KaleidocycleState = if n == 6 {
        let system = ConstraintSystem::new(n, ClosureMode::NonOriented, 0.0)?;
        solve_slice(&system, &settings.solver).state.ok_or(Error::NoFeasibleAnchor)?
    } else {
        find_extreme_c_with(n, ClosureMode::NonOriented, Side::Upper, &settings.extremal, &settings.solver)?.witness
    };
    let o = observe(&state, &EnergyParams::default())?;
    let e_dipl = if n % 2 == 1 {
        let r = find_extreme_c_with(n, ClosureMode::Oriented, Side::Lower, &settings.extremal, &settings.solver)?;
        Some(kaleidocycle_core::observables::dipole_energy(&r.witness)?)
    } else {
        None
    };
    Ok(TableRow { n, c_n: state.c(), tw: o.tw, e_bend: o.e_bend, half_twists: o.half_twists, e_dipl })
}

fn cmd_table(ctx: &Context, path: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let rows = TABLE_NS.par_iter().map(|&n| table_row(n, &ctx.settings)).collect::<Result<Vec<_>, _>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::from(IoError::from(e));
    w.write_record(["n", "c_n", "tw", "e_bend", "e_dipl", "half_twists"]).map_err(csv_err)?;
    for r in &rows {
        w.write_record([
            r.n.to_string(),
            fmt_num(r.c_n),
            fmt_num(r.tw),
            fmt_num(r.e_bend),
            r.e_dipl.map(fmt_num).unwrap_or_default(),
            r.half_twists.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
    emit(path, &bytes, out)
}
