//! Trace CSV, OBJ mesh and SVG net writers.

use std::fmt::Write as _;
use std::path::Path;

use kaleidocycle_core::geometry::{NetLayout, Point2};
use kaleidocycle_core::{
    tetra_mesh, unfold_net, EdgeKind, EnergyParams, Error, KaleidocycleState, MotionTrace, ObservableSet, TetraMesh,
};

use crate::atomic::write_atomic;
use crate::error::Result;
use crate::provenance::Provenance;

pub const TRACE_HEADER: [&str; 9] =
    ["arclength", "c", "e_bend", "e_clmb", "e_dipl", "tw", "wr", "half_twists", "gauss_area"];

/// CSV text of `trace`. Observables are computed with
/// [`EnergyParams::for_mode`] when the trace carries none.
pub fn trace_csv(trace: &MotionTrace) -> Result<String> {
    if trace.is_empty() {
        return Err(Error::InvalidParameter("trace has no states".into()).into());
    }
    let computed;
    let observables: &[ObservableSet] = if trace.observables.len() == trace.len() {
        &trace.observables
    } else {
        let params = EnergyParams::for_mode(trace.states[0].mode());
        computed = trace
            .states
            .iter()
            .map(|s| kaleidocycle_core::observe(s, &params))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        &computed
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER)?;
    for ((state, s), obs) in trace.states.iter().zip(&trace.arclength).zip(observables) {
        w.write_record([
            fmt_num(*s),
            fmt_num(state.c()),
            fmt_num(obs.e_bend),
            fmt_num(obs.e_clmb),
            obs.e_dipl.map(fmt_num).unwrap_or_default(),
            fmt_num(obs.tw),
            fmt_num(obs.wr),
            obs.half_twists.to_string(),
            fmt_num(obs.gauss_area),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Shortest round-trip decimal, in exponent form for very small or large
/// magnitudes.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

pub fn export_trace_csv(trace: &MotionTrace, path: &Path) -> Result<()> {
    write_atomic(path, trace_csv(trace)?.as_bytes())
}

pub fn mesh_obj(mesh: &TetraMesh, provenance: Option<&Provenance>) -> String {
    let mut out = String::new();
    writeln!(out, "# kaleidocycle tetrahedra: {} cells", mesh.num_cells()).unwrap();
    for line in provenance.iter().flat_map(|p| p.lines()) {
        writeln!(out, "# {line}").unwrap();
    }
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    for f in &mesh.faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    out
}

pub fn export_mesh(
    state: &KaleidocycleState,
    half_length: f64,
    path: &Path,
    provenance: Option<&Provenance>,
) -> Result<TetraMesh> {
    let mesh = tetra_mesh(state, half_length)?;
    write_atomic(path, mesh_obj(&mesh, provenance).as_bytes())?;
    Ok(mesh)
}

/// Page layout of an SVG net.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    /// Millimetres per model length unit.
    pub scale_mm: f64,
    /// Blank border around the drawing, in millimetres.
    pub padding_mm: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions { scale_mm: 20.0, padding_mm: 5.0 }
    }
}

pub fn net_svg(net: &NetLayout, options: &SvgOptions, provenance: Option<&Provenance>) -> String {
    let (lo, hi) = net.bounds();
    let k = options.scale_mm;
    let pad = options.padding_mm;
    let width = (hi.x - lo.x) * k + 2.0 * pad;
    let height = (hi.y - lo.y) * k + 2.0 * pad;
    // flip y so the drawing is seen from the same side as the layout
    let map = |p: &Point2| ((p.x - lo.x) * k + pad, (hi.y - p.y) * k + pad);
    let poly = |pts: &[Point2]| {
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = map(p);
            write!(d, "{}{:.6} {:.6} ", if i == 0 { "M" } else { "L" }, x, y).unwrap();
        }
        d.push('Z');
        d
    };

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width:.3}mm\" height=\"{height:.3}mm\" viewBox=\"0 0 {width:.3} {height:.3}\">"
    )
    .unwrap();
    if let Some(p) = provenance {
        out.push_str("<metadata>\n");
        for line in p.lines() {
            writeln!(out, "{}", escape(&line)).unwrap();
        }
        out.push_str("</metadata>\n");
    }
    if !net.overlaps.is_empty() {
        writeln!(out, "<!-- warning: {} overlapping face pairs -->", net.overlaps.len()).unwrap();
    }
    if !net.margins.is_empty() {
        out.push_str("<g id=\"margins\" fill=\"#e0e0e0\" stroke=\"#000000\" stroke-width=\"0.2\">\n");
        for m in &net.margins {
            writeln!(out, "<path d=\"{}\"/>", poly(m)).unwrap();
        }
        out.push_str("</g>\n");
    }
    out.push_str("<g id=\"faces\" fill=\"#ffffff\" stroke=\"none\">\n");
    for (i, f) in net.faces.iter().enumerate() {
        writeln!(out, "<path id=\"face{i}\" data-cell=\"{}\" d=\"{}\"/>", f.cell, poly(&f.points)).unwrap();
    }
    out.push_str("</g>\n");
    out.push_str("<g id=\"edges\" fill=\"none\" stroke=\"#000000\" stroke-width=\"0.2\">\n");
    for e in &net.edges {
        let (ax, ay) = map(&e.a);
        let (bx, by) = map(&e.b);
        let dash = match e.kind {
            EdgeKind::Fold => " stroke-dasharray=\"2,1\"",
            EdgeKind::Cut => "",
        };
        writeln!(out, "<path d=\"M{ax:.6} {ay:.6} L{bx:.6} {by:.6}\"{dash}/>").unwrap();
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// Net written by [`export_net_svg`].
#[derive(Debug, Clone)]
pub struct NetExport {
    pub layout: NetLayout,
    /// Face pairs that overlap in the plane. The file is still written.
    pub overlap_warning: Option<String>,
}

pub fn export_net_svg(
    state: &KaleidocycleState,
    half_length: f64,
    margin_width: f64,
    path: &Path,
    options: &SvgOptions,
    provenance: Option<&Provenance>,
) -> Result<NetExport> {
    let layout = unfold_net(state, half_length, margin_width)?;
    write_atomic(path, net_svg(&layout, options, provenance).as_bytes())?;
    let overlap_warning = (!layout.overlaps.is_empty())
        .then(|| format!("the unfolded band overlaps itself ({} face pairs)", layout.overlaps.len()));
    Ok(NetExport { layout, overlap_warning })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
