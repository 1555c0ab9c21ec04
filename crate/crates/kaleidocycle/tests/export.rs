mod common;

use kaleidocycle::export::TRACE_HEADER;
use kaleidocycle::{export_mesh, export_net_svg, export_trace_csv, mesh_obj, trace_csv, SvgOptions};
use kaleidocycle_core::{
    find_extreme_c, tetra_mesh, trace_rotation, unfold_net, ClosureMode, Error, SolverSettings, Side, TraceSettings,
};
use common::solved;

fn rows(csv_text: &str) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), TRACE_HEADER);
    r.records().map(Result::unwrap).collect()
}

#[test]
fn trace_csv_has_one_row_per_state() {
    let s = solved(6, ClosureMode::NonOriented, 0.0);
    let ts = TraceSettings { max_steps: 25, ..TraceSettings::default() };
    let tr = trace_rotation(&s, &ts, &SolverSettings::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    export_trace_csv(&tr, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let rs = rows(&text);
    assert_eq!(rs.len(), tr.len());
    for (r, (st, s)) in rs.iter().zip(tr.states.iter().zip(&tr.arclength)) {
        assert_eq!(r[0].parse::<f64>().unwrap(), *s);
        assert_eq!(r[1].parse::<f64>().unwrap(), st.c());
        assert_eq!(&r[4], "");
        assert_eq!(&r[7], "3");
    }
}

#[test]
fn oriented_trace_fills_the_dipole_column() {
    let r = find_extreme_c(7, ClosureMode::Oriented, Side::Lower, 1e-6, &SolverSettings::default()).unwrap();
    let ts = TraceSettings { max_steps: 5, ..TraceSettings::default() };
    let tr = trace_rotation(&r.witness, &ts, &SolverSettings::default()).unwrap();
    for row in rows(&trace_csv(&tr).unwrap()) {
        let e: f64 = row[4].parse().unwrap();
        assert!((e + 4.23).abs() < 0.05, "{e}");
    }
}

#[test]
fn single_state_trace_gives_one_row() {
    let s = solved(6, ClosureMode::NonOriented, 0.0);
    let ts = TraceSettings { max_steps: 0, ..TraceSettings::default() };
    let tr = trace_rotation(&s, &ts, &SolverSettings::default()).unwrap();
    assert!(!tr.closed);
    assert_eq!(rows(&trace_csv(&tr).unwrap()).len(), 1);
}

#[test]
fn bricard_obj_has_24_vertices_and_faces() {
    let s = solved(6, ClosureMode::NonOriented, 0.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.obj");
    let mesh = export_mesh(&s, 0.5, &path, None).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let verts: Vec<[f64; 3]> = text
        .lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| {
            let v: Vec<f64> = l.split(' ').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect();
    let faces: Vec<[usize; 3]> = text
        .lines()
        .filter_map(|l| l.strip_prefix("f "))
        .map(|l| {
            let f: Vec<usize> = l.split(' ').map(|x| x.parse().unwrap()).collect();
            [f[0], f[1], f[2]]
        })
        .collect();
    assert_eq!(verts.len(), 24);
    assert_eq!(faces.len(), 24);
    assert!(faces.iter().flatten().all(|&i| (1..=24).contains(&i)));
    for (v, m) in verts.iter().zip(&mesh.vertices) {
        assert_eq!(*v, [m.x, m.y, m.z]);
    }
    for (f, m) in faces.iter().zip(&mesh.faces) {
        assert_eq!(*f, [m[0] + 1, m[1] + 1, m[2] + 1]);
    }
}

#[test]
fn flat_cells_are_refused() {
    let s = solved(6, ClosureMode::NonOriented, 0.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.obj");
    assert!(matches!(
        export_mesh(&s, 0.0, &path, None),
        Err(kaleidocycle::IoError::InvalidState(Error::Degenerate(_)))
    ));
    assert!(!path.exists());
}

#[test]
fn obj_comments_carry_provenance() {
    let s = solved(6, ClosureMode::NonOriented, 0.0);
    let p = kaleidocycle::Provenance::new(vec!["export".into(), "--mesh".into()], &SolverSettings::default());
    let text = mesh_obj(&tetra_mesh(&s, 0.5).unwrap(), Some(&p));
    assert!(text.lines().any(|l| l == "# command: export --mesh"));
    assert!(text.lines().any(|l| l == "# seed: 0"));
}

#[test]
fn svg_net_of_extreme_nine() {
    let r = find_extreme_c(9, ClosureMode::NonOriented, Side::Upper, 1e-6, &SolverSettings::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.svg");
    let out = export_net_svg(&r.witness, 0.5, 0.1, &path, &SvgOptions::default(), None).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("version=\"1.1\""));
    assert!(text.contains("mm\" height=") && text.contains("viewBox=\"0 0 "));
    assert_eq!(text.matches("<path id=\"face").count(), 36);
    let folds = out.layout.edges.iter().filter(|e| e.kind == kaleidocycle_core::EdgeKind::Fold).count();
    assert_eq!(text.matches("stroke-dasharray").count(), folds);
    assert!(!out.layout.margins.is_empty());
    assert!(text.contains("<g id=\"margins\""));
    assert!(out.layout.isometry_defect() <= 1e-9);
    assert_eq!(out.overlap_warning.is_some(), !out.layout.overlaps.is_empty());
}

#[test]
fn svg_without_margins() {
    let s = solved(6, ClosureMode::NonOriented, 0.0);
    let text = kaleidocycle::net_svg(&unfold_net(&s, 0.5, 0.0).unwrap(), &SvgOptions::default(), None);
    assert!(!text.contains("margins"));
    assert_eq!(text.matches("<path id=\"face").count(), 24);
}

#[test]
fn writes_leave_no_temporary_files() {
    let s = solved(6, ClosureMode::NonOriented, 0.0);
    let dir = tempfile::tempdir().unwrap();
    export_mesh(&s, 0.5, &dir.path().join("a.obj"), None).unwrap();
    export_mesh(&s, 0.5, &dir.path().join("a.obj"), None).unwrap();
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("a.obj")]);
}
