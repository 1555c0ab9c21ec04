mod common;

use kaleidocycle::{load_state, read_state, save_state, IoError, StateDocument, SCHEMA_VERSION};
use kaleidocycle_core::{find_extreme_c, ClosureMode, SolverSettings, Side};
use common::solved;
use nalgebra::Rotation3;

#[test]
fn extreme_state_round_trips_bitwise() {
    let r = find_extreme_c(7, ClosureMode::NonOriented, Side::Upper, 1e-6, &SolverSettings::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w7.json");
    save_state(&path, &StateDocument::from_state(&r.witness, None)).unwrap();
    let back = load_state(&path).unwrap();
    assert_eq!(back.state.c().to_bits(), r.witness.c().to_bits());
    for (a, b) in back.state.hinges().iter().zip(r.witness.hinges()) {
        for k in 0..3 {
            assert_eq!(a[k].to_bits(), b[k].to_bits());
        }
    }
    assert!(back.warning.is_none());
    assert!(back.gauge_note.is_none());
}

#[test]
fn short_row_is_a_parse_error_with_position() {
    let text = "{\n  \"schema_version\": 1,\n  \"n\": 6,\n  \"mode\": \"nonoriented\",\n  \"c\": 0.0,\n  \"b\": [\n    [0.0, 0.0, 1.0],\n    [0.0, 1.0]\n  ]\n}\n";
    match read_state(text) {
        Err(IoError::Parse { line, .. }) => assert_eq!(line, 8),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn broken_syntax_is_a_parse_error() {
    assert!(matches!(read_state("{ \"n\": 6,, }"), Err(IoError::Parse { line: 1, .. })));
}

#[test]
fn newer_schema_is_rejected() {
    let s = solved(6, ClosureMode::NonOriented, 0.0);
    let text = StateDocument::from_state(&s, None).to_json().replace("\"schema_version\": 1", "\"schema_version\": 2");
    assert!(matches!(read_state(&text), Err(IoError::SchemaVersion { found: 2, supported: SCHEMA_VERSION })));
}

#[test]
fn unknown_fields_are_ignored() {
    let s = solved(6, ClosureMode::NonOriented, 0.0);
    let text = StateDocument::from_state(&s, None).to_json().replacen('{', "{\n  \"comment\": \"hand edited\",", 1);
    let back = read_state(&text).unwrap();
    assert_eq!(back.state, s);
}

#[test]
fn rotated_state_is_accepted_with_a_gauge_note() {
    let s = solved(7, ClosureMode::NonOriented, 0.2);
    let rot = Rotation3::from_euler_angles(0.3, -0.2, 1.1);
    let text = StateDocument::from_state(&s.rotated(&rot), None).to_json();
    let back = read_state(&text).unwrap();
    assert!(back.gauge_note.is_some());
    assert!(back.warning.is_none());
    assert!(back.validation.valid);
}

#[test]
fn off_manifold_state_loads_with_a_warning() {
    let s = solved(6, ClosureMode::NonOriented, 0.0);
    let mut doc = StateDocument::from_state(&s, None);
    doc.c = 0.01;
    let back = read_state(&doc.to_json()).unwrap();
    assert!(back.warning.is_some());
    assert!(!back.validation.valid);
}

#[test]
fn row_count_must_match_n() {
    let s = solved(6, ClosureMode::NonOriented, 0.0);
    let mut doc = StateDocument::from_state(&s, None);
    doc.n = 7;
    assert!(matches!(read_state(&doc.to_json()), Err(IoError::InvalidState(_))));
}

#[test]
fn metadata_survives() {
    let s = solved(6, ClosureMode::NonOriented, 0.0);
    let mut meta = serde_json::Map::new();
    meta.insert("seed".into(), serde_json::json!(7));
    let doc = StateDocument::from_state(&s, Some(meta));
    let back = read_state(&doc.to_json()).unwrap();
    assert_eq!(back.document, doc);
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_state(&dir.path().join("none.json")), Err(IoError::Io { .. })));
}
