//! External-predictor protocol tests against the demo server binary.

use bbfi::external::spawn_external;
use bbfi_core::data::{FeatureKind, RowMatrix, Value};
use bbfi_core::models::{checked_predict, Predictor};

fn server(mode: &str) -> Vec<String> {
    vec![env!("CARGO_BIN_EXE_bbfi-demo-server").to_string(), mode.to_string()]
}

fn numeric_kinds(p: usize) -> Vec<FeatureKind> {
    vec![FeatureKind::Numeric; p]
}

fn rows(items: &[&[f64]]) -> RowMatrix {
    let mut m = RowMatrix::new(items[0].len());
    for row in items {
        let vals: Vec<Value> = row.iter().map(|&v| Value::Num(v)).collect();
        m.push_row(&vals);
    }
    m
}

#[test]
fn echo_server_returns_first_feature() {
    let p = spawn_external(&server("first"), numeric_kinds(2)).unwrap();
    let preds = checked_predict(&p, &rows(&[&[3.0, 7.0]])).unwrap();
    assert_eq!(preds, vec![3.0]);
}

#[test]
fn batches_share_one_process() {
    let p = spawn_external(&server("sum"), numeric_kinds(2)).unwrap();
    let a = checked_predict(&p, &rows(&[&[1.0, 2.0], &[3.0, 4.0]])).unwrap();
    assert_eq!(a, vec![3.0, 7.0]);
    // Second batch on the same child; ids advance.
    let b = checked_predict(&p, &rows(&[&[10.0, 0.5]])).unwrap();
    assert_eq!(b, vec![10.5]);
}

#[test]
fn id_mismatch_is_an_error() {
    let p = spawn_external(&server("wrong-id"), numeric_kinds(1)).unwrap();
    let err = p.predict(&rows(&[&[1.0]])).unwrap_err();
    assert!(err.to_string().contains("does not match request id"), "{err}");
}

#[test]
fn non_numeric_prediction_is_an_error() {
    let p = spawn_external(&server("non-numeric"), numeric_kinds(1)).unwrap();
    let err = p.predict(&rows(&[&[1.0]])).unwrap_err();
    assert!(err.to_string().contains("non-numeric prediction"), "{err}");
}

#[test]
fn short_response_is_an_error() {
    let p = spawn_external(&server("short"), numeric_kinds(1)).unwrap();
    let err = p.predict(&rows(&[&[1.0], &[2.0]])).unwrap_err();
    assert!(err.to_string().contains("predictions for"), "{err}");
}

#[test]
fn dead_process_error_carries_stderr() {
    let cmd: Vec<String> =
        ["sh", "-c", "echo boom >&2; exit 1"].iter().map(|s| s.to_string()).collect();
    let p = spawn_external(&cmd, numeric_kinds(1)).unwrap();
    let err = p.predict(&rows(&[&[1.0]])).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("boom"), "stderr not attached: {msg}");
}

#[test]
fn categorical_cells_are_transmitted_as_level_strings() {
    // The sum server adds only numeric cells, so a categorical level string
    // must contribute nothing (and must not break parsing).
    let kinds = vec![
        FeatureKind::Numeric,
        FeatureKind::Categorical { levels: vec!["red".into(), "blue".into()] },
    ];
    let p = spawn_external(&server("sum"), kinds).unwrap();
    let mut m = RowMatrix::new(2);
    m.push_row(&[Value::Num(4.0), Value::Cat(1)]);
    let preds = checked_predict(&p, &m).unwrap();
    assert_eq!(preds, vec![4.0]);
}

#[test]
fn kind_and_descriptor() {
    let p = spawn_external(&server("first"), numeric_kinds(1)).unwrap();
    assert_eq!(p.kind(), "external");
    assert!(p.describe().contains("bbfi-demo-server"));
}
