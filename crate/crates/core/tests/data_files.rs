use std::io::Write;
use std::path::Path;

use dr_ate::data::{csv_columns, load_events, parse_timestamp};
use dr_ate::{build_event_dataset, estimate_slr, load_csv, load_long_csv, write_csv, CsvSchema, Error};

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn wide_csv_round_trips_through_a_file() {
    let ds = load_csv::<f64>(fixture("significance.csv"), &CsvSchema::new("y", "t", &["x1"])).unwrap();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write_csv(&ds, &mut file).unwrap();
    file.flush().unwrap();
    assert_eq!(csv_columns(file.path()).unwrap(), vec!["y", "t", "x1"]);
    let back = load_csv::<f64>(file.path(), &CsvSchema::new("y", "t", &["x1"])).unwrap();
    assert_eq!(back, ds);
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_csv::<f64>("/nonexistent/data.csv", &CsvSchema::new("y", "t", &[])).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.is_data_error());
}

#[test]
fn bad_treatment_reports_its_line() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "y,t\n1.0,0\n2.0,1\n3.0,0.5").unwrap();
    let err = load_csv::<f64>(file.path(), &CsvSchema::new("y", "t", &[])).unwrap_err();
    assert!(matches!(err, Error::InvalidTreatmentValue { line: 4, ref value, .. } if value == "0.5"), "{err:?}");
}

#[test]
fn long_format_event_pipeline() {
    let events = load_events(fixture("events.txt")).unwrap();
    assert_eq!(events, vec![parse_timestamp("2019-07-02T17:00").unwrap()]);
    let (records, names) = load_long_csv::<f64>(fixture("long.csv"), None).unwrap();
    assert_eq!(names, vec!["temperature"]);
    let (ds, report) = build_event_dataset(&records, &events, &names).unwrap();
    // A and D are treated; B is matched to the earlier of two equidistant
    // days; C has no 17:00 reading and is dropped.
    assert_eq!((report.treated, report.control, report.dropped_count), (2, 1, 1));
    assert_eq!(report.dropped[0].user_id, "C");
    assert_eq!(ds.y(), &[2.5, 1.0, 3.0]);
    assert_eq!(ds.t(), &[true, false, true]);
    assert_eq!(ds.covariates(), &[33.0, 29.0, 34.0]);
    assert!((estimate_slr(&ds).unwrap().ate_hat - 1.75).abs() < 1e-12);
}
