//! Dataset ingestion, validation and standardization, plus the event-based
//! treatment/control matcher for long-format meter data.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Outcomes, binary treatments and an `n x d` covariate matrix (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S: Scalar = f64> {
    y: Vec<S>,
    t: Vec<bool>,
    x: Vec<S>,
    d: usize,
    column_names: Vec<String>,
}

impl<S: Scalar> Dataset<S> {
    /// Builds a dataset from per-sample covariate rows.
    pub fn new(y: Vec<S>, t: Vec<bool>, rows: Vec<Vec<S>>, column_names: Vec<String>) -> Result<Self> {
        let d = column_names.len();
        let mut x = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidDataset(format!(
                    "covariate row {i} has {} entries, expected {d}",
                    row.len()
                )));
            }
            x.extend_from_slice(row);
        }
        if rows.len() != y.len() {
            return Err(Error::InvalidDataset(format!("{} covariate rows for {} outcomes", rows.len(), y.len())));
        }
        Self::from_flat(y, t, x, column_names)
    }

    /// Builds a dataset from a row-major covariate buffer of length `n * d`,
    /// where `d = column_names.len()`.
    pub fn from_flat(y: Vec<S>, t: Vec<bool>, x: Vec<S>, column_names: Vec<String>) -> Result<Self> {
        let n = y.len();
        let d = column_names.len();
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 samples, got {n}")));
        }
        if t.len() != n {
            return Err(Error::InvalidDataset(format!("{} treatments for {n} outcomes", t.len())));
        }
        if x.len() != n * d {
            return Err(Error::InvalidDataset(format!("covariate buffer has {} entries, expected {n} x {d}", x.len())));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { location: format!("y[{i}]") });
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { location: format!("x[{}][{}]", k / d, column_names[k % d]) });
        }
        Ok(Self { y, t, x, d, column_names })
    }

    /// Dataset without covariates.
    pub fn without_covariates(y: Vec<S>, t: Vec<bool>) -> Result<Self> {
        Self::from_flat(y, t, Vec::new(), Vec::new())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn y(&self) -> &[S] {
        &self.y
    }

    pub fn t(&self) -> &[bool] {
        &self.t
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Covariates of sample `i`.
    pub fn row(&self, i: usize) -> &[S] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn covariate(&self, i: usize, j: usize) -> S {
        self.x[i * self.d + j]
    }

    /// Copy of covariate column `j`.
    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.n()).map(|i| self.covariate(i, j)).collect()
    }

    /// Row-major covariate buffer.
    pub fn covariates(&self) -> &[S] {
        &self.x
    }

    pub fn treated_count(&self) -> usize {
        self.t.iter().filter(|&&t| t).count()
    }

    /// Empirical treatment fraction, the `p` used for centering by default.
    pub fn treated_fraction(&self) -> S {
        S::of_usize(self.treated_count()) / S::of_usize(self.n())
    }

    /// Per-column covariate means.
    pub fn covariate_means(&self) -> Vec<S> {
        let n = S::of_usize(self.n());
        (0..self.d).map(|j| (0..self.n()).map(|i| self.covariate(i, j)).sum::<S>() / n).collect()
    }

    /// Same samples with every treatment label flipped.
    pub fn with_flipped_treatment(&self) -> Self {
        Self { t: self.t.iter().map(|t| !t).collect(), ..self.clone() }
    }

    /// Same covariates and treatments with new outcomes.
    pub fn with_outcomes(&self, y: Vec<S>) -> Result<Self> {
        Self::from_flat(y, self.t.clone(), self.x.clone(), self.column_names.clone())
    }

    /// Same outcomes and treatments with a new row-major covariate buffer.
    pub fn with_covariates(&self, x: Vec<S>, column_names: Vec<String>) -> Result<Self> {
        Self::from_flat(self.y.clone(), self.t.clone(), x, column_names)
    }
}

/// Which CSV columns hold the outcome, the treatment and the covariates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub y_column: String,
    pub t_column: String,
    pub covariate_columns: Vec<String>,
}

impl CsvSchema {
    pub fn new(y_column: &str, t_column: &str, covariate_columns: &[&str]) -> Self {
        Self {
            y_column: y_column.to_string(),
            t_column: t_column.to_string(),
            covariate_columns: covariate_columns.iter().map(|c| c.to_string()).collect(),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.to_path_buf(), message: e.to_string() }
}

fn column_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn { path: path.to_path_buf(), column: name.to_string() })
}

fn parse_value<S: Scalar>(raw: &str, column: &str, line: u64, path: &Path) -> Result<S> {
    let v: f64 = raw.trim().parse().map_err(|e: std::num::ParseFloatError| Error::Parse {
        path: path.to_path_buf(),
        line,
        column: column.to_string(),
        message: format!("`{raw}`: {e}"),
    })?;
    if !v.is_finite() {
        return Err(Error::NonFiniteValue { location: format!("{} line {line}, column `{column}`", path.display()) });
    }
    Ok(S::of(v))
}

fn parse_treatment(raw: &str, line: u64, path: &Path) -> Result<bool> {
    let invalid = || Error::InvalidTreatmentValue { path: path.to_path_buf(), line, value: raw.to_string() };
    let v: f64 = raw.trim().parse().map_err(|_| invalid())?;
    if v == 1.0 {
        Ok(true)
    } else if v == 0.0 {
        Ok(false)
    } else {
        Err(invalid())
    }
}

/// Column names from the header row of a CSV file.
pub fn csv_columns(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = rdr.headers().map_err(|e| io_err(path, e))?;
    Ok(headers.iter().map(|h| h.trim().to_string()).collect())
}

/// Loads a wide-format CSV (header row, comma separated).
pub fn load_csv<S: Scalar>(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset<S>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_csv(file, path, schema)
}

/// Reads a wide-format CSV from any reader; `path` is used in error messages.
pub fn read_csv<S: Scalar, R: Read>(reader: R, path: &Path, schema: &CsvSchema) -> Result<Dataset<S>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| io_err(path, e))?.clone();
    let y_idx = column_index(&headers, &schema.y_column, path)?;
    let t_idx = column_index(&headers, &schema.t_column, path)?;
    let x_idx = schema.covariate_columns.iter().map(|c| column_index(&headers, c, path)).collect::<Result<Vec<_>>>()?;

    let mut y = Vec::new();
    let mut t = Vec::new();
    let mut x = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse { path: path.to_path_buf(), line, column: String::new(), message: e.to_string() }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize| record.get(idx).unwrap_or("");
        y.push(parse_value(field(y_idx), &schema.y_column, line, path)?);
        t.push(parse_treatment(field(t_idx), line, path)?);
        for (&idx, name) in x_idx.iter().zip(&schema.covariate_columns) {
            x.push(parse_value(field(idx), name, line, path)?);
        }
    }
    Dataset::from_flat(y, t, x, schema.covariate_columns.clone())
}

/// Writes a dataset in wide format with columns `y,t,<covariates>`.
pub fn write_csv<S: Scalar, W: Write>(dataset: &Dataset<S>, writer: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["y".to_string(), "t".to_string()];
    header.extend(dataset.column_names().iter().cloned());
    wtr.write_record(&header)?;
    for i in 0..dataset.n() {
        let mut row = vec![dataset.y()[i].to_string(), u8::from(dataset.t()[i]).to_string()];
        row.extend(dataset.row(i).iter().map(|v| v.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()
}

/// Shift and scale applied to one covariate column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ColumnTransform<S: Scalar = f64> {
    pub mean: S,
    pub scale: S,
}

impl<S: Scalar> ColumnTransform<S> {
    pub fn apply(&self, v: S) -> S {
        (v - self.mean) / self.scale
    }

    pub fn invert(&self, z: S) -> S {
        z * self.scale + self.mean
    }
}

/// Shifts and scales every covariate column to zero mean and unit variance
/// (1/N divisor).
pub fn standardize_covariates<S: Scalar>(dataset: &Dataset<S>) -> Result<(Dataset<S>, Vec<ColumnTransform<S>>)> {
    let n = S::of_usize(dataset.n());
    let means = dataset.covariate_means();
    let mut transforms = Vec::with_capacity(dataset.d());
    for (j, &mean) in means.iter().enumerate() {
        let var = (0..dataset.n())
            .map(|i| {
                let c = dataset.covariate(i, j) - mean;
                c * c
            })
            .sum::<S>()
            / n;
        if var.is_nan() || var <= S::of(1e-12) {
            return Err(Error::DegenerateColumn { column: dataset.column_names()[j].clone() });
        }
        transforms.push(ColumnTransform { mean, scale: var.sqrt() });
    }
    let d = dataset.d();
    let x = dataset.covariates().iter().enumerate().map(|(k, &v)| transforms[k % d].apply(v)).collect();
    let out = dataset.with_covariates(x, dataset.column_names().to_vec())?;
    Ok((out, transforms))
}

/// One meter reading in long format.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRecord<S: Scalar = f64> {
    pub user_id: String,
    /// Truncated to the hour.
    pub timestamp: NaiveDateTime,
    pub consumption: S,
    pub covariates: Vec<S>,
}

const TIMESTAMP_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
];

/// Parses an ISO-8601 date-hour (`2016-07-04T15`, `2016-07-04T15:00`,
/// `2016-07-04 15:30:00`, optional trailing `Z`) and truncates it to the hour.
pub fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let s = raw.trim().trim_end_matches('Z');
    let parsed = TIMESTAMP_FORMATS.iter().find_map(|f| NaiveDateTime::parse_from_str(s, f).ok()).or_else(|| {
        // date plus bare hour, e.g. 2016-07-04T15
        let (date, hour) = s.split_once(['T', ' '])?;
        let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").ok()?;
        date.and_hms_opt(hour.parse().ok()?, 0, 0)
    })?;
    parsed.with_minute(0)?.with_second(0)?.with_nanosecond(0)
}

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:00").to_string()
}

/// Loads long-format records with columns `user_id,timestamp,consumption`
/// followed by covariates. When `covariate_columns` is `None`, every other
/// column is a covariate, in file order.
pub fn load_long_csv<S: Scalar>(
    path: impl AsRef<Path>,
    covariate_columns: Option<&[String]>,
) -> Result<(Vec<LongRecord<S>>, Vec<String>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = rdr.headers().map_err(|e| io_err(path, e))?.clone();
    let user_idx = column_index(&headers, "user_id", path)?;
    let ts_idx = column_index(&headers, "timestamp", path)?;
    let y_idx = column_index(&headers, "consumption", path)?;
    let names: Vec<String> = match covariate_columns {
        Some(cols) => cols.to_vec(),
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| ![user_idx, ts_idx, y_idx].contains(i))
            .map(|(_, h)| h.trim().to_string())
            .collect(),
    };
    let x_idx = names.iter().map(|c| column_index(&headers, c, path)).collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            column: String::new(),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize| record.get(idx).unwrap_or("");
        let raw_ts = field(ts_idx);
        let timestamp = parse_timestamp(raw_ts).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            column: "timestamp".into(),
            message: format!("`{raw_ts}` is not an ISO-8601 date-hour"),
        })?;
        let consumption = parse_value(field(y_idx), "consumption", line, path)?;
        let covariates = x_idx
            .iter()
            .zip(&names)
            .map(|(&idx, name)| parse_value(field(idx), name, line, path))
            .collect::<Result<Vec<S>>>()?;
        records.push(LongRecord { user_id: field(user_idx).trim().to_string(), timestamp, consumption, covariates });
    }
    Ok((records, names))
}

/// A (user, event) pair that could not be matched to any same-hour record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DroppedPair {
    pub user_id: String,
    pub event: String,
}

/// Reads event timestamps, one per line; blank lines and `#` comments are
/// skipped.
pub fn load_events(path: impl AsRef<Path>) -> Result<Vec<NaiveDateTime>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ts = parse_timestamp(line).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            column: "timestamp".into(),
            message: format!("cannot parse `{line}`"),
        })?;
        events.push(ts);
    }
    if events.is_empty() {
        return Err(Error::NoEligibleRecords);
    }
    Ok(events)
}

/// Bookkeeping for [`build_event_dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DropReport {
    pub events: usize,
    pub users: usize,
    pub treated: usize,
    pub control: usize,
    pub dropped_count: usize,
    pub dropped: Vec<DroppedPair>,
}

/// Builds a treatment/control dataset around high-price events.
///
/// For every event, users with a reading at the event hour are treated with
/// that reading. Every other user contributes, as a control, the reading at
/// the same hour of day on the nearest date; equally distant dates resolve to
/// the earlier one. Users with no reading at that hour on any date are dropped
/// and reported. Each (user, event) pair is its own sample.
pub fn build_event_dataset<S: Scalar>(
    records: &[LongRecord<S>],
    events: &[NaiveDateTime],
    covariate_names: &[String],
) -> Result<(Dataset<S>, DropReport)> {
    if records.is_empty() || events.is_empty() {
        return Err(Error::NoEligibleRecords);
    }
    let d = covariate_names.len();
    if let Some(r) = records.iter().find(|r| r.covariates.len() != d) {
        return Err(Error::InvalidDataset(format!(
            "record for user `{}` at {} has {} covariates, expected {d}",
            r.user_id,
            format_timestamp(&r.timestamp),
            r.covariates.len()
        )));
    }

    // user -> hour-truncated timestamp -> first record seen
    let mut by_user: BTreeMap<&str, BTreeMap<NaiveDateTime, &LongRecord<S>>> = BTreeMap::new();
    for r in records {
        let ts = r.timestamp.with_minute(0).and_then(|t| t.with_second(0)).unwrap_or(r.timestamp);
        by_user.entry(r.user_id.as_str()).or_default().entry(ts).or_insert(r);
    }

    let mut y = Vec::new();
    let mut t = Vec::new();
    let mut x = Vec::new();
    let mut dropped = Vec::new();
    let mut treated = 0usize;
    for event in events {
        for (&user, readings) in &by_user {
            let chosen = if let Some(r) = readings.get(event) {
                treated += 1;
                Some((*r, true))
            } else {
                nearest_same_hour(readings, event).map(|r| (r, false))
            };
            match chosen {
                Some((r, is_treated)) => {
                    y.push(r.consumption);
                    t.push(is_treated);
                    x.extend_from_slice(&r.covariates);
                }
                None => dropped.push(DroppedPair { user_id: user.to_string(), event: format_timestamp(event) }),
            }
        }
    }
    let control = y.len() - treated;
    if y.is_empty() {
        return Err(Error::NoEligibleRecords);
    }
    if treated == 0 {
        return Err(Error::EmptyGroup { group: "treatment" });
    }
    if control == 0 {
        return Err(Error::EmptyGroup { group: "control" });
    }
    let report = DropReport {
        events: events.len(),
        users: by_user.len(),
        treated,
        control,
        dropped_count: dropped.len(),
        dropped,
    };
    let dataset = Dataset::from_flat(y, t, x, covariate_names.to_vec())?;
    Ok((dataset, report))
}

fn nearest_same_hour<'a, S: Scalar>(
    readings: &BTreeMap<NaiveDateTime, &'a LongRecord<S>>,
    event: &NaiveDateTime,
) -> Option<&'a LongRecord<S>> {
    // BTreeMap iterates in time order, so the first minimum is the earlier date.
    readings
        .iter()
        .filter(|(ts, _)| ts.hour() == event.hour() && ts.date() != event.date())
        .min_by_key(|(ts, _)| (ts.date() - event.date()).num_days().abs())
        .map(|(_, r)| *r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> NaiveDateTime {
        parse_timestamp(s).unwrap()
    }

    fn rec(user: &str, when: &str, y: f64, temp: f64) -> LongRecord {
        LongRecord { user_id: user.into(), timestamp: ts(when), consumption: y, covariates: vec![temp] }
    }

    fn load_str(text: &str, schema: &CsvSchema) -> Result<Dataset> {
        read_csv(text.as_bytes(), Path::new("mem.csv"), schema)
    }

    #[test]
    fn parses_wide_csv() {
        let schema = CsvSchema::new("y", "t", &["temp"]);
        let ds = load_str("y,t,temp\n1.5,1,20\n2.0,0,21\n", &schema).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.d(), 1);
        assert_eq!(ds.y(), &[1.5, 2.0]);
        assert_eq!(ds.t(), &[true, false]);
        assert_eq!(ds.column(0), vec![20.0, 21.0]);
    }

    #[test]
    fn rejects_treatment_two_with_line() {
        let schema = CsvSchema::new("y", "t", &["temp"]);
        let err = load_str("y,t,temp\n1.5,1,20\n2.0,2,21\n", &schema).unwrap_err();
        match err {
            Error::InvalidTreatmentValue { line, value, .. } => {
                assert_eq!(line, 3);
                assert_eq!(value, "2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_nan_and_missing_column() {
        let schema = CsvSchema::new("y", "t", &["temp"]);
        let err = load_str("y,t,temp\nNaN,1,20\n2.0,0,21\n", &schema).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { .. }), "{err:?}");
        let err = load_str("y,t\n1,1\n2,0\n", &schema).unwrap_err();
        assert!(matches!(err, Error::MissingColumn { ref column, .. } if column == "temp"));
        let err = load_str("y,t,temp\n1,1,abc\n2,0,1\n", &schema).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn csv_round_trip() {
        let schema = CsvSchema::new("y", "t", &["a", "b"]);
        let ds = load_str("y,t,a,b\n0.1,1,1e-7,3\n-2.25,0,4.5,0.3333333333333333\n7,1,8,9\n", &schema).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back = load_str(std::str::from_utf8(&buf).unwrap(), &CsvSchema::new("y", "t", &["a", "b"])).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn standardize_column() {
        let ds = Dataset::new(
            vec![0.0, 1.0, 2.0],
            vec![true, false, true],
            vec![vec![1.0], vec![2.0], vec![3.0]],
            vec!["x".into()],
        )
        .unwrap();
        let (std, tr) = standardize_covariates(&ds).unwrap();
        let col = std.column(0);
        let mean: f64 = col.iter().sum::<f64>() / 3.0;
        let var: f64 = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
        assert!((col[0] + (1.5f64).sqrt()).abs() < 1e-12);
        assert_eq!(tr[0].mean, 2.0);
        assert!((tr[0].invert(col[2]) - 3.0).abs() < 1e-12);

        let (again, _) = standardize_covariates(&std).unwrap();
        for (a, b) in again.column(0).iter().zip(&col) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_is_degenerate() {
        let ds = Dataset::new(vec![0.0, 1.0], vec![true, false], vec![vec![5.0], vec![5.0]], vec!["c".into()]).unwrap();
        assert_eq!(standardize_covariates(&ds).unwrap_err(), Error::DegenerateColumn { column: "c".into() });
    }

    #[test]
    fn dataset_invariants() {
        assert!(Dataset::<f64>::without_covariates(vec![1.0], vec![true]).is_err());
        assert!(Dataset::<f64>::without_covariates(vec![1.0, 2.0], vec![true]).is_err());
        assert!(matches!(
            Dataset::<f64>::without_covariates(vec![1.0, f64::INFINITY], vec![true, false]),
            Err(Error::NonFiniteValue { .. })
        ));
    }

    #[test]
    fn timestamps_truncate_to_hour() {
        assert_eq!(ts("2016-07-04T15:42:10"), ts("2016-07-04T15"));
        assert_eq!(ts("2016-07-04 15:00"), ts("2016-07-04T15:00:00Z"));
        assert!(parse_timestamp("yesterday").is_none());
    }

    #[test]
    fn event_matching_rules() {
        let event = ts("2016-07-10T17");
        let records = vec![
            rec("A", "2016-07-10T17", 3.0, 30.0),
            rec("A", "2016-07-09T17", 9.0, 29.0),
            rec("B", "2016-07-08T17", 1.0, 25.0),
            rec("B", "2016-07-11T17", 2.0, 26.0),
            rec("B", "2016-07-10T16", 8.0, 26.0),
            rec("C", "2016-07-10T12", 5.0, 20.0),
            rec("D", "2016-07-09T17", 4.0, 21.0),
            rec("D", "2016-07-11T17", 6.0, 22.0),
        ];
        let (ds, report) = build_event_dataset(&records, &[event], &["temp".to_string()]).unwrap();
        // users iterate in sorted order: A, B, D (C dropped)
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.t(), &[true, false, false]);
        assert_eq!(ds.y(), &[3.0, 2.0, 4.0]);
        assert_eq!(ds.column(0), vec![30.0, 26.0, 21.0]);
        assert_eq!(report.treated, 1);
        assert_eq!(report.control, 2);
        assert_eq!(report.dropped_count, 1);
        assert_eq!(report.dropped[0], DroppedPair { user_id: "C".into(), event: "2016-07-10T17:00".into() });
    }

    #[test]
    fn event_matching_errors() {
        let names = vec!["temp".to_string()];
        assert_eq!(
            build_event_dataset::<f64>(&[], &[ts("2016-01-01T01")], &names).unwrap_err(),
            Error::NoEligibleRecords
        );
        let records = vec![rec("A", "2016-07-09T17", 1.0, 0.0), rec("B", "2016-07-08T17", 1.0, 0.0)];
        assert_eq!(
            build_event_dataset(&records, &[ts("2016-07-10T17")], &names).unwrap_err(),
            Error::EmptyGroup { group: "treatment" }
        );
        let records = vec![rec("A", "2016-07-10T17", 1.0, 0.0)];
        assert_eq!(
            build_event_dataset(&records, &[ts("2016-07-10T17")], &names).unwrap_err(),
            Error::EmptyGroup { group: "control" }
        );
    }
}
