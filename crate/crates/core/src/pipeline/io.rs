//! Panel and matrix file formats.
//!
//! CSV-long panels have a header `trial,time,<label>,...` and one row per
//! (trial, time point). Rows of a trial must be contiguous; trials appear in
//! file order. Binary panels are raw little-endian `f64` in trial, time,
//! channel order, next to a `<file>.json` sidecar holding the dimensions.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use super::panel::{PanelHeader, TimeSeriesPanel};
use crate::error::{Error, Result};
use crate::numerics::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    CsvLong,
    F64Binary,
}

impl InputFormat {
    pub fn name(self) -> &'static str {
        match self {
            InputFormat::CsvLong => "csv-long",
            InputFormat::F64Binary => "f64-binary",
        }
    }

    /// Guesses from the extension: `.bin`/`.f64` are binary, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("f64") => InputFormat::F64Binary,
            _ => InputFormat::CsvLong,
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv-long" | "csv" => Ok(InputFormat::CsvLong),
            "f64-binary" | "binary" => Ok(InputFormat::F64Binary),
            other => Err(Error::InvalidArgument(format!(
                "unknown input format {other:?}"
            ))),
        }
    }
}

/// Path of the JSON sidecar for a binary panel.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Reads a panel. A binary sidecar's sampling rate is used unless
/// `sampling_rate` is given; CSV panels require it.
pub fn load_panel(
    path: &Path,
    format: InputFormat,
    sampling_rate: Option<f64>,
) -> Result<TimeSeriesPanel> {
    match format {
        InputFormat::CsvLong => {
            let rate = sampling_rate.ok_or_else(|| {
                Error::InvalidArgument("csv-long input needs a sampling rate".into())
            })?;
            load_csv_long(path, rate)
        }
        InputFormat::F64Binary => load_f64_binary(path, sampling_rate),
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn load_csv_long(path: &Path, sampling_rate: f64) -> Result<TimeSeriesPanel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 3 {
        return Err(parse_error(
            path,
            1,
            "expected header trial,time,<channel>...",
        ));
    }
    let labels: Vec<String> = header.iter().skip(2).map(str::to_owned).collect();
    let p = labels.len();

    let mut values = Vec::new();
    let mut trial_lengths: Vec<usize> = Vec::new();
    let mut trial_ids: Vec<String> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |pos| pos.line() as usize);
        if record.len() != p + 2 {
            return Err(parse_error(
                path,
                line,
                format!("expected {} fields, found {}", p + 2, record.len()),
            ));
        }
        let trial = &record[0];
        match trial_ids.last() {
            Some(last) if last == trial => *trial_lengths.last_mut().unwrap() += 1,
            _ => {
                if trial_ids.iter().any(|t| t == trial) {
                    return Err(parse_error(
                        path,
                        line,
                        format!("trial {trial:?} is not contiguous"),
                    ));
                }
                trial_ids.push(trial.to_owned());
                trial_lengths.push(1);
            }
        }
        if record[1].parse::<f64>().is_err() {
            return Err(parse_error(
                path,
                line,
                format!("bad time value {:?}", &record[1]),
            ));
        }
        for field in record.iter().skip(2) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(path, line, format!("bad sample {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { row: line });
            }
            values.push(v);
        }
    }
    let Some(&expected) = trial_lengths.first() else {
        return Err(Error::EmptyPanel);
    };
    if let Some(trial) = trial_lengths.iter().position(|&len| len != expected) {
        return Err(Error::InconsistentTrialLength {
            trial,
            expected,
            found: trial_lengths[trial],
        });
    }
    let data = Array3::from_shape_vec((trial_lengths.len(), expected, p), values)
        .expect("row count matches trial lengths");
    TimeSeriesPanel::new(data, sampling_rate, labels)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |pos| pos.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => parse_error(path, line, format!("{other:?}")),
    }
}

/// Sidecar contents; `sampling_rate` may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    trials: usize,
    time_points: usize,
    channels: usize,
    #[serde(default)]
    sampling_rate: Option<f64>,
    #[serde(default)]
    channel_labels: Option<Vec<String>>,
}

/// Sampling rate stored in a binary panel's sidecar, if any.
pub fn sidecar_sampling_rate(path: &Path) -> Result<Option<f64>> {
    let sidecar: Sidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    Ok(sidecar.sampling_rate)
}

fn load_f64_binary(path: &Path, sampling_rate: Option<f64>) -> Result<TimeSeriesPanel> {
    let side_path = sidecar_path(path);
    let sidecar: Sidecar = serde_json::from_slice(&fs::read(&side_path)?)?;
    let bytes = fs::read(path)?;
    let count = sidecar.trials * sidecar.time_points * sidecar.channels;
    if bytes.len() != count * 8 {
        return Err(parse_error(
            path,
            0,
            format!(
                "expected {} bytes for the sidecar dims, found {}",
                count * 8,
                bytes.len()
            ),
        ));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample {
            row: index / sidecar.channels,
        });
    }
    let rate = sampling_rate.or(sidecar.sampling_rate).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "no sampling rate given or found in {}",
            side_path.display()
        ))
    })?;
    let labels = sidecar
        .channel_labels
        .unwrap_or_else(|| super::panel::default_labels(sidecar.channels));
    let data = Array3::from_shape_vec(
        (sidecar.trials, sidecar.time_points, sidecar.channels),
        values,
    )
    .map_err(|e| parse_error(path, 0, e.to_string()))?;
    TimeSeriesPanel::new(data, rate, labels)
}

/// Writes `panel` in the given format; binary also writes the sidecar.
pub fn write_panel(panel: &TimeSeriesPanel, path: &Path, format: InputFormat) -> Result<()> {
    match format {
        InputFormat::CsvLong => {
            let mut out = String::from("trial,time");
            for label in panel.channel_labels() {
                out.push(',');
                out.push_str(label);
            }
            out.push('\n');
            for (t, trial) in panel.data().outer_iter().enumerate() {
                for (n, row) in trial.outer_iter().enumerate() {
                    out.push_str(&format!("{},{}", t + 1, n));
                    for v in row {
                        out.push_str(&format!(",{v}"));
                    }
                    out.push('\n');
                }
            }
            fs::write(path, out)?;
        }
        InputFormat::F64Binary => {
            let bytes: Vec<u8> = panel.data().iter().flat_map(|v| v.to_le_bytes()).collect();
            fs::write(path, bytes)?;
            let PanelHeader {
                trials,
                time_points,
                channels,
                sampling_rate,
                channel_labels,
            } = panel.header();
            let sidecar = Sidecar {
                trials,
                time_points,
                channels,
                sampling_rate: Some(sampling_rate),
                channel_labels: Some(channel_labels),
            };
            fs::write(sidecar_path(path), serde_json::to_vec_pretty(&sidecar)?)?;
        }
    }
    Ok(())
}

/// Square matrix as CSV with a label header. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn matrix_to_csv(m: &SymMatrix, labels: &[String]) -> String {
    let mut out = labels.join(",");
    out.push('\n');
    for row in m.as_array().rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(m: &SymMatrix, labels: &[String], path: &Path) -> Result<()> {
    fs::write(path, matrix_to_csv(m, labels))?;
    Ok(())
}

/// Reads a labelled square matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv(path: &Path) -> Result<(SymMatrix, Vec<String>)> {
    let (rows, labels) = read_table_csv(path)?;
    if rows.len() != labels.len() {
        return Err(parse_error(
            path,
            rows.len() + 1,
            format!(
                "expected {} rows for a square matrix, found {}",
                labels.len(),
                rows.len()
            ),
        ));
    }
    Ok((SymMatrix::from_rows(&rows)?, labels))
}

/// Reads a headed numeric table, one sample per row.
pub fn read_table_csv(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let labels: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |pos| pos.line() as usize);
        if record.len() != labels.len() {
            return Err(parse_error(
                path,
                line,
                format!("expected {} fields, found {}", labels.len(), record.len()),
            ));
        }
        let row = record
            .iter()
            .map(|f| {
                let v: f64 = f
                    .parse()
                    .map_err(|_| parse_error(path, line, format!("bad value {f:?}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFiniteSample { row: line })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((rows, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let path = dir.path().join(name);
        fs::write(&path, body).unwrap();
        path
    }

    const FIXTURE: &str = "trial,time,Fz,Cz\n\
        1,0,0.5,1.0\n1,1,0.25,-1.0\n1,2,0.0,2.0\n1,3,1.5,0.0\n\
        2,0,-0.5,1.0\n2,1,0.75,3.0\n2,2,0.0,2.5\n2,3,1.0,0.125\n";

    #[test]
    fn csv_fixture_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "panel.csv", FIXTURE);
        let panel = load_panel(&path, InputFormat::CsvLong, Some(250.0)).unwrap();
        assert_eq!(panel.data().dim(), (2, 4, 2));
        assert_eq!(panel.channel_labels(), &["Fz", "Cz"]);
        assert_eq!(panel.data()[[1, 3, 1]], 0.125);

        let again = dir.path().join("again.csv");
        write_panel(&panel, &again, InputFormat::CsvLong).unwrap();
        assert_eq!(
            load_panel(&again, InputFormat::CsvLong, Some(250.0)).unwrap(),
            panel
        );
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write(&dir, "panel.csv", FIXTURE);
        let panel = load_panel(&csv, InputFormat::CsvLong, Some(250.0)).unwrap();
        let bin = dir.path().join("panel.bin");
        write_panel(&panel, &bin, InputFormat::F64Binary).unwrap();
        assert_eq!(InputFormat::from_path(&bin), InputFormat::F64Binary);
        assert_eq!(
            load_panel(&bin, InputFormat::F64Binary, None).unwrap(),
            panel
        );
    }

    #[test]
    fn nan_names_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "nan.csv", "trial,time,a,b\n1,0,1,2\n1,1,NaN,2\n");
        assert!(matches!(
            load_panel(&path, InputFormat::CsvLong, Some(1.0)),
            Err(Error::NonFiniteSample { row: 3 })
        ));
    }

    #[test]
    fn unequal_trials_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            "bad.csv",
            "trial,time,a,b\n1,0,1,2\n1,1,1,2\n2,0,3,4\n",
        );
        assert!(matches!(
            load_panel(&path, InputFormat::CsvLong, Some(1.0)),
            Err(Error::InconsistentTrialLength {
                trial: 1,
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn malformed_rows_report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "bad.csv", "trial,time,a,b\n1,0,1,2\n1,1,x,2\n");
        match load_panel(&path, InputFormat::CsvLong, Some(1.0)) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let path = write(&dir, "short.csv", "trial,time,a,b\n1,0,1\n");
        assert!(matches!(
            load_panel(&path, InputFormat::CsvLong, Some(1.0)),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn matrix_csv_is_bit_exact() {
        let m =
            SymMatrix::from_rows(&[vec![0.1 + 0.2, -1e-300], vec![-1e-300, 1.0 / 3.0]]).unwrap();
        let labels = vec!["x".to_string(), "y".to_string()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_matrix_csv(&m, &labels, &path).unwrap();
        let (back, back_labels) = read_matrix_csv(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back_labels, labels);
    }
}
