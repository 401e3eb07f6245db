use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};

/// Column-oriented numeric table; the first column is conventionally time.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(columns: Vec<String>) -> Self {
        Trajectory { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

/// 17 significant digits, enough to roundtrip any `f64`.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a header row and one line per record.
pub fn emit_csv(trajectory: &Trajectory, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(&trajectory.columns).map_err(|e| csv_err(path, e))?;
    for row in &trajectory.rows {
        w.write_record(row.iter().map(|x| format_value(*x))).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv(path: &Path) -> Result<Trajectory> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let columns = r.headers().map_err(|e| csv_err(path, e))?.iter().map(String::from).collect();
    let mut t = Trajectory::new(columns);
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Config(format!("{}: {e}", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        t.push(row);
    }
    Ok(t)
}

/// Dense matrix as headerless CSV.
pub fn emit_matrix_csv(m: &Array2<f64>, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| csv_err(path, e))?;
    for row in m.rows() {
        w.write_record(row.iter().map(|x| format_value(*x))).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn ensure_dir(path: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(path).map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

/// Run manifest written next to every output set.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest<C: Serialize, D: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: C,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub details: D,
}

impl<C: Serialize, D: Serialize> Manifest<C, D> {
    pub fn new(config: C, wall_time_seconds: f64, outputs: Vec<String>, details: D) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config,
            wall_time_seconds,
            outputs,
            details,
        }
    }
}
