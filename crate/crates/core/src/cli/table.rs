//! Numeric CSV tables with `#` metadata lines.
//!
//! Values are written as `{:.11e}`, so re-reading an emitted file and writing
//! it again reproduces it byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Crate version written into every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Ordered `key = value` metadata, written as `# key = value`.
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn format_number(v: f64) -> String {
    format!("{v:.11e}")
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { meta: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    /// Table with the standard `radtrap`, `config_hash` and `mode` header.
    pub fn with_header(columns: &[&str], config_hash: &str, mode: &str) -> Self {
        let mut t = Table::new(columns);
        t.push_meta("radtrap", VERSION);
        t.push_meta("config_hash", config_hash);
        t.push_meta("mode", mode);
        t
    }

    pub fn push_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }

    /// Parses CSV text; `origin` labels errors.
    pub fn parse(text: &str, origin: &str) -> Result<Table> {
        let mut meta = Vec::new();
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else { break };
            if let Some((k, v)) = rest.split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let data_err = |line: usize, msg: String| Error::Data { path: origin.to_string(), line, msg };
        let columns: Vec<String> = reader
            .headers()
            .map_err(|e| data_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if columns.is_empty() || columns.iter().all(String::is_empty) {
            return Err(data_err(1, "missing header row".into()));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| data_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != columns.len() {
                return Err(data_err(line, format!("expected {} fields, got {}", columns.len(), record.len())));
            }
            let row = record
                .iter()
                .zip(&columns)
                .map(|(cell, col)| {
                    cell.parse::<f64>().map_err(|_| data_err(line, format!("`{cell}` in column `{col}` is not a number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Table { meta, columns, rows })
    }

    pub fn read(path: &Path) -> Result<Table> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Table::parse(&text, &path.display().to_string())
    }
}

/// One measured point of an experiment file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentRow {
    pub n: f64,
    pub transmission: f64,
    pub slope: f64,
    pub sigma_transmission: Option<f64>,
    pub sigma_slope: Option<f64>,
}

pub const COL_DENSITY: &str = "N_cm3";
pub const COL_TRANSMISSION: &str = "transmission";
pub const COL_SLOPE: &str = "slope_rad_per_G";
pub const COL_SIGMA_T: &str = "sigma_transmission";
pub const COL_SIGMA_SLOPE: &str = "sigma_slope";

/// Reads experiment rows; extra columns are ignored.
pub fn parse_experiment(text: &str, origin: &str) -> Result<Vec<ExperimentRow>> {
    let table = Table::parse(text, origin)?;
    let index = |name: &str| table.columns.iter().position(|c| c == name);
    let require = |name: &str| {
        index(name).ok_or_else(|| Error::MissingColumn { path: origin.to_string(), column: name.to_string() })
    };
    let (i_n, i_t, i_s) = (require(COL_DENSITY)?, require(COL_TRANSMISSION)?, require(COL_SLOPE)?);
    let (i_st, i_ss) = (index(COL_SIGMA_T), index(COL_SIGMA_SLOPE));
    // Data lines follow the metadata and header lines.
    let first = text.lines().take_while(|l| l.trim_start().starts_with('#')).count() + 2;
    table
        .rows
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let row = ExperimentRow {
                n: r[i_n],
                transmission: r[i_t],
                slope: r[i_s],
                sigma_transmission: i_st.map(|i| r[i]),
                sigma_slope: i_ss.map(|i| r[i]),
            };
            let bad = |msg: &str| Error::Data { path: origin.to_string(), line: first + k, msg: msg.to_string() };
            if !(row.n > 0.0 && row.n.is_finite()) {
                return Err(bad("density must be positive"));
            }
            if !(row.transmission > 0.0 && row.transmission <= 1.0) {
                return Err(bad("transmission must lie in (0, 1]"));
            }
            if !(row.slope.is_finite() && row.slope >= 0.0) {
                return Err(bad("slope must be finite and non-negative"));
            }
            if [row.sigma_transmission, row.sigma_slope].iter().flatten().any(|s| !(*s >= 0.0)) {
                return Err(bad("uncertainties must be non-negative"));
            }
            Ok(row)
        })
        .collect()
}

pub fn read_experiment(path: &Path) -> Result<Vec<ExperimentRow>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_experiment(&text, &path.display().to_string())
}

pub fn experiment_table(rows: &[ExperimentRow], config_hash: &str, mode: &str) -> Table {
    let with_sigma = rows.iter().any(|r| r.sigma_transmission.is_some() || r.sigma_slope.is_some());
    let mut cols = vec![COL_DENSITY, COL_TRANSMISSION, COL_SLOPE];
    if with_sigma {
        cols.extend([COL_SIGMA_T, COL_SIGMA_SLOPE]);
    }
    let mut t = Table::with_header(&cols, config_hash, mode);
    for r in rows {
        let mut row = vec![r.n, r.transmission, r.slope];
        if with_sigma {
            row.extend([r.sigma_transmission.unwrap_or(0.0), r.sigma_slope.unwrap_or(0.0)]);
        }
        t.push_row(row);
    }
    t
}
