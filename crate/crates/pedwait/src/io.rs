//! CSV and JSON plumbing. All writers produce deterministic bytes: fixed column order,
//! shortest round-trip float formatting and `\n` line endings.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use pedwait_core::dataset::{DURATION_COLUMN, EVENT_COLUMN};
use pedwait_core::{CovariateSchema, Dataset, Instance};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Shortest string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{}", x)
}

/// `<dir>/<stem>.schema.json` next to a dataset file.
pub fn schema_sidecar(data: &Path) -> PathBuf {
    let stem = data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    data.with_file_name(format!("{}.schema.json", stem))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::json(path.display().to_string(), e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::json(path.display().to_string(), e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(|e| CliError::csv(path, e))?;
    w.write_record(header).map_err(|e| CliError::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Raw table: header plus rows with their 1-based file line numbers.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<(u64, Vec<String>)>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| CliError::csv(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| CliError::csv(path, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec.iter().map(String::from).collect()));
    }
    Ok(Table { header, rows })
}

/// Loads a dataset whose header holds every schema entry plus `duration` and `event`,
/// in any order. With `schema = None` the JSON sidecar next to the file is used.
pub fn read_dataset(path: &Path, schema: Option<&CovariateSchema>) -> CliResult<Dataset> {
    let owned;
    let schema = match schema {
        Some(s) => s,
        None => {
            let sidecar = schema_sidecar(path);
            if !sidecar.exists() {
                return Err(CliError::Config(format!(
                    "no schema given and sidecar {} does not exist",
                    sidecar.display()
                )));
            }
            owned = read_json::<CovariateSchema>(&sidecar)?;
            &owned
        }
    };
    let table = read_table(path)?;
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (k, h) in table.header.iter().enumerate() {
        if index.insert(h.as_str(), k).is_some() {
            return Err(CliError::Config(format!("{}: duplicate column `{}`", path.display(), h)));
        }
    }
    let mut wanted: Vec<&str> = schema.entries().iter().map(|e| e.name.as_str()).collect();
    wanted.push(DURATION_COLUMN);
    wanted.push(EVENT_COLUMN);
    for w in &wanted {
        if !index.contains_key(w) {
            return Err(CliError::Config(format!("{}: missing column `{}`", path.display(), w)));
        }
    }
    if let Some(extra) = table.header.iter().find(|h| !wanted.contains(&h.as_str())) {
        return Err(CliError::Config(format!("{}: column `{}` is not in the schema", path.display(), extra)));
    }
    let cov_pos: Vec<usize> = schema.entries().iter().map(|e| index[e.name.as_str()]).collect();
    let (dur_pos, ev_pos) = (index[DURATION_COLUMN], index[EVENT_COLUMN]);
    let row_err = |line: u64, message: String| CliError::Row { path: path.to_path_buf(), line, message };
    let mut instances = Vec::with_capacity(table.rows.len());
    for (line, cells) in &table.rows {
        let picked: Vec<&str> = cov_pos.iter().map(|&k| cells[k].as_str()).collect();
        let z = schema.encode_cells(&picked).map_err(|e| row_err(*line, e.to_string()))?;
        let duration: f64 = cells[dur_pos]
            .parse()
            .map_err(|_| row_err(*line, format!("unparseable duration `{}`", cells[dur_pos])))?;
        if !duration.is_finite() || duration < 0.0 {
            return Err(row_err(*line, format!("duration must be finite and non-negative, got {}", cells[dur_pos])));
        }
        let event = match cells[ev_pos].as_str() {
            "1" => true,
            "0" => false,
            other => return Err(row_err(*line, format!("event must be 0 or 1, got `{}`", other))),
        };
        instances.push(Instance::new(z, duration, event));
    }
    Ok(Dataset::new(schema.clone(), instances)?)
}

/// Writes an unstandardized dataset in the layout [`read_dataset`] accepts, plus its
/// schema sidecar.
pub fn write_dataset(path: &Path, ds: &Dataset) -> CliResult<()> {
    if ds.standardization().is_some() {
        return Err(CliError::Config("refusing to write a standardized dataset".into()));
    }
    let schema = ds.schema();
    if ds.width() != schema.width() {
        return Err(CliError::Config("dataset columns no longer match its schema".into()));
    }
    let mut header: Vec<&str> = schema.entries().iter().map(|e| e.name.as_str()).collect();
    header.push(DURATION_COLUMN);
    header.push(EVENT_COLUMN);
    let mut rows = Vec::with_capacity(ds.len());
    for inst in ds.instances() {
        let mut cells = schema.decode_cells(&inst.covariates)?;
        cells.push(fmt_f64(inst.duration));
        cells.push(if inst.event { "1" } else { "0" }.into());
        rows.push(cells);
    }
    write_csv(path, &header, rows)?;
    write_json(&schema_sidecar(path), schema)
}
