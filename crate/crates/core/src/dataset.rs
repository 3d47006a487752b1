//! Covariate schema, encoded survival datasets, standardization and VIF screening.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::linalg::{solve_normal_equations, SquareMatrix, PIVOT_TOL};
use crate::rng;
use crate::{Error, Result};

/// Kind of a declared covariate. Categorical covariates expand to one indicator column
/// per non-baseline level; the first declared level is the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateKind {
    Continuous,
    Binary,
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateEntry {
    pub name: String,
    #[serde(flatten)]
    pub kind: CovariateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl CovariateEntry {
    pub fn continuous(name: &str) -> Self {
        Self { name: name.into(), kind: CovariateKind::Continuous, unit: None }
    }

    pub fn binary(name: &str) -> Self {
        Self { name: name.into(), kind: CovariateKind::Binary, unit: None }
    }

    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: CovariateKind::Categorical { levels: levels.iter().map(|s| s.to_string()).collect() },
            unit: None,
        }
    }

    pub fn with_unit(mut self, unit: &str) -> Self {
        self.unit = Some(unit.into());
        self
    }

    fn encoded_width(&self) -> usize {
        match &self.kind {
            CovariateKind::Categorical { levels } => levels.len() - 1,
            _ => 1,
        }
    }
}

/// How an encoded column relates to its schema entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum ColumnRole {
    Continuous,
    Binary,
    Indicator { level: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// Index of the originating schema entry.
    pub entry: usize,
    pub role: ColumnRole,
}

impl Column {
    /// 0/1-valued column (binary covariate or one-hot indicator).
    pub fn is_binary(&self) -> bool {
        !matches!(self.role, ColumnRole::Continuous)
    }
}

/// Ordered list of declared covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CovariateEntry>", into = "Vec<CovariateEntry>")]
pub struct CovariateSchema {
    entries: Vec<CovariateEntry>,
}

impl TryFrom<Vec<CovariateEntry>> for CovariateSchema {
    type Error = Error;

    fn try_from(entries: Vec<CovariateEntry>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<CovariateSchema> for Vec<CovariateEntry> {
    fn from(s: CovariateSchema) -> Self {
        s.entries
    }
}

pub const DURATION_COLUMN: &str = "duration";
pub const EVENT_COLUMN: &str = "event";

impl CovariateSchema {
    pub fn new(entries: Vec<CovariateEntry>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if e.name.is_empty() {
                return Err(Error::InvalidInput("empty covariate name".into()));
            }
            if e.name == DURATION_COLUMN || e.name == EVENT_COLUMN {
                return Err(Error::InvalidInput(format!("`{}` is a reserved column name", e.name)));
            }
            if !seen.insert(e.name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate covariate `{}`", e.name)));
            }
            if let CovariateKind::Categorical { levels } = &e.kind {
                if levels.len() < 2 {
                    return Err(Error::InvalidInput(format!("categorical `{}` needs at least 2 levels", e.name)));
                }
                let distinct: BTreeSet<&str> = levels.iter().map(String::as_str).collect();
                if distinct.len() != levels.len() {
                    return Err(Error::InvalidInput(format!("categorical `{}` repeats a level", e.name)));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[CovariateEntry] {
        &self.entries
    }

    pub fn entry(&self, name: &str) -> Option<(usize, &CovariateEntry)> {
        self.entries.iter().enumerate().find(|(_, e)| e.name == name)
    }

    /// Number of encoded columns.
    pub fn width(&self) -> usize {
        self.entries.iter().map(CovariateEntry::encoded_width).sum()
    }

    pub fn columns(&self) -> Vec<Column> {
        let mut cols = Vec::with_capacity(self.width());
        for (i, e) in self.entries.iter().enumerate() {
            match &e.kind {
                CovariateKind::Continuous => {
                    cols.push(Column { name: e.name.clone(), entry: i, role: ColumnRole::Continuous })
                }
                CovariateKind::Binary => cols.push(Column { name: e.name.clone(), entry: i, role: ColumnRole::Binary }),
                CovariateKind::Categorical { levels } => {
                    for l in &levels[1..] {
                        cols.push(Column {
                            name: format!("{}={}", e.name, l),
                            entry: i,
                            role: ColumnRole::Indicator { level: l.clone() },
                        });
                    }
                }
            }
        }
        cols
    }

    /// Encodes one row of textual cells, one per schema entry, in schema order.
    pub fn encode_cells<S: AsRef<str>>(&self, cells: &[S]) -> Result<Vec<f64>> {
        if cells.len() != self.entries.len() {
            return Err(Error::DimensionMismatch { expected: self.entries.len(), found: cells.len() });
        }
        let mut out = Vec::with_capacity(self.width());
        for (e, cell) in self.entries.iter().zip(cells) {
            let cell = cell.as_ref().trim();
            if cell.is_empty() {
                return Err(Error::InvalidInput(format!("blank value for `{}`", e.name)));
            }
            match &e.kind {
                CovariateKind::Continuous => {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("unparseable number `{}` for `{}`", cell, e.name)))?;
                    if !v.is_finite() {
                        return Err(Error::NonFinite(e.name.clone()));
                    }
                    out.push(v);
                }
                CovariateKind::Binary => out.push(parse_flag(cell).ok_or_else(|| {
                    Error::InvalidInput(format!("binary `{}` must be 0 or 1, got `{}`", e.name, cell))
                })?),
                CovariateKind::Categorical { levels } => {
                    let pos = levels.iter().position(|l| l == cell).ok_or_else(|| {
                        Error::InvalidInput(format!("undeclared level `{}` for `{}`", cell, e.name))
                    })?;
                    for k in 1..levels.len() {
                        out.push(if k == pos { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`encode_cells`](Self::encode_cells) for a full-width, unstandardized row.
    pub fn decode_cells(&self, row: &[f64]) -> Result<Vec<String>> {
        if row.len() != self.width() {
            return Err(Error::DimensionMismatch { expected: self.width(), found: row.len() });
        }
        let mut out = Vec::with_capacity(self.entries.len());
        let mut at = 0;
        for e in &self.entries {
            match &e.kind {
                CovariateKind::Continuous => out.push(format!("{}", row[at])),
                CovariateKind::Binary => out.push(if row[at] != 0.0 { "1".into() } else { "0".into() }),
                CovariateKind::Categorical { levels } => {
                    let block = &row[at..at + levels.len() - 1];
                    let hot: Vec<usize> = block.iter().enumerate().filter(|(_, v)| **v == 1.0).map(|(i, _)| i).collect();
                    let label = match hot.as_slice() {
                        [] if block.iter().all(|v| *v == 0.0) => &levels[0],
                        [k] => &levels[k + 1],
                        _ => return Err(Error::InvalidInput(format!("malformed one-hot block for `{}`", e.name))),
                    };
                    out.push(label.clone());
                }
            }
            at += e.encoded_width();
        }
        Ok(out)
    }
}

fn parse_flag(cell: &str) -> Option<f64> {
    match cell {
        "0" | "0.0" => Some(0.0),
        "1" | "1.0" => Some(1.0),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub covariates: Vec<f64>,
    /// Observed wait time in seconds.
    pub duration: f64,
    /// `true` when the crossing was observed, `false` when right-censored.
    pub event: bool,
}

impl Instance {
    pub fn new(covariates: Vec<f64>, duration: f64, event: bool) -> Self {
        Self { covariates, duration, event }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub mean: f64,
    pub sd: f64,
}

/// Per-column standardization record; `None` for columns left untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub columns: Vec<Option<ColumnScale>>,
}

impl Standardization {
    pub fn apply_row(&self, row: &mut [f64]) {
        for (v, s) in row.iter_mut().zip(&self.columns) {
            if let Some(s) = s {
                *v = (*v - s.mean) / s.sd;
            }
        }
    }

    pub fn select(&self, cols: &[usize]) -> Self {
        Self { columns: cols.iter().map(|&j| self.columns[j]).collect() }
    }

    /// Maps a standardized value of column `j` back to original units.
    pub fn invert(&self, j: usize, v: f64) -> f64 {
        match self.columns.get(j).copied().flatten() {
            Some(s) => v * s.sd + s.mean,
            None => v,
        }
    }
}

/// Encoded survival dataset. Immutable once built; transformations return new values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: CovariateSchema,
    columns: Vec<Column>,
    instances: Vec<Instance>,
    standardization: Option<Standardization>,
}

impl Dataset {
    pub fn new(schema: CovariateSchema, instances: Vec<Instance>) -> Result<Self> {
        let columns = schema.columns();
        Self::with_columns(schema, columns, instances)
    }

    fn with_columns(schema: CovariateSchema, columns: Vec<Column>, instances: Vec<Instance>) -> Result<Self> {
        let width = columns.len();
        for (i, inst) in instances.iter().enumerate() {
            if inst.covariates.len() != width {
                return Err(Error::DimensionMismatch { expected: width, found: inst.covariates.len() });
            }
            if !(inst.duration >= 0.0) || !inst.duration.is_finite() {
                return Err(Error::InvalidInput(format!("row {}: duration must be finite and >= 0", i)));
            }
            for (v, c) in inst.covariates.iter().zip(&columns) {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("row {} column `{}`", i, c.name)));
                }
                if c.is_binary() && *v != 0.0 && *v != 1.0 {
                    return Err(Error::InvalidInput(format!("row {}: column `{}` must be 0 or 1", i, c.name)));
                }
            }
        }
        Ok(Self { schema, columns, instances, standardization: None })
    }

    pub fn schema(&self) -> &CovariateSchema {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn event_count(&self) -> usize {
        self.instances.iter().filter(|i| i.event).count()
    }

    pub fn require_events(&self) -> Result<()> {
        if self.event_count() == 0 {
            Err(Error::NoEvents)
        } else {
            Ok(())
        }
    }

    pub fn durations(&self) -> Vec<f64> {
        self.instances.iter().map(|i| i.duration).collect()
    }

    pub fn events(&self) -> Vec<bool> {
        self.instances.iter().map(|i| i.event).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.instances.iter().map(|i| i.covariates[j]).collect()
    }

    /// Row-major covariate matrix.
    pub fn covariate_matrix(&self) -> Vec<f64> {
        self.instances.iter().flat_map(|i| i.covariates.iter().copied()).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            columns: self.columns.clone(),
            instances: rows.iter().map(|&r| self.instances[r].clone()).collect(),
            standardization: self.standardization.clone(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = cols.iter().find(|&&j| j >= self.width()) {
            return Err(Error::InvalidInput(format!("column index {} out of range", bad)));
        }
        Ok(Dataset {
            schema: self.schema.clone(),
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            instances: self
                .instances
                .iter()
                .map(|i| Instance {
                    covariates: cols.iter().map(|&j| i.covariates[j]).collect(),
                    duration: i.duration,
                    event: i.event,
                })
                .collect(),
            standardization: self.standardization.as_ref().map(|s| s.select(cols)),
        })
    }

    /// Selects columns by name, in the order given.
    pub fn select_named(&self, names: &[String]) -> Result<Dataset> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n).ok_or_else(|| Error::UnknownCovariate(n.clone())))
            .collect::<Result<Vec<_>>>()?;
        self.select_columns(&idx)
    }

    /// Rescales continuous columns to zero mean and unit population standard deviation
    /// using statistics from `fit_rows` only. Binary and indicator columns are untouched.
    pub fn standardize(&self, fit_rows: &[usize]) -> Result<Dataset> {
        if fit_rows.is_empty() {
            return Err(Error::InvalidInput("standardize needs at least one fitting row".into()));
        }
        let n = fit_rows.len() as f64;
        let mut scales = Vec::with_capacity(self.width());
        for (j, c) in self.columns.iter().enumerate() {
            if c.is_binary() {
                scales.push(None);
                continue;
            }
            let mean = fit_rows.iter().map(|&r| self.instances[r].covariates[j]).sum::<f64>() / n;
            let var = fit_rows
                .iter()
                .map(|&r| {
                    let d = self.instances[r].covariates[j] - mean;
                    d * d
                })
                .sum::<f64>()
                / n;
            let sd = sqrt(var);
            if !(sd > 1e-12 * (1.0 + mean.abs())) {
                return Err(Error::ZeroVariance(c.name.clone()));
            }
            scales.push(Some(ColumnScale { mean, sd }));
        }
        self.apply_standardization(&Standardization { columns: scales })
    }

    /// Replays a recorded standardization (e.g. training-split statistics on held-out rows).
    pub fn apply_standardization(&self, s: &Standardization) -> Result<Dataset> {
        if s.columns.len() != self.width() {
            return Err(Error::DimensionMismatch { expected: self.width(), found: s.columns.len() });
        }
        let mut out = self.clone();
        for inst in &mut out.instances {
            s.apply_row(&mut inst.covariates);
        }
        out.standardization = Some(s.clone());
        Ok(out)
    }
}

/// Seeded shuffle split; returns `(train, test)` row indices, each sorted ascending.
pub fn train_test_split(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(seed));
    let n_test = libm::round((n as f64) * test_fraction) as usize;
    let mut test = idx[..n_test.min(n)].to_vec();
    let mut train = idx[n_test.min(n)..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Seeded k-fold partition; fold sizes differ by at most one.
pub fn kfold(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(seed));
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    folds
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifEntry {
    pub name: String,
    /// `f64::INFINITY` marks an exactly collinear column.
    pub vif: f64,
}

/// Variance inflation factor of every column: `1 / (1 - R^2)` from regressing the column
/// on all other columns plus an intercept.
pub fn vif(ds: &Dataset) -> Result<Vec<VifEntry>> {
    let p = ds.width();
    if ds.len() < p + 1 {
        return Err(Error::InvalidInput(format!("VIF needs at least {} rows, got {}", p + 1, ds.len())));
    }
    // Centered cross-product matrix absorbs the intercept.
    let n = ds.len() as f64;
    let means: Vec<f64> = (0..p).map(|j| ds.instances.iter().map(|i| i.covariates[j]).sum::<f64>() / n).collect();
    let mut cross = SquareMatrix::zeros(p);
    let mut centered = vec![0.0; p];
    for inst in &ds.instances {
        for j in 0..p {
            centered[j] = inst.covariates[j] - means[j];
        }
        cross.add_outer(1.0, &centered);
    }
    for j in 0..p {
        if !(cross.get(j, j) > 0.0) {
            return Err(Error::ZeroVariance(ds.columns[j].name.clone()));
        }
    }
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        let others: Vec<usize> = (0..p).filter(|&k| k != j).collect();
        let tss = cross.get(j, j);
        let rss = if others.is_empty() {
            tss
        } else {
            let gram = crate::linalg::submatrix(&cross, &others);
            let rhs: Vec<f64> = others.iter().map(|&k| cross.get(k, j)).collect();
            let (coef, _) = solve_normal_equations(&gram, &rhs, PIVOT_TOL);
            // RSS = tss - b' X'y for the least-squares b
            tss - coef.iter().zip(&rhs).map(|(b, r)| b * r).sum::<f64>()
        };
        let one_minus_r2 = (rss / tss).max(0.0);
        let v = if one_minus_r2 < 1e-12 { f64::INFINITY } else { 1.0 / one_minus_r2 };
        out.push(VifEntry { name: ds.columns[j].name.clone(), vif: v });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifScreen {
    /// Indices (into the input dataset) of retained columns, ascending.
    pub kept: Vec<usize>,
    /// Removed columns in removal order, with the VIF that triggered removal.
    pub dropped: Vec<VifEntry>,
    /// VIFs of the retained columns after screening.
    pub remaining: Vec<VifEntry>,
}

pub const DEFAULT_VIF_THRESHOLD: f64 = 10.0;

/// Iteratively drops the column with the highest VIF while it exceeds `threshold`;
/// ties go to the earliest column.
pub fn vif_filter(ds: &Dataset, threshold: f64) -> Result<VifScreen> {
    let mut kept: Vec<usize> = (0..ds.width()).collect();
    let mut dropped = Vec::new();
    loop {
        let sub = ds.select_columns(&kept)?;
        let v = vif(&sub)?;
        let mut worst: Option<usize> = None;
        for (k, e) in v.iter().enumerate() {
            if e.vif > threshold && worst.map_or(true, |w| e.vif > v[w].vif) {
                worst = Some(k);
            }
        }
        match worst {
            Some(k) => {
                dropped.push(v[k].clone());
                kept.remove(k);
                if kept.is_empty() {
                    return Ok(VifScreen { kept, dropped, remaining: Vec::new() });
                }
            }
            None => return Ok(VifScreen { kept, dropped, remaining: v }),
        }
    }
}
