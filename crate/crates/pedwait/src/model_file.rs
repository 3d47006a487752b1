//! Versioned JSON container for fitted models. A file records the encoded input
//! columns it expects and the training-split standardization, so it can score any
//! dataset that carries those columns.

use std::path::Path;

use pedwait_core::dataset::Standardization;
use pedwait_core::deep::{Batch, DeepCoxModel};
use pedwait_core::explain::RiskModel;
use pedwait_core::survival::{concordance_index, CoxModel, LogisticBaseline};
use pedwait_core::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io;

pub const FORMAT: &str = "pedwait-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    Deep(DeepCoxModel),
    Cox(CoxModel),
    Logistic(LogisticBaseline),
}

impl RiskModel for ModelBody {
    fn width(&self) -> usize {
        match self {
            ModelBody::Deep(m) => m.width(),
            ModelBody::Cox(m) => m.width(),
            ModelBody::Logistic(m) => m.width(),
        }
    }

    fn evaluate(&self, rows: &Batch) -> pedwait_core::Result<Vec<f64>> {
        match self {
            ModelBody::Deep(m) => m.evaluate(rows),
            ModelBody::Cox(m) => m.evaluate(rows),
            ModelBody::Logistic(m) => m.evaluate(rows),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub name: String,
    /// Encoded column names, in the order the model consumes them.
    pub inputs: Vec<String>,
    pub standardization: Option<Standardization>,
    pub model: ModelBody,
}

impl ModelFile {
    /// Wraps a model trained on `trained_on`, whose columns and standardization are recorded.
    pub fn new(name: &str, trained_on: &Dataset, model: ModelBody) -> CliResult<Self> {
        if model.width() != trained_on.width() {
            return Err(pedwait_core::Error::DimensionMismatch { expected: trained_on.width(), found: model.width() }.into());
        }
        Ok(Self {
            format: FORMAT.into(),
            version: VERSION,
            name: name.into(),
            inputs: trained_on.column_names(),
            standardization: trained_on.standardization().cloned(),
            model,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let f: ModelFile = io::read_json(path)?;
        if f.format != FORMAT || f.version != VERSION {
            return Err(CliError::Config(format!(
                "{}: expected {} version {}, found {} version {}",
                path.display(),
                FORMAT,
                VERSION,
                f.format,
                f.version
            )));
        }
        if f.inputs.len() != f.model.width() {
            return Err(CliError::Config(format!("{}: input list does not match the model width", path.display())));
        }
        Ok(f)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        io::write_json(path, self)
    }

    /// Selects and rescales the model's inputs from an unstandardized dataset.
    pub fn prepare(&self, raw: &Dataset) -> CliResult<Dataset> {
        if raw.standardization().is_some() {
            return Err(CliError::Config("model inputs must be prepared from unstandardized data".into()));
        }
        let ds = raw.select_named(&self.inputs)?;
        Ok(match &self.standardization {
            Some(s) => ds.apply_standardization(s)?,
            None => ds,
        })
    }

    pub fn risks(&self, prepared: &Dataset) -> CliResult<Vec<f64>> {
        Ok(self.model.evaluate(&Batch::from_dataset(prepared))?)
    }

    pub fn cindex(&self, prepared: &Dataset) -> CliResult<f64> {
        let r = self.risks(prepared)?;
        Ok(concordance_index(&prepared.durations(), &prepared.events(), &r)?)
    }
}
