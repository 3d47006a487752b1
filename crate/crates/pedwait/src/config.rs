//! Run configuration: one JSON document with a block per command, overridable with
//! `--set dotted.path=value`. Unset per-command seeds are derived from the top-level
//! seed before anything runs, and the resolved document is written next to the outputs.

use std::path::{Path, PathBuf};

use pedwait_core::cohort::{HazardSpec, Observation, ParticipantMarginals};
use pedwait_core::dataset::DEFAULT_VIF_THRESHOLD;
use pedwait_core::deep::Activation;
use pedwait_core::doe::DeltaMode;
use pedwait_core::explain::{Condition, DEFAULT_STRATUM_FLOOR};
use pedwait_core::rng::derive_seed;
use pedwait_core::survival::{FitOptions, DEFAULT_INTERVAL};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Dataset read by fit, rank, train, explain and evaluate; defaults to `<out>/cohort.csv`.
    pub data: Option<PathBuf>,
    pub simulate: SimulateConfig,
    pub fit: FitConfig,
    pub rank: RankConfig,
    pub train: TrainSection,
    pub explain: ExplainConfig,
    pub design: DesignConfig,
    pub evaluate: EvaluateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            data: None,
            simulate: SimulateConfig::default(),
            fit: FitConfig::default(),
            rank: RankConfig::default(),
            train: TrainSection::default(),
            explain: ExplainConfig::default(),
            design: DesignConfig::default(),
            evaluate: EvaluateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub participants: usize,
    pub scenarios_per_participant: usize,
    pub repeats: usize,
    /// Scenarios drawn uniformly from the full crossing-scenario catalog when no design file is given.
    pub scenario_count: usize,
    /// A `design.csv` written by the design command.
    pub design: Option<PathBuf>,
    /// Draw each participant's scenarios in proportion to the design weights.
    pub weighted: bool,
    pub marginals: ParticipantMarginals,
    /// `None` uses [`default_hazard`].
    pub hazard: Option<HazardSpec>,
    pub observation: Observation,
    pub seed: Option<u64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            participants: 80,
            scenarios_per_participant: 15,
            repeats: 2,
            scenario_count: 90,
            design: None,
            weighted: false,
            marginals: ParticipantMarginals::default(),
            hazard: None,
            observation: Observation { censor_time: Some(60.0), dangerous_cross_probability: 0.05 },
            seed: None,
        }
    }
}

/// Log-linear hazard on standardized cohort columns with the signs and magnitudes of
/// the published proportional-hazards fit; baseline mean wait of four seconds.
pub fn default_hazard() -> HazardSpec {
    let mut h = HazardSpec::linear(
        -(4.0f64).ln(),
        &[
            ("density", -0.83),
            ("age=30_39", 0.32),
            ("lane_width", -0.31),
            ("road_type=two_way_median", 0.22),
            ("walk_to_shopping", 0.18),
            ("age=over_50", -0.17),
            ("vr_experience", 0.14),
            ("cars=none", 0.14),
            ("female", -0.13),
            ("main_mode=car", -0.12),
        ],
    );
    h.standardize = true;
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Standardize continuous columns before fitting (coefficients per standard deviation).
    pub standardize: bool,
    pub vif_threshold: f64,
    pub options: FitOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { standardize: true, vif_threshold: DEFAULT_VIF_THRESHOLD, options: FitOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankConfig {
    pub vif_threshold: f64,
    pub k: usize,
    pub sigma: f64,
    /// `None` visits every instance once.
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

impl Default for RankConfig {
    fn default() -> Self {
        Self { vif_threshold: DEFAULT_VIF_THRESHOLD, k: 10, sigma: 20.0, samples: None, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub dropout_rate: f64,
    pub use_batch_norm: bool,
    pub activation: Activation,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { hidden_layers: 3, hidden_units: 90, dropout_rate: 0.1, use_batch_norm: true, activation: Activation::Relu }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub trials: usize,
    pub folds: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { trials: 10, folds: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub test_fraction: f64,
    pub vif_threshold: f64,
    /// Decision interval of the discrete-time logistic baseline, seconds.
    pub interval: f64,
    pub cox: FitOptions,
    pub network: NetworkConfig,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub epochs: usize,
    pub momentum: f64,
    pub batch_size: Option<usize>,
    /// Ranked covariates fed to the second deep model (clamped to the available width).
    pub top_n: usize,
    pub relief_k: usize,
    pub relief_sigma: f64,
    /// Random search over architecture and optimizer settings before the final fits.
    pub search: Option<SearchConfig>,
    pub seed: Option<u64>,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            vif_threshold: DEFAULT_VIF_THRESHOLD,
            interval: DEFAULT_INTERVAL,
            cox: FitOptions::default(),
            network: NetworkConfig::default(),
            learning_rate: 0.001,
            lr_decay: 0.001,
            epochs: 100,
            momentum: 0.0,
            batch_size: None,
            top_n: 19,
            relief_k: 10,
            relief_sigma: 20.0,
            search: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainMethod {
    /// Exact enumeration up to `exact_limit` features, sampled beyond.
    #[default]
    Auto,
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    /// Defaults to `<out>/model_dcph2.json`.
    pub model: Option<PathBuf>,
    pub method: ExplainMethod,
    pub exact_limit: usize,
    /// Antithetic permutation pairs per instance for the sampled estimator.
    pub samples: usize,
    /// Explain only the first rows of the dataset.
    pub max_rows: Option<usize>,
    pub conditions: Vec<Condition>,
    /// Restrict interaction tables to these features; `None` means all others.
    pub targets: Option<Vec<String>>,
    pub stratum_floor: usize,
    pub seed: Option<u64>,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            model: None,
            method: ExplainMethod::Auto,
            exact_limit: 10,
            samples: 64,
            max_rows: None,
            conditions: vec![
                Condition::equals("age=18_29", 1.0),
                Condition::equals("female", 1.0),
                Condition::equals("automation=automated", 1.0),
                Condition::equals("night", 1.0),
            ],
            targets: None,
            stratum_floor: DEFAULT_STRATUM_FLOOR,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    /// JSON factor catalog; `None` uses the full crossing-scenario catalog.
    pub catalog: Option<PathBuf>,
    pub m: usize,
    /// Prior coefficients, intercept first; empty means zeros.
    pub beta_prior: Vec<f64>,
    pub censor_time: f64,
    pub iterations: usize,
    pub initial_temperature: f64,
    pub alpha: f64,
    pub swap_probability: f64,
    pub weight_step: f64,
    pub delta_mode: DeltaMode,
    pub trace_every: usize,
    /// Also report the top scenarios by weight.
    pub budget: Option<usize>,
    pub seed: Option<u64>,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            catalog: None,
            m: 90,
            beta_prior: Vec::new(),
            censor_time: 30.0,
            iterations: 20_000,
            initial_temperature: 0.05,
            alpha: 0.9995,
            swap_probability: 0.5,
            weight_step: 0.1,
            delta_mode: DeltaMode::NormalizedLogDet,
            trace_every: 100,
            budget: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Model files to score; empty means every `model_*.json` the train command writes.
    pub models: Vec<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        io::read_json(path)
    }

    /// Applies `dotted.path=value` overrides. Values are parsed as JSON and fall back
    /// to plain strings, so `train.epochs=5` and `data=cohort.csv` both work.
    pub fn with_overrides(self, sets: &[String]) -> CliResult<Self> {
        if sets.is_empty() {
            return Ok(self);
        }
        let mut doc = serde_json::to_value(&self).map_err(|e| CliError::json("configuration", e))?;
        for s in sets {
            let (path, raw) =
                s.split_once('=').ok_or_else(|| CliError::Config(format!("override `{}` is not key=value", s)))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
            set_path(&mut doc, path, value)?;
        }
        serde_json::from_value(doc).map_err(|e| CliError::json("configuration after overrides", e))
    }

    /// Fills every unset command seed from the top-level seed.
    pub fn resolve_seeds(mut self) -> Self {
        let s = self.seed;
        let fill = |slot: &mut Option<u64>, stream: u64| {
            slot.get_or_insert(derive_seed(s, stream));
        };
        fill(&mut self.simulate.seed, 1);
        fill(&mut self.rank.seed, 2);
        fill(&mut self.train.seed, 3);
        fill(&mut self.explain.seed, 4);
        fill(&mut self.design.seed, 5);
        self
    }

    pub fn data_path(&self, out: &Path) -> PathBuf {
        self.data.clone().unwrap_or_else(|| out.join("cohort.csv"))
    }
}

fn set_path(doc: &mut Value, path: &str, value: Value) -> CliResult<()> {
    let mut cur = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        if key.is_empty() {
            return Err(CliError::Config(format!("empty key in override path `{}`", path)));
        }
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("`{}` does not name a settings block", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert((*key).into(), value);
            return Ok(());
        }
        cur = obj.entry(*key).or_insert(Value::Null);
    }
    unreachable!("split always yields at least one key")
}
