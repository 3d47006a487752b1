//! Synthetic crossing cohorts.
//!
//! Participants are sampled from declared marginals, each is shown a subset of the
//! scenario list (with repeats), and wait times are exponential with a log-rate given
//! by a declared [`HazardSpec`]. Dangerous crossings are dropped with a fixed
//! probability instead of being simulated from trajectories.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use libm::{log, pow, sin};
use rand::Rng as _;
use rand_distr::{Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{CovariateEntry, CovariateSchema, Dataset, Instance};
use crate::doe::FactorCatalog;
use crate::rng::{self, derive_seed, Rng};
use crate::{Error, Result};

/// First level of each list is the encoding baseline.
pub const ROAD_TYPES: [&str; 3] = ["two_way", "one_way", "two_way_median"];
pub const AUTOMATION: [&str; 3] = ["human", "mixed", "automated"];
pub const BRAKING_LEVELS: [&str; 3] = ["1", "2", "3"];
pub const AGE_BRACKETS: [&str; 4] = ["40_49", "18_29", "30_39", "over_50"];
pub const CAR_COUNTS: [&str; 3] = ["one", "none", "more"];
pub const MAIN_MODES: [&str; 3] = ["active", "transit", "car"];

/// One experimental condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// km/h
    pub speed_limit: f64,
    /// s
    pub min_gap: f64,
    /// m
    pub lane_width: f64,
    pub road_type: String,
    pub braking_level: u8,
    pub automation: String,
    /// veh/h
    pub arrival_rate: f64,
    pub night: bool,
    pub snowy: bool,
}

impl ScenarioSpec {
    /// Vehicles per km implied by arrival rate and speed.
    pub fn density(&self) -> f64 {
        self.arrival_rate / self.speed_limit
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.speed_limit, self.min_gap, self.lane_width, self.arrival_rate];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput("scenario speed, gap, width and arrival rate must be positive".into()));
        }
        if !ROAD_TYPES.contains(&self.road_type.as_str()) {
            return Err(Error::InvalidInput(format!("unknown road type `{}`", self.road_type)));
        }
        if !AUTOMATION.contains(&self.automation.as_str()) {
            return Err(Error::InvalidInput(format!("unknown automation status `{}`", self.automation)));
        }
        if !(1..=3).contains(&self.braking_level) {
            return Err(Error::InvalidInput(format!("braking level {} not in 1..=3", self.braking_level)));
        }
        Ok(())
    }

    /// Reads scenario `index` of a catalog laid out like [`FactorCatalog::table1`].
    pub fn from_catalog(catalog: &FactorCatalog, index: usize) -> Result<Self> {
        if index >= catalog.size() {
            return Err(Error::InvalidInput(format!("scenario {} outside catalog", index)));
        }
        let labels = catalog.labels(index);
        let get = |name: &str| -> Result<&str> {
            catalog
                .factors()
                .iter()
                .position(|f| f.name == name)
                .map(|i| labels[i].as_str())
                .ok_or_else(|| Error::UnknownCovariate(name.into()))
        };
        let num = |name: &str| -> Result<f64> {
            get(name)?.parse().map_err(|_| Error::InvalidInput(format!("factor `{}` is not numeric", name)))
        };
        let spec = Self {
            speed_limit: num("speed_limit")?,
            min_gap: num("min_gap")?,
            lane_width: num("lane_width")?,
            road_type: get("road_type")?.into(),
            braking_level: num("braking_level")? as u8,
            automation: get("automation")?.into(),
            arrival_rate: num("arrival_rate")?,
            night: get("time_of_day")? == "night",
            snowy: get("weather")? == "snowy",
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Sampling probabilities for participant attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantMarginals {
    /// Over [`AGE_BRACKETS`].
    pub age: Vec<f64>,
    pub female: f64,
    pub walk_to_work: f64,
    pub walk_to_shopping: f64,
    pub license: f64,
    /// Over [`CAR_COUNTS`].
    pub cars: Vec<f64>,
    /// Over [`MAIN_MODES`].
    pub main_mode: Vec<f64>,
    pub vr_experience: f64,
}

impl Default for ParticipantMarginals {
    fn default() -> Self {
        Self {
            age: vec![0.15, 0.45, 0.25, 0.15],
            female: 0.45,
            walk_to_work: 0.4,
            walk_to_shopping: 0.6,
            license: 0.7,
            cars: vec![0.4, 0.35, 0.25],
            main_mode: vec![0.3, 0.4, 0.3],
            vr_experience: 0.5,
        }
    }
}

impl ParticipantMarginals {
    fn validate(&self) -> Result<()> {
        let p_ok = |p: f64| (0.0..=1.0).contains(&p);
        let dist_ok = |d: &[f64], n: usize| d.len() == n && d.iter().all(|p| p_ok(*p)) && d.iter().sum::<f64>() > 0.0;
        if !dist_ok(&self.age, AGE_BRACKETS.len()) || !dist_ok(&self.cars, CAR_COUNTS.len()) || !dist_ok(&self.main_mode, MAIN_MODES.len()) {
            return Err(Error::InvalidInput("categorical marginals have the wrong length or invalid probabilities".into()));
        }
        if ![self.female, self.walk_to_work, self.walk_to_shopping, self.license, self.vr_experience].iter().all(|p| p_ok(*p)) {
            return Err(Error::InvalidInput("binary marginals must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Participant {
    age: usize,
    female: bool,
    walk_to_work: bool,
    walk_to_shopping: bool,
    license: bool,
    cars: usize,
    main_mode: usize,
    vr_experience: bool,
}

fn categorical(probs: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

impl Participant {
    fn sample(m: &ParticipantMarginals, rng: &mut Rng) -> Self {
        Self {
            age: categorical(&m.age, rng),
            female: rng.random::<f64>() < m.female,
            walk_to_work: rng.random::<f64>() < m.walk_to_work,
            walk_to_shopping: rng.random::<f64>() < m.walk_to_shopping,
            license: rng.random::<f64>() < m.license,
            cars: categorical(&m.cars, rng),
            main_mode: categorical(&m.main_mode, rng),
            vr_experience: rng.random::<f64>() < m.vr_experience,
        }
    }
}

/// Schema of generated cohorts: scenario covariates then participant covariates.
pub fn cohort_schema() -> CovariateSchema {
    CovariateSchema::new(vec![
        CovariateEntry::continuous("speed_limit").with_unit("km/h"),
        CovariateEntry::continuous("density").with_unit("veh/km"),
        CovariateEntry::continuous("min_gap").with_unit("s"),
        CovariateEntry::continuous("lane_width").with_unit("m"),
        CovariateEntry::categorical("road_type", &ROAD_TYPES),
        CovariateEntry::categorical("braking_level", &BRAKING_LEVELS),
        CovariateEntry::categorical("automation", &AUTOMATION),
        CovariateEntry::continuous("arrival_rate").with_unit("veh/h"),
        CovariateEntry::binary("night"),
        CovariateEntry::binary("snowy"),
        CovariateEntry::categorical("age", &AGE_BRACKETS),
        CovariateEntry::binary("female"),
        CovariateEntry::binary("walk_to_work"),
        CovariateEntry::binary("walk_to_shopping"),
        CovariateEntry::binary("license"),
        CovariateEntry::categorical("cars", &CAR_COUNTS),
        CovariateEntry::categorical("main_mode", &MAIN_MODES),
        CovariateEntry::binary("vr_experience"),
    ])
    .expect("built-in schema is valid")
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.into()
}

fn cells(s: &ScenarioSpec, p: &Participant) -> Vec<String> {
    vec![
        format!("{}", s.speed_limit),
        format!("{}", s.density()),
        format!("{}", s.min_gap),
        format!("{}", s.lane_width),
        s.road_type.clone(),
        s.braking_level.to_string(),
        s.automation.clone(),
        format!("{}", s.arrival_rate),
        flag(s.night),
        flag(s.snowy),
        AGE_BRACKETS[p.age].into(),
        flag(p.female),
        flag(p.walk_to_work),
        flag(p.walk_to_shopping),
        flag(p.license),
        CAR_COUNTS[p.cars].into(),
        MAIN_MODES[p.main_mode].into(),
        flag(p.vr_experience),
    ]
}

/// One additive piece of the log-rate, referring to encoded column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum HazardTerm {
    Linear { covariate: String, coef: f64 },
    Product { a: String, b: String, coef: f64 },
    Sin { covariate: String, frequency: f64, coef: f64 },
    Square { covariate: String, coef: f64 },
}

impl HazardTerm {
    fn covariates(&self) -> Vec<&str> {
        match self {
            HazardTerm::Linear { covariate, .. } | HazardTerm::Sin { covariate, .. } | HazardTerm::Square { covariate, .. } => {
                vec![covariate.as_str()]
            }
            HazardTerm::Product { a, b, .. } => vec![a.as_str(), b.as_str()],
        }
    }
}

/// `log h(z) = intercept + sum of terms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardSpec {
    pub intercept: f64,
    pub terms: Vec<HazardTerm>,
    /// Evaluate terms on cohort-standardized covariates (population sd).
    #[serde(default)]
    pub standardize: bool,
}

impl HazardSpec {
    pub fn constant(intercept: f64) -> Self {
        Self { intercept, terms: Vec::new(), standardize: false }
    }

    pub fn linear(intercept: f64, coefs: &[(&str, f64)]) -> Self {
        Self {
            intercept,
            terms: coefs.iter().map(|(c, b)| HazardTerm::Linear { covariate: (*c).into(), coef: *b }).collect(),
            standardize: false,
        }
    }

    /// Resolves every referenced column against `names`.
    fn bind(&self, names: &[String]) -> Result<Vec<Vec<usize>>> {
        self.terms
            .iter()
            .map(|t| {
                t.covariates()
                    .into_iter()
                    .map(|c| names.iter().position(|n| n == c).ok_or_else(|| Error::UnknownCovariate(c.into())))
                    .collect()
            })
            .collect()
    }

    fn log_rate(&self, bound: &[Vec<usize>], z: &[f64]) -> f64 {
        let mut eta = self.intercept;
        for (t, idx) in self.terms.iter().zip(bound) {
            eta += match t {
                HazardTerm::Linear { coef, .. } => coef * z[idx[0]],
                HazardTerm::Product { coef, .. } => coef * z[idx[0]] * z[idx[1]],
                HazardTerm::Sin { frequency, coef, .. } => coef * sin(frequency * z[idx[0]]),
                HazardTerm::Square { coef, .. } => coef * pow(z[idx[0]], 2.0),
            };
        }
        eta
    }

    /// Log-rates for every row of `rows` (columns named by `names`).
    pub fn log_rates(&self, names: &[String], rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let bound = self.bind(names)?;
        let mut scaled: Vec<Vec<f64>> = rows.to_vec();
        if self.standardize && !rows.is_empty() {
            let mut used: Vec<usize> = bound.iter().flatten().copied().collect();
            used.sort_unstable();
            used.dedup();
            let n = rows.len() as f64;
            for j in used {
                let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
                let var = rows.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<f64>() / n;
                // a constant column only shifts the intercept; small cohorts can miss a level
                let sd = if var > 0.0 { libm::sqrt(var) } else { 1.0 };
                scaled.iter_mut().for_each(|r| r[j] = (r[j] - mean) / sd);
            }
        }
        Ok(scaled.iter().map(|r| self.log_rate(&bound, r)).collect())
    }
}

/// Per-row randomness drawn up front so wait times do not depend on evaluation order.
struct Draw {
    duration_u: f64,
    drop_u: f64,
}

fn draw(rng: &mut Rng) -> Draw {
    Draw { duration_u: Open01.sample(rng), drop_u: rng.random() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Type-I censoring time; `None` observes every event.
    #[serde(default)]
    pub censor_time: Option<f64>,
    /// Probability that a row is discarded as a dangerous crossing.
    #[serde(default)]
    pub dangerous_cross_probability: f64,
}

impl Default for Observation {
    fn default() -> Self {
        Self { censor_time: None, dangerous_cross_probability: 0.0 }
    }
}

impl Observation {
    fn validate(&self) -> Result<()> {
        if matches!(self.censor_time, Some(c) if !(c > 0.0)) {
            return Err(Error::InvalidInput("censor time must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dangerous_cross_probability) {
            return Err(Error::InvalidInput("dangerous-cross probability must be in [0, 1)".into()));
        }
        Ok(())
    }
}

fn realize(
    schema: CovariateSchema,
    rows: Vec<Vec<f64>>,
    draws: Vec<Draw>,
    hazard: &HazardSpec,
    obs: &Observation,
) -> Result<Dataset> {
    let names: Vec<String> = schema.columns().into_iter().map(|c| c.name).collect();
    let eta = hazard.log_rates(&names, &rows)?;
    let mut instances = Vec::with_capacity(rows.len());
    for ((z, d), e) in rows.into_iter().zip(draws).zip(eta) {
        if d.drop_u < obs.dangerous_cross_probability {
            continue;
        }
        let rate = libm::exp(e);
        let t = (-log(d.duration_u) / rate).max(f64::MIN_POSITIVE);
        if !t.is_finite() {
            return Err(Error::NonFinite("generated wait time".into()));
        }
        let (duration, event) = match obs.censor_time {
            Some(c) if t > c => (c, false),
            _ => (t, true),
        };
        instances.push(Instance::new(z, duration, event));
    }
    if instances.is_empty() {
        return Err(Error::InvalidInput("every generated row was discarded".into()));
    }
    Dataset::new(schema, instances)
}

/// How each participant's scenarios are drawn from the list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "draw", content = "weights", rename_all = "snake_case")]
pub enum ScenarioDraw {
    /// Uniform without replacement.
    #[default]
    Uniform,
    /// Without replacement, inclusion favouring larger weights (one per scenario).
    Weighted(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub participants: usize,
    pub scenarios_per_participant: usize,
    pub repeats: usize,
    #[serde(default)]
    pub marginals: ParticipantMarginals,
    pub hazard: HazardSpec,
    #[serde(default)]
    pub observation: Observation,
    #[serde(default)]
    pub draw: ScenarioDraw,
    pub seed: u64,
}

impl CohortConfig {
    /// 15 scenarios per participant, each shown twice.
    pub fn new(participants: usize, hazard: HazardSpec, seed: u64) -> Self {
        Self {
            participants,
            scenarios_per_participant: 15,
            repeats: 2,
            marginals: ParticipantMarginals::default(),
            hazard,
            observation: Observation::default(),
            draw: ScenarioDraw::Uniform,
            seed,
        }
    }
}

fn pick_scenarios(n: usize, k: usize, draw: &ScenarioDraw, rng: &mut Rng) -> Vec<usize> {
    match draw {
        ScenarioDraw::Uniform => rand::seq::index::sample(rng, n, k).into_vec(),
        ScenarioDraw::Weighted(w) => {
            // Efraimidis-Spirakis keys u^(1/w); zero weights sort last
            let mut keyed: Vec<(f64, usize)> = w
                .iter()
                .enumerate()
                .map(|(i, &wi)| {
                    let u: f64 = Open01.sample(rng);
                    (if wi > 0.0 { log(u) / wi } else { f64::NEG_INFINITY }, i)
                })
                .collect();
            keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            keyed.into_iter().take(k).map(|(_, i)| i).collect()
        }
    }
}

/// Simulated cohort over `scenarios`.
pub fn generate_cohort(scenarios: &[ScenarioSpec], cfg: &CohortConfig) -> Result<Dataset> {
    if cfg.participants == 0 {
        return Err(Error::InvalidInput("cohort needs at least one participant".into()));
    }
    if scenarios.is_empty() {
        return Err(Error::InvalidInput("scenario list is empty".into()));
    }
    if cfg.scenarios_per_participant == 0 || cfg.scenarios_per_participant > scenarios.len() {
        return Err(Error::InvalidInput(format!(
            "cannot draw {} scenarios per participant from {}",
            cfg.scenarios_per_participant,
            scenarios.len()
        )));
    }
    if cfg.repeats == 0 {
        return Err(Error::InvalidInput("repeats must be at least 1".into()));
    }
    if let ScenarioDraw::Weighted(w) = &cfg.draw {
        if w.len() != scenarios.len() || w.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::InvalidInput("scenario weights must be non-negative, one per scenario".into()));
        }
        if w.iter().filter(|x| **x > 0.0).count() < cfg.scenarios_per_participant {
            return Err(Error::InvalidInput("too few positive scenario weights".into()));
        }
    }
    scenarios.iter().try_for_each(ScenarioSpec::validate)?;
    cfg.marginals.validate()?;
    cfg.observation.validate()?;
    let schema = cohort_schema();
    let names: Vec<String> = schema.columns().into_iter().map(|c| c.name).collect();
    cfg.hazard.bind(&names)?;

    let mut rows = Vec::new();
    let mut draws = Vec::new();
    for p in 0..cfg.participants {
        let mut rng = rng::seeded(derive_seed(cfg.seed, p as u64));
        let person = Participant::sample(&cfg.marginals, &mut rng);
        let shown = pick_scenarios(scenarios.len(), cfg.scenarios_per_participant, &cfg.draw, &mut rng);
        for &s in &shown {
            let row = schema.encode_cells(&cells(&scenarios[s], &person))?;
            for _ in 0..cfg.repeats {
                rows.push(row.clone());
                draws.push(draw(&mut rng));
            }
        }
    }
    realize(schema, rows, draws, &cfg.hazard, &cfg.observation)
}

/// `n` instances with independent standard-normal covariates `z1..zw` and wait times
/// from `hazard`.
pub fn gaussian_cohort(n: usize, width: usize, hazard: &HazardSpec, obs: &Observation, seed: u64) -> Result<Dataset> {
    if n == 0 || width == 0 {
        return Err(Error::InvalidInput("gaussian cohort needs rows and columns".into()));
    }
    obs.validate()?;
    let entries: Vec<CovariateEntry> = (1..=width).map(|i| CovariateEntry::continuous(&format!("z{}", i))).collect();
    let schema = CovariateSchema::new(entries)?;
    let mut rng = rng::seeded(seed);
    let mut rows = Vec::with_capacity(n);
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        rows.push((0..width).map(|_| StandardNormal.sample(&mut rng)).collect());
        draws.push(draw(&mut rng));
    }
    realize(schema, rows, draws, hazard, obs)
}

/// The catalog scenarios at `indices`.
pub fn scenarios_from_catalog(catalog: &FactorCatalog, indices: &[usize]) -> Result<Vec<ScenarioSpec>> {
    indices.iter().map(|&i| ScenarioSpec::from_catalog(catalog, i)).collect()
}

/// `count` distinct catalog indices drawn uniformly, ascending.
pub fn sample_catalog(catalog: &FactorCatalog, count: usize, seed: u64) -> Result<Vec<usize>> {
    if count == 0 || count > catalog.size() {
        return Err(Error::InvalidInput(format!("cannot draw {} scenarios from a catalog of {}", count, catalog.size())));
    }
    let mut idx = rand::seq::index::sample(&mut rng::seeded(seed), catalog.size(), count).into_vec();
    idx.sort_unstable();
    Ok(idx)
}
