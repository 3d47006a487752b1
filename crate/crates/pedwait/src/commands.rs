//! The seven pipeline commands. Each is a pure function of the configuration, its
//! input files and the seeds in the configuration: nothing here reads the clock or
//! the environment, so identical inputs produce byte-identical outputs.

use std::fs;
use std::path::{Path, PathBuf};

use pedwait_core::cohort::{generate_cohort, sample_catalog, scenarios_from_catalog, CohortConfig, ScenarioDraw, ScenarioSpec};
use pedwait_core::dataset::{vif, vif_filter, train_test_split, VifEntry};
use pedwait_core::deep::{
    random_search, train, Batch, DeepCoxModel, EpochRecord, HyperSearchSpace, IntRange, NetworkSpec, SearchOutcome,
    TrainConfig,
};
use pedwait_core::doe::{anneal, select_scenarios, AnnealConfig, FactorCatalog};
use pedwait_core::explain::{
    conditional_interactions, shap_report, BaselineConvention, InteractionRow, RiskModel, ShapMethod, ShapReport,
};
use pedwait_core::relief::{rrelieff, top_n, ReliefParams, ReliefWeights};
use pedwait_core::survival::{concordance_index, cox_summary, fit_cox, fit_logistic_baseline, linear_predictor};
use pedwait_core::{Dataset, Error};
use serde::Serialize;

use crate::config::{default_hazard, ExplainMethod, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{self, fmt_f64, read_dataset, write_csv, write_dataset, write_json};
use crate::model_file::{ModelBody, ModelFile};

/// Model names in comparison order; also the `model_<name>.json` file stems.
pub const MODEL_NAMES: [&str; 4] = ["binary_choice", "cph", "dcph1", "dcph2"];

/// A resolved configuration bound to an output directory.
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
}

impl Context {
    /// Resolves seeds, creates `out` and echoes the effective configuration into it.
    pub fn new(config: RunConfig, out: &Path) -> CliResult<Self> {
        fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let ctx = Self { config: config.resolve_seeds(), out: out.to_path_buf() };
        write_json(&ctx.path("effective_config.json"), &ctx.config)?;
        Ok(ctx)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn data(&self) -> CliResult<Dataset> {
        read_dataset(&self.config.data_path(&self.out), None)
    }
}

fn seed(slot: Option<u64>) -> u64 {
    slot.expect("seeds are resolved when the context is built")
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

// ---------------------------------------------------------------- simulate

/// Reads scenarios from a design CSV by factor-name columns, with their weights.
pub fn read_design_scenarios(path: &Path, catalog: &FactorCatalog) -> CliResult<(Vec<ScenarioSpec>, Vec<f64>)> {
    let table = io::read_table(path)?;
    let cols: Vec<usize> = catalog
        .factors()
        .iter()
        .map(|f| {
            table.column(&f.name).ok_or_else(|| CliError::Config(format!("{}: missing column `{}`", path.display(), f.name)))
        })
        .collect::<CliResult<_>>()?;
    let weight_col = table.column("weight");
    let mut specs = Vec::with_capacity(table.rows.len());
    let mut weights = Vec::with_capacity(table.rows.len());
    for (line, cells) in &table.rows {
        let row_err = |message: String| CliError::Row { path: path.to_path_buf(), line: *line, message };
        let mut levels = Vec::with_capacity(cols.len());
        for (f, &c) in catalog.factors().iter().zip(&cols) {
            let level = (0..f.levels.len())
                .find(|&l| f.levels.label(l) == cells[c])
                .ok_or_else(|| row_err(format!("`{}` is not a level of `{}`", cells[c], f.name)))?;
            levels.push(level);
        }
        let index = catalog.index_of(&levels)?;
        specs.push(ScenarioSpec::from_catalog(catalog, index)?);
        weights.push(match weight_col {
            Some(w) => cells[w].parse::<f64>().map_err(|_| row_err(format!("unparseable weight `{}`", cells[w])))?,
            None => 1.0,
        });
    }
    Ok((specs, weights))
}

pub fn simulate(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let cfg = &ctx.config.simulate;
    let catalog = FactorCatalog::crossing_scenarios();
    let seed = seed(cfg.seed);
    let (scenarios, weights) = match &cfg.design {
        Some(p) => read_design_scenarios(p, &catalog)?,
        None => {
            let idx = sample_catalog(&catalog, cfg.scenario_count, pedwait_core::rng::derive_seed(seed, 0))?;
            (scenarios_from_catalog(&catalog, &idx)?, vec![1.0; idx.len()])
        }
    };
    let cohort = CohortConfig {
        participants: cfg.participants,
        scenarios_per_participant: cfg.scenarios_per_participant,
        repeats: cfg.repeats,
        marginals: cfg.marginals.clone(),
        hazard: cfg.hazard.clone().unwrap_or_else(default_hazard),
        observation: cfg.observation,
        draw: if cfg.weighted { ScenarioDraw::Weighted(weights.clone()) } else { ScenarioDraw::Uniform },
        seed,
    };
    let ds = generate_cohort(&scenarios, &cohort)?;
    let cohort_path = ctx.path("cohort.csv");
    write_dataset(&cohort_path, &ds)?;

    let scen_path = ctx.path("scenarios.csv");
    let header = [
        "scenario",
        "speed_limit",
        "min_gap",
        "lane_width",
        "road_type",
        "braking_level",
        "automation",
        "arrival_rate",
        "night",
        "snowy",
        "density",
        "weight",
    ];
    let rows = scenarios.iter().zip(&weights).enumerate().map(|(i, (s, w))| {
        vec![
            i.to_string(),
            fmt_f64(s.speed_limit),
            fmt_f64(s.min_gap),
            fmt_f64(s.lane_width),
            s.road_type.clone(),
            s.braking_level.to_string(),
            s.automation.clone(),
            fmt_f64(s.arrival_rate),
            u8::from(s.night).to_string(),
            u8::from(s.snowy).to_string(),
            fmt_f64(s.density()),
            fmt_f64(*w),
        ]
    });
    write_csv(&scen_path, &header, rows)?;
    Ok(vec![cohort_path, io::schema_sidecar(&ctx.path("cohort.csv")), scen_path])
}

// ---------------------------------------------------------------- screening helpers

/// Columns that vary over `rows`, and the names of those that do not.
fn varying_columns(ds: &Dataset, rows: &[usize]) -> (Vec<usize>, Vec<String>) {
    let mut keep = Vec::new();
    let mut constant = Vec::new();
    for j in 0..ds.width() {
        let first = ds.instances()[rows[0]].covariates[j];
        if rows.iter().any(|&r| ds.instances()[r].covariates[j] != first) {
            keep.push(j);
        } else {
            constant.push(ds.columns()[j].name.clone());
        }
    }
    (keep, constant)
}

#[derive(Debug, Clone, Serialize)]
struct Screening {
    constant: Vec<String>,
    vif_dropped: Vec<VifEntry>,
    kept: Vec<String>,
}

/// Drops columns constant over `rows`, then VIF-screens on `rows`. Returns the
/// retained columns of `ds` (all rows).
fn screen(ds: &Dataset, rows: &[usize], threshold: f64) -> CliResult<(Dataset, Screening)> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("screening needs at least one row".into()).into());
    }
    let (vary, constant) = varying_columns(ds, rows);
    if vary.is_empty() {
        return Err(Error::InvalidInput("every covariate is constant".into()).into());
    }
    let varying = ds.select_columns(&vary)?;
    let screened = vif_filter(&varying.select_rows(rows), threshold)?;
    let kept = varying.select_columns(&screened.kept)?;
    let names = kept.column_names();
    Ok((kept, Screening { constant, vif_dropped: screened.dropped, kept: names }))
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Serialize)]
struct FitReport {
    rows: usize,
    events: usize,
    standardized: bool,
    screening: Screening,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
    cindex: f64,
}

pub fn fit(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let cfg = &ctx.config.fit;
    let raw = ctx.data()?;
    let all: Vec<usize> = (0..raw.len()).collect();
    let (kept, screening) = screen(&raw, &all, cfg.vif_threshold)?;
    let ds = if cfg.standardize { kept.standardize(&all)? } else { kept };
    let model = fit_cox(&ds, &cfg.options)?;
    let summary = cox_summary(&model, &ds)?;
    let eta = linear_predictor(&ds, &model.beta)?;
    let cindex = concordance_index(&ds.durations(), &ds.events(), &eta)?;

    let csv_path = ctx.path("fit_summary.csv");
    write_csv(
        &csv_path,
        &["name", "coefficient", "hazard_ratio", "standard_error", "z", "p_value"],
        summary.rows.iter().map(|r| {
            vec![
                r.name.clone(),
                fmt_f64(r.coefficient),
                fmt_f64(r.hazard_ratio),
                fmt_f64(r.standard_error),
                fmt_f64(r.z),
                fmt_f64(r.p_value),
            ]
        }),
    )?;
    let json_path = ctx.path("fit_summary.json");
    write_json(&json_path, &summary)?;
    let report_path = ctx.path("fit_report.json");
    write_json(
        &report_path,
        &FitReport {
            rows: ds.len(),
            events: ds.event_count(),
            standardized: cfg.standardize,
            screening,
            log_likelihood: model.log_likelihood,
            iterations: model.iterations,
            converged: model.converged,
            cindex,
        },
    )?;
    Ok(vec![csv_path, json_path, report_path])
}

// ---------------------------------------------------------------- rank

pub fn rank(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let cfg = &ctx.config.rank;
    let raw = ctx.data()?;
    let all: Vec<usize> = (0..raw.len()).collect();
    let (vary, constant) = varying_columns(&raw, &all);
    let varying = raw.select_columns(&vary)?;
    let full = vif(&varying)?;
    let (kept, screening) = screen(&raw, &all, cfg.vif_threshold)?;

    let vif_path = ctx.path("vif.csv");
    let mut rows: Vec<Vec<String>> = full
        .iter()
        .map(|e| {
            let status = if screening.kept.contains(&e.name) { "kept" } else { "dropped" };
            vec![e.name.clone(), fmt_f64(e.vif), status.into()]
        })
        .collect();
    rows.extend(constant.iter().map(|n| vec![n.clone(), String::new(), "constant".into()]));
    write_csv(&vif_path, &["name", "vif", "status"], rows)?;

    let params = ReliefParams { k: cfg.k, samples: cfg.samples, sigma: cfg.sigma, seed: seed(cfg.seed) };
    let weights = rrelieff(&kept, &params)?;
    let relief_path = ctx.path("relief.csv");
    write_csv(&relief_path, &["rank", "name", "weight"], relief_rows(&weights))?;
    Ok(vec![vif_path, relief_path])
}

fn relief_rows(w: &ReliefWeights) -> Vec<Vec<String>> {
    w.ranking.iter().enumerate().map(|(r, &j)| vec![(r + 1).to_string(), w.names[j].clone(), fmt_f64(w.weights[j])]).collect()
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub model: String,
    pub train_cindex: f64,
    pub test_cindex: f64,
}

#[derive(Debug, Serialize)]
struct TrainReport {
    train_rows: usize,
    test_rows: usize,
    screening: Screening,
    relief_ranking: Vec<String>,
    dcph2_inputs: Vec<String>,
    dcph1: NetworkSpec,
    dcph2: NetworkSpec,
    dcph1_train: TrainConfig,
    dcph2_train: TrainConfig,
    comparison: Vec<ComparisonRow>,
}

fn cindex_of<M: RiskModel + ?Sized>(model: &M, ds: &Dataset) -> CliResult<f64> {
    let r = model.evaluate(&Batch::from_dataset(ds))?;
    Ok(concordance_index(&ds.durations(), &ds.events(), &r)?)
}

fn write_train_log(path: &Path, log: &[EpochRecord]) -> CliResult<()> {
    write_csv(
        path,
        &["epoch", "learning_rate", "train_loss"],
        log.iter().map(|e| vec![e.epoch.to_string(), fmt_f64(e.learning_rate), fmt_f64(e.train_loss)]),
    )
}

fn write_search(path: &Path, outcome: &SearchOutcome) -> CliResult<()> {
    write_csv(
        path,
        &[
            "trial",
            "inputs",
            "hidden_layers",
            "hidden_units",
            "dropout_rate",
            "use_batch_norm",
            "learning_rate",
            "lr_decay",
            "mean_cindex",
            "error",
        ],
        outcome.trials.iter().map(|t| {
            vec![
                t.trial.to_string(),
                t.inputs.len().to_string(),
                t.spec.hidden_layers.to_string(),
                t.spec.hidden_units.to_string(),
                fmt_f64(t.spec.dropout_rate),
                t.spec.use_batch_norm.to_string(),
                fmt_f64(t.train.learning_rate),
                fmt_f64(t.train.lr_decay),
                opt_f64(t.mean_cindex),
                t.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn train_models(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let cfg = &ctx.config.train;
    let seed = seed(cfg.seed);
    let stream = |k: u64| pedwait_core::rng::derive_seed(seed, k);
    let raw = ctx.data()?;
    let (train_rows, test_rows) = train_test_split(raw.len(), cfg.test_fraction, stream(0));
    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(CliError::Config("test_fraction leaves an empty split".into()));
    }
    let (kept, screening) = screen(&raw, &train_rows, cfg.vif_threshold)?;
    let standardized = kept.standardize(&train_rows)?;
    let train_set = standardized.select_rows(&train_rows);
    let test_set = standardized.select_rows(&test_rows);
    let width = train_set.width();
    let mut written = Vec::new();
    let mut comparison = Vec::new();
    let mut save = |name: &str, trained_on: &Dataset, body: ModelBody, test: &Dataset| -> CliResult<PathBuf> {
        let train_c = cindex_of(&body, trained_on)?;
        let test_c = cindex_of(&body, test)?;
        comparison.push(ComparisonRow { model: name.into(), train_cindex: train_c, test_cindex: test_c });
        let path = ctx.path(&format!("model_{}.json", name));
        ModelFile::new(name, trained_on, body)?.save(&path)?;
        Ok(path)
    };

    let logistic = fit_logistic_baseline(&train_set, cfg.interval, &cfg.cox)?;
    written.push(save(MODEL_NAMES[0], &train_set, ModelBody::Logistic(logistic), &test_set)?);
    let cox = fit_cox(&train_set, &cfg.cox)?;
    written.push(save(MODEL_NAMES[1], &train_set, ModelBody::Cox(cox), &test_set)?);

    let relief = rrelieff(
        &train_set,
        &ReliefParams { k: cfg.relief_k, samples: None, sigma: cfg.relief_sigma, seed: stream(1) },
    )?;
    let n = cfg.top_n.clamp(1, width);
    let base = TrainConfig {
        learning_rate: cfg.learning_rate,
        lr_decay: cfg.lr_decay,
        epochs: cfg.epochs,
        folds: cfg.search.as_ref().map_or(2, |s| s.folds),
        momentum: cfg.momentum,
        batch_size: cfg.batch_size,
        seed: stream(2),
    };
    let net = &cfg.network;
    let fixed = |input_width: usize, seed: u64| NetworkSpec {
        input_width,
        hidden_layers: net.hidden_layers,
        hidden_units: net.hidden_units,
        dropout_rate: net.dropout_rate,
        use_batch_norm: net.use_batch_norm,
        activation: net.activation,
        seed,
    };

    // (inputs, spec, optimizer) for each deep model, searched or fixed
    let (dcph1, dcph2) = match &cfg.search {
        None => (
            ((0..width).collect::<Vec<_>>(), fixed(width, stream(3)), base),
            (top_n(&relief, n)?, fixed(n, stream(4)), TrainConfig { seed: stream(5), ..base }),
        ),
        Some(s) => {
            let mut space = HyperSearchSpace::around_reference(width, s.trials, stream(6));
            space.activation = net.activation;
            let first = random_search(&train_set, None, &space, &base)?;
            write_search(&ctx.path("search_dcph1.csv"), &first)?;
            written.push(ctx.path("search_dcph1.csv"));
            space.seed = stream(7);
            space.top_n = IntRange { min: (width / 2).max(1), max: width };
            let second = random_search(&train_set, Some(&relief.ranking), &space, &base)?;
            write_search(&ctx.path("search_dcph2.csv"), &second)?;
            written.push(ctx.path("search_dcph2.csv"));
            let pick = |o: &SearchOutcome| {
                let t = o.best_trial();
                (t.inputs.clone(), t.spec, t.train)
            };
            (pick(&first), pick(&second))
        }
    };
    let mut final_specs = Vec::new();
    for (name, (inputs, spec, tc)) in [(MODEL_NAMES[2], dcph1), (MODEL_NAMES[3], dcph2)] {
        let sub_train = train_set.select_columns(&inputs)?;
        let sub_test = test_set.select_columns(&inputs)?;
        let model: DeepCoxModel = train(&sub_train, &spec, &tc)?;
        let log_path = ctx.path(&format!("train_log_{}.csv", name));
        write_train_log(&log_path, &model.train_log)?;
        written.push(log_path);
        final_specs.push((spec, tc, sub_train.column_names()));
        written.push(save(name, &sub_train, ModelBody::Deep(model), &sub_test)?);
    }

    let cmp_path = ctx.path("comparison.csv");
    write_csv(
        &cmp_path,
        &["model", "train_cindex", "test_cindex"],
        comparison.iter().map(|r| vec![r.model.clone(), fmt_f64(r.train_cindex), fmt_f64(r.test_cindex)]),
    )?;
    written.push(cmp_path);
    let (s2, t2, inputs2) = final_specs.pop().expect("two deep models");
    let (s1, t1, _) = final_specs.pop().expect("two deep models");
    let report_path = ctx.path("train_report.json");
    write_json(
        &report_path,
        &TrainReport {
            train_rows: train_set.len(),
            test_rows: test_set.len(),
            screening,
            relief_ranking: relief.ranking.iter().map(|&j| relief.names[j].clone()).collect(),
            dcph2_inputs: inputs2,
            dcph1: s1,
            dcph2: s2,
            dcph1_train: t1,
            dcph2_train: t2,
            comparison,
        },
    )?;
    written.push(report_path);
    Ok(written)
}

// ---------------------------------------------------------------- explain

#[derive(Debug, Serialize)]
struct ExplainSummary<'a> {
    model: &'a str,
    rows: usize,
    method: ShapMethod,
    baseline: Vec<(String, f64)>,
    baseline_risk: f64,
    summary: &'a [pedwait_core::explain::FeatureSummary],
    warnings: Vec<String>,
}

/// Writes the attribution tables for one report.
pub fn explain(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let cfg = &ctx.config.explain;
    let model_path = cfg.model.clone().unwrap_or_else(|| ctx.path("model_dcph2.json"));
    let model = ModelFile::load(&model_path)?;
    let mut raw = ctx.data()?;
    if let Some(k) = cfg.max_rows {
        raw = raw.select_rows(&(0..k.min(raw.len())).collect::<Vec<_>>());
    }
    let ds = model.prepare(&raw)?;
    let method = match cfg.method {
        ExplainMethod::Exact => ShapMethod::Exact,
        ExplainMethod::Auto if ds.width() <= cfg.exact_limit => ShapMethod::Exact,
        _ => ShapMethod::Sampled { samples: cfg.samples, seed: seed(cfg.seed) },
    };
    let report: ShapReport = shap_report(&model.model, &ds, &BaselineConvention::default_for(&ds), method)?;

    let mut warnings = report.warnings.clone();
    let mut interactions: Vec<InteractionRow> = Vec::new();
    for cond in &cfg.conditions {
        match conditional_interactions(&report, cond, cfg.targets.as_deref(), cfg.stratum_floor) {
            Ok(rows) => interactions.extend(rows),
            Err(Error::SmallStratum { found, required }) => warnings
                .push(format!("{}: stratum has {} rows, fewer than {}; skipped", cond.display(), found, required)),
            Err(Error::UnknownCovariate(c)) => warnings.push(format!("{}: `{}` is not a model input; skipped", cond.display(), c)),
            Err(e) => return Err(e.into()),
        }
    }

    let summary_csv = ctx.path("shap_summary.csv");
    write_csv(
        &summary_csv,
        &["feature", "mean", "std", "included", "uniform"],
        report.summary.iter().map(|s| {
            vec![s.name.clone(), fmt_f64(s.mean), fmt_f64(s.std), s.included.to_string(), s.uniform.to_string()]
        }),
    )?;
    let values_csv = ctx.path("shap_values.csv");
    let mut header = vec!["row", "feature", "value", "phi"];
    if report.std_error.is_some() {
        header.push("std_error");
    }
    let mut rows = Vec::with_capacity(report.phi.len() * report.features.len());
    for (r, phi) in report.phi.iter().enumerate() {
        for (j, f) in report.features.iter().enumerate() {
            let mut row = vec![r.to_string(), f.clone(), fmt_f64(report.values[r][j]), fmt_f64(phi[j])];
            if let Some(se) = &report.std_error {
                row.push(fmt_f64(se[r][j]));
            }
            rows.push(row);
        }
    }
    write_csv(&values_csv, &header, rows)?;
    let inter_csv = ctx.path("interactions.csv");
    write_csv(
        &inter_csv,
        &["condition", "variable", "mean", "std", "included"],
        interactions.iter().map(|i| {
            vec![i.condition.clone(), i.variable.clone(), fmt_f64(i.mean), fmt_f64(i.std), i.included.to_string()]
        }),
    )?;
    let summary_json = ctx.path("shap_summary.json");
    write_json(
        &summary_json,
        &ExplainSummary {
            model: &model.name,
            rows: ds.len(),
            method,
            baseline: report.features.iter().cloned().zip(report.baseline.iter().copied()).collect(),
            baseline_risk: report.baseline_risk,
            summary: &report.summary,
            warnings,
        },
    )?;
    Ok(vec![summary_csv, summary_json, values_csv, inter_csv])
}

// ---------------------------------------------------------------- design

#[derive(Debug, Serialize)]
struct DesignReport {
    catalog_size: usize,
    dimension: usize,
    m: usize,
    objective: f64,
    initial_objective: f64,
    accepted: usize,
    selected: Option<Vec<usize>>,
}

pub fn design(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let cfg = &ctx.config.design;
    let catalog = match &cfg.catalog {
        Some(p) => io::read_json::<FactorCatalog>(p)?,
        None => FactorCatalog::crossing_scenarios(),
    };
    let acfg = AnnealConfig {
        beta_prior: cfg.beta_prior.clone(),
        censor_time: cfg.censor_time,
        m: cfg.m,
        iterations: cfg.iterations,
        initial_temperature: cfg.initial_temperature,
        alpha: cfg.alpha,
        swap_probability: cfg.swap_probability,
        weight_step: cfg.weight_step,
        delta_mode: cfg.delta_mode,
        trace_every: cfg.trace_every,
        seed: seed(cfg.seed),
    };
    let outcome = anneal(&catalog, &acfg)?;
    let d = &outcome.design;
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d.weights[b].total_cmp(&d.weights[a]).then(d.scenarios[a].cmp(&d.scenarios[b])));

    let design_csv = ctx.path("design.csv");
    let mut header: Vec<String> = vec!["rank".into(), "index".into()];
    header.extend(catalog.factors().iter().map(|f| f.name.clone()));
    header.push("weight".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        &design_csv,
        &header_refs,
        order.iter().enumerate().map(|(r, &i)| {
            let mut row = vec![(r + 1).to_string(), d.scenarios[i].to_string()];
            row.extend(catalog.labels(d.scenarios[i]));
            row.push(fmt_f64(d.weights[i]));
            row
        }),
    )?;
    let trace_csv = ctx.path("design_trace.csv");
    write_csv(
        &trace_csv,
        &["iteration", "temperature", "current", "best", "accepted"],
        outcome.trace.iter().map(|t| {
            vec![t.iteration.to_string(), fmt_f64(t.temperature), fmt_f64(t.current), fmt_f64(t.best), t.accepted.to_string()]
        }),
    )?;
    let selected = cfg.budget.map(|b| select_scenarios(d, b)).transpose()?;
    let json_path = ctx.path("design.json");
    write_json(
        &json_path,
        &DesignReport {
            catalog_size: catalog.size(),
            dimension: catalog.dimension(),
            m: d.len(),
            objective: d.objective,
            initial_objective: outcome.initial_objective,
            accepted: outcome.accepted,
            selected,
        },
    )?;
    Ok(vec![design_csv, trace_csv, json_path])
}

// ---------------------------------------------------------------- evaluate

#[derive(Debug, Serialize)]
struct Evaluation {
    model: String,
    rows: usize,
    events: usize,
    cindex: f64,
}

pub fn evaluate(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let paths: Vec<PathBuf> = if ctx.config.evaluate.models.is_empty() {
        MODEL_NAMES.iter().map(|n| ctx.path(&format!("model_{}.json", n))).filter(|p| p.exists()).collect()
    } else {
        ctx.config.evaluate.models.clone()
    };
    if paths.is_empty() {
        return Err(CliError::Config("no model files to evaluate; run `train` first or list evaluate.models".into()));
    }
    let raw = ctx.data()?;
    let mut out = Vec::with_capacity(paths.len());
    for p in &paths {
        let m = ModelFile::load(p)?;
        let ds = m.prepare(&raw)?;
        out.push(Evaluation { model: m.name.clone(), rows: ds.len(), events: ds.event_count(), cindex: m.cindex(&ds)? });
    }
    let path = ctx.path("evaluation.json");
    write_json(&path, &out)?;
    Ok(vec![path])
}
