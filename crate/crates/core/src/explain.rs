//! Shapley attributions over any risk model.
//!
//! Absent features take their baseline value in a single model call
//! (interventional, single-reference masking).

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::deep::{Batch, DeepCoxModel};
use crate::rng::{self, derive_seed};
use crate::survival::{CoxModel, LogisticBaseline};
use crate::{Error, Result};

/// Largest feature count accepted by [`shap_exact`].
pub const MAX_EXACT_FEATURES: usize = 20;
/// Minimum stratum size for [`conditional_interactions`].
pub const DEFAULT_STRATUM_FLOOR: usize = 10;

const EXACT_CHUNK: usize = 4096;

/// A log-risk function evaluated row-wise. Implementations must not mutate state.
pub trait RiskModel {
    fn width(&self) -> usize;
    fn evaluate(&self, rows: &Batch) -> Result<Vec<f64>>;
}

impl RiskModel for DeepCoxModel {
    fn width(&self) -> usize {
        self.input_width()
    }

    fn evaluate(&self, rows: &Batch) -> Result<Vec<f64>> {
        self.infer(rows)
    }
}

impl RiskModel for CoxModel {
    fn width(&self) -> usize {
        self.beta.len()
    }

    fn evaluate(&self, rows: &Batch) -> Result<Vec<f64>> {
        check_width(self.beta.len(), rows)?;
        Ok(rows.data.chunks(rows.cols.max(1)).take(rows.rows).map(|r| self.risk(r)).collect())
    }
}

impl RiskModel for LogisticBaseline {
    fn width(&self) -> usize {
        self.covariate_names.len()
    }

    fn evaluate(&self, rows: &Batch) -> Result<Vec<f64>> {
        check_width(self.covariate_names.len(), rows)?;
        Ok(rows.data.chunks(rows.cols.max(1)).take(rows.rows).map(|r| self.risk(r)).collect())
    }
}

/// Adapter turning a closure over one row into a [`RiskModel`].
pub struct FnRisk<F> {
    pub width: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64> RiskModel for FnRisk<F> {
    fn width(&self) -> usize {
        self.width
    }

    fn evaluate(&self, rows: &Batch) -> Result<Vec<f64>> {
        check_width(self.width, rows)?;
        Ok((0..rows.rows).map(|r| (self.f)(&rows.data[r * rows.cols..(r + 1) * rows.cols])).collect())
    }
}

impl<M: RiskModel + ?Sized> RiskModel for &M {
    fn width(&self) -> usize {
        (**self).width()
    }

    fn evaluate(&self, rows: &Batch) -> Result<Vec<f64>> {
        (**self).evaluate(rows)
    }
}

impl<M: RiskModel + ?Sized> RiskModel for Box<M> {
    fn width(&self) -> usize {
        (**self).width()
    }

    fn evaluate(&self, rows: &Batch) -> Result<Vec<f64>> {
        (**self).evaluate(rows)
    }
}

fn check_width(expected: usize, rows: &Batch) -> Result<()> {
    if rows.cols != expected {
        return Err(Error::DimensionMismatch { expected, found: rows.cols });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum BaselineValue {
    DatasetMean,
    FixedZero,
    Fixed(f64),
}

/// Per-column reference values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConvention {
    pub columns: Vec<BaselineValue>,
}

impl BaselineConvention {
    /// Zero for binary columns, dataset mean for continuous ones.
    pub fn default_for(ds: &Dataset) -> Self {
        let columns = ds
            .columns()
            .iter()
            .map(|c| if c.is_binary() { BaselineValue::FixedZero } else { BaselineValue::DatasetMean })
            .collect();
        Self { columns }
    }

    pub fn resolve(&self, ds: &Dataset) -> Result<Vec<f64>> {
        if self.columns.len() != ds.width() {
            return Err(Error::DimensionMismatch { expected: ds.width(), found: self.columns.len() });
        }
        if ds.is_empty() && self.columns.contains(&BaselineValue::DatasetMean) {
            return Err(Error::InvalidInput("dataset mean baseline on an empty dataset".into()));
        }
        Ok(self
            .columns
            .iter()
            .enumerate()
            .map(|(j, b)| match b {
                BaselineValue::DatasetMean => ds.column(j).iter().sum::<f64>() / ds.len() as f64,
                BaselineValue::FixedZero => 0.0,
                BaselineValue::Fixed(v) => *v,
            })
            .collect())
    }
}

fn check_instance<M: RiskModel + ?Sized>(model: &M, z: &[f64], baseline: &[f64]) -> Result<()> {
    let w = model.width();
    if z.len() != w {
        return Err(Error::DimensionMismatch { expected: w, found: z.len() });
    }
    if baseline.len() != w {
        return Err(Error::DimensionMismatch { expected: w, found: baseline.len() });
    }
    Ok(())
}

/// Shapley weights `|S|! (F-|S|-1)! / F!` indexed by `|S|`.
fn subset_weights(f: usize) -> Vec<f64> {
    let mut w = vec![0.0; f];
    if f == 0 {
        return w;
    }
    w[0] = 1.0 / f as f64;
    for s in 1..f {
        w[s] = w[s - 1] * s as f64 / (f - s) as f64;
    }
    w
}

/// Exact Shapley values by enumerating all `2^F` coalitions.
pub fn shap_exact<M: RiskModel + ?Sized>(model: &M, z: &[f64], baseline: &[f64]) -> Result<Vec<f64>> {
    check_instance(model, z, baseline)?;
    let f = z.len();
    if f > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures { features: f, limit: MAX_EXACT_FEATURES });
    }
    let total = 1usize << f;
    let mut values = Vec::with_capacity(total);
    let mut start = 0;
    while start < total {
        let end = (start + EXACT_CHUNK).min(total);
        let mut data = Vec::with_capacity((end - start) * f);
        for mask in start..end {
            data.extend((0..f).map(|i| if mask >> i & 1 == 1 { z[i] } else { baseline[i] }));
        }
        values.extend(model.evaluate(&Batch::new(end - start, f, data)?)?);
        start = end;
    }
    let weights = subset_weights(f);
    let mut phi = vec![0.0; f];
    for mask in 0..total {
        let size = mask.count_ones() as usize;
        for (i, p) in phi.iter_mut().enumerate() {
            if mask >> i & 1 == 0 {
                *p += weights[size] * (values[mask | 1 << i] - values[mask]);
            }
        }
    }
    Ok(phi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledShap {
    pub phi: Vec<f64>,
    /// Monte-Carlo standard errors; `NaN` with a single sample.
    pub std_error: Vec<f64>,
}

/// Permutation-sampling estimate. Each sample is an antithetic pair (a permutation
/// and its reverse); standard errors come from the spread of pair means.
pub fn shap_sampled<M: RiskModel + ?Sized>(
    model: &M,
    z: &[f64],
    baseline: &[f64],
    samples: usize,
    seed: u64,
) -> Result<SampledShap> {
    check_instance(model, z, baseline)?;
    if samples == 0 {
        return Err(Error::InvalidInput("sampled Shapley needs at least one sample".into()));
    }
    let f = z.len();
    let mut rng = rng::seeded(seed);
    let mut perm: Vec<usize> = (0..f).collect();
    let ends = model.evaluate(&Batch::new(2, f, [baseline, z].concat())?)?;
    let (v_empty, v_full) = (ends[0], ends[1]);
    let mut sum = vec![0.0; f];
    let mut sum_sq = vec![0.0; f];
    let mut pair = vec![0.0; f];
    for _ in 0..samples {
        perm.shuffle(&mut rng);
        pair.iter_mut().for_each(|p| *p = 0.0);
        for reversed in [false, true] {
            let order: Vec<usize> = if reversed { perm.iter().rev().copied().collect() } else { perm.clone() };
            // rows for coalitions after adding the first 1..F-1 features
            let mut x = baseline.to_vec();
            let mut data = Vec::with_capacity(f.saturating_sub(1) * f);
            for &i in order.iter().take(f.saturating_sub(1)) {
                x[i] = z[i];
                data.extend_from_slice(&x);
            }
            let inner = model.evaluate(&Batch::new(f.saturating_sub(1), f, data)?)?;
            let mut prev = v_empty;
            for (k, &i) in order.iter().enumerate() {
                let next = if k + 1 == f { v_full } else { inner[k] };
                pair[i] += 0.5 * (next - prev);
                prev = next;
            }
        }
        for i in 0..f {
            sum[i] += pair[i];
            sum_sq[i] += pair[i] * pair[i];
        }
    }
    let n = samples as f64;
    let phi: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_error = (0..f)
        .map(|i| {
            if samples < 2 {
                return f64::NAN;
            }
            let var = ((sum_sq[i] - n * phi[i] * phi[i]) / (n - 1.0)).max(0.0);
            sqrt(var / n)
        })
        .collect();
    Ok(SampledShap { phi, std_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ShapMethod {
    Exact,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    /// Instances contributing to the aggregates.
    pub included: usize,
    /// `|mean| > std`.
    pub uniform: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapReport {
    pub features: Vec<String>,
    pub binary: Vec<bool>,
    /// Per-instance feature values in original units.
    pub values: Vec<Vec<f64>>,
    /// Per-instance attributions, same layout as `values`.
    pub phi: Vec<Vec<f64>>,
    pub std_error: Option<Vec<Vec<f64>>>,
    pub baseline: Vec<f64>,
    pub baseline_risk: f64,
    pub method: ShapMethod,
    /// Sorted by descending absolute mean.
    pub summary: Vec<FeatureSummary>,
    pub warnings: Vec<String>,
}

/// Population mean and standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, sqrt(var))
}

impl ShapReport {
    /// Aggregates feature `j` over `rows`, skipping binary zeros. `None` if nothing is left.
    fn summarize(&self, j: usize, rows: &[usize]) -> Option<FeatureSummary> {
        let xs: Vec<f64> =
            rows.iter().filter(|&&r| !self.binary[j] || self.values[r][j] != 0.0).map(|&r| self.phi[r][j]).collect();
        if xs.is_empty() {
            return None;
        }
        let (mean, std) = mean_std(&xs);
        Some(FeatureSummary { name: self.features[j].clone(), mean, std, included: xs.len(), uniform: mean.abs() > std })
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f == name)
    }
}

fn sort_by_abs_mean(rows: &mut [FeatureSummary]) {
    rows.sort_by(|a, b| b.mean.abs().total_cmp(&a.mean.abs()));
}

/// Attributions for every instance of `ds` plus per-feature aggregates.
pub fn shap_report<M: RiskModel + ?Sized>(
    model: &M,
    ds: &Dataset,
    baseline: &BaselineConvention,
    method: ShapMethod,
) -> Result<ShapReport> {
    if model.width() != ds.width() {
        return Err(Error::DimensionMismatch { expected: model.width(), found: ds.width() });
    }
    if ds.is_empty() {
        return Err(Error::InvalidInput("cannot explain an empty dataset".into()));
    }
    let base = baseline.resolve(ds)?;
    let baseline_risk = model.evaluate(&Batch::new(1, base.len(), base.clone())?)?[0];
    let mut phi = Vec::with_capacity(ds.len());
    let mut errors = Vec::new();
    for (i, inst) in ds.instances().iter().enumerate() {
        match method {
            ShapMethod::Exact => phi.push(shap_exact(model, &inst.covariates, &base)?),
            ShapMethod::Sampled { samples, seed } => {
                let s = shap_sampled(model, &inst.covariates, &base, samples, derive_seed(seed, i as u64))?;
                phi.push(s.phi);
                errors.push(s.std_error);
            }
        }
    }
    let values = ds
        .instances()
        .iter()
        .map(|inst| match ds.standardization() {
            Some(s) => inst.covariates.iter().enumerate().map(|(j, &v)| s.invert(j, v)).collect(),
            None => inst.covariates.clone(),
        })
        .collect();
    let mut report = ShapReport {
        features: ds.column_names(),
        binary: ds.columns().iter().map(|c| c.is_binary()).collect(),
        values,
        phi,
        std_error: matches!(method, ShapMethod::Sampled { .. }).then_some(errors),
        baseline: base,
        baseline_risk,
        method,
        summary: Vec::new(),
        warnings: Vec::new(),
    };
    let all: Vec<usize> = (0..ds.len()).collect();
    for j in 0..ds.width() {
        match report.summarize(j, &all) {
            Some(s) => report.summary.push(s),
            None => report.warnings.push(format!("{}: binary column is zero for every instance; excluded", report.features[j])),
        }
    }
    sort_by_abs_mean(&mut report.summary);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "value", rename_all = "snake_case")]
pub enum Predicate {
    Equals(f64),
    AtLeast(f64),
    Below(f64),
}

impl Predicate {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Predicate::Equals(t) => v == t,
            Predicate::AtLeast(t) => v >= t,
            Predicate::Below(t) => v < t,
        }
    }
}

/// Stratum definition, evaluated on values in original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: String,
    pub predicate: Predicate,
    /// Display name; defaults to `feature op value`.
    #[serde(default)]
    pub label: Option<String>,
}

impl Condition {
    pub fn equals(feature: &str, v: f64) -> Self {
        Self { feature: feature.into(), predicate: Predicate::Equals(v), label: None }
    }

    pub fn display(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match self.predicate {
            Predicate::Equals(v) => format!("{}={}", self.feature, v),
            Predicate::AtLeast(v) => format!("{}>={}", self.feature, v),
            Predicate::Below(v) => format!("{}<{}", self.feature, v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRow {
    pub condition: String,
    pub variable: String,
    pub mean: f64,
    pub std: f64,
    pub included: usize,
}

/// Per-feature mean attribution restricted to the stratum where `condition` holds.
/// Only rows passing the uniformity rule are returned, sorted by descending |mean|.
/// `targets = None` means every feature except the conditioning one.
pub fn conditional_interactions(
    report: &ShapReport,
    condition: &Condition,
    targets: Option<&[String]>,
    floor: usize,
) -> Result<Vec<InteractionRow>> {
    let c = report.feature_index(&condition.feature).ok_or_else(|| Error::UnknownCovariate(condition.feature.clone()))?;
    let rows: Vec<usize> = (0..report.values.len()).filter(|&r| condition.predicate.holds(report.values[r][c])).collect();
    if rows.is_empty() || rows.len() < floor {
        return Err(Error::SmallStratum { found: rows.len(), required: floor.max(1) });
    }
    let target_idx: Vec<usize> = match targets {
        Some(names) => names
            .iter()
            .map(|n| report.feature_index(n).ok_or_else(|| Error::UnknownCovariate(n.clone())))
            .collect::<Result<_>>()?,
        None => (0..report.features.len()).filter(|&j| j != c).collect(),
    };
    let mut summaries: Vec<FeatureSummary> =
        target_idx.iter().filter_map(|&j| report.summarize(j, &rows)).filter(|s| s.uniform).collect();
    sort_by_abs_mean(&mut summaries);
    let label = condition.display();
    Ok(summaries
        .into_iter()
        .map(|s| InteractionRow { condition: label.clone(), variable: s.name, mean: s.mean, std: s.std, included: s.included })
        .collect())
}
