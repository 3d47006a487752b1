//! Classical survival estimators: Cox partial likelihood with Newton-Raphson and Wald
//! inference, Breslow and Kaplan-Meier curves, the concordance index, and the
//! discrete-time logistic ("binary choice") baseline.
//!
//! Risk sets use `T_j >= T_k`, so every event's own instance and all instances tied
//! with it are at risk; tied events share one denominator (Breslow).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::{erfc, exp, log, sqrt};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::linalg::{SquareMatrix, PIVOT_TOL};
use crate::{Error, Result};

/// Indices sorted by duration, longest first (ties keep input order).
pub(crate) fn descending_order(durations: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..durations.len()).collect();
    order.sort_by(|&a, &b| durations[b].total_cmp(&durations[a]));
    order
}

/// Walks tied-duration groups from the longest duration down; calls `f(group)` after
/// the group has been added to the running risk set.
fn for_each_tie_group(order: &[usize], durations: &[f64], mut f: impl FnMut(&[usize])) {
    let mut i = 0;
    while i < order.len() {
        let t = durations[order[i]];
        let mut j = i + 1;
        while j < order.len() && durations[order[j]] == t {
            j += 1;
        }
        f(&order[i..j]);
        i = j;
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(Error::DimensionMismatch { expected: a, found: b })
    } else {
        Ok(())
    }
}

/// Log partial likelihood of a vector of log-partial-hazards `eta`.
pub fn log_partial_likelihood_of(eta: &[f64], durations: &[f64], events: &[bool]) -> Result<f64> {
    check_lengths(eta.len(), durations.len())?;
    check_lengths(eta.len(), events.len())?;
    if !events.iter().any(|&e| e) {
        return Err(Error::NoEvents);
    }
    if eta.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("log-partial hazard".into()));
    }
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let order = descending_order(durations);
    let mut risk = 0.0;
    let mut total = 0.0;
    for_each_tie_group(&order, durations, |group| {
        for &i in group {
            risk += exp(eta[i] - shift);
        }
        let log_risk = log(risk);
        for &i in group {
            if events[i] {
                total += eta[i] - shift - log_risk;
            }
        }
    });
    Ok(total)
}

pub fn linear_predictor(ds: &Dataset, beta: &[f64]) -> Result<Vec<f64>> {
    check_lengths(ds.width(), beta.len())?;
    if beta.iter().any(|b| b.is_nan()) {
        return Err(Error::NonFinite("coefficients".into()));
    }
    Ok(ds.instances().iter().map(|i| dot(&i.covariates, beta)).collect())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cox log partial likelihood at `beta`.
pub fn log_partial_likelihood(ds: &Dataset, beta: &[f64]) -> Result<f64> {
    let eta = linear_predictor(ds, beta)?;
    log_partial_likelihood_of(&eta, &ds.durations(), &ds.events())
}

/// Log partial likelihood, score vector and observed information (negative Hessian).
pub struct CoxDerivatives {
    pub log_likelihood: f64,
    pub score: Vec<f64>,
    pub information: SquareMatrix,
}

pub fn cox_derivatives(ds: &Dataset, beta: &[f64]) -> Result<CoxDerivatives> {
    ds.require_events()?;
    let eta = linear_predictor(ds, beta)?;
    let p = ds.width();
    let durations = ds.durations();
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let order = descending_order(&durations);
    let inst = ds.instances();

    // Weighted running mean and scatter of the risk set (West's update), which keeps
    // the information accurate when weights span many orders of magnitude.
    let mut s0 = 0.0;
    let mut mean = vec![0.0; p];
    let mut scatter = SquareMatrix::zeros(p);
    let mut delta = vec![0.0; p];
    let mut ll = 0.0;
    let mut score = vec![0.0; p];
    let mut info = SquareMatrix::zeros(p);
    for_each_tie_group(&order, &durations, |group| {
        for &i in group {
            let w = exp(eta[i] - shift);
            if w == 0.0 {
                continue;
            }
            let prev = s0;
            s0 += w;
            for ((dl, z), m) in delta.iter_mut().zip(&inst[i].covariates).zip(mean.iter_mut()) {
                *dl = z - *m;
                *m += w / s0 * *dl;
            }
            scatter.add_outer(w * prev / s0, &delta);
        }
        let d = group.iter().filter(|&&i| inst[i].event).count();
        if d == 0 {
            return;
        }
        let log_s0 = log(s0);
        for &i in group.iter().filter(|&&i| inst[i].event) {
            ll += eta[i] - shift - log_s0;
            for ((sc, z), m) in score.iter_mut().zip(&inst[i].covariates).zip(&mean) {
                *sc += z - m;
            }
        }
        let f = d as f64 / s0;
        for a in 0..p {
            for b in 0..p {
                info.add_at(a, b, f * scatter.get(a, b));
            }
        }
    });
    Ok(CoxDerivatives { log_likelihood: ll, score, information: info })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Convergence when the largest absolute score component falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Coefficients escaping this bound signal a monotone likelihood.
    pub beta_bound: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100, beta_bound: 50.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxModel {
    pub covariate_names: Vec<String>,
    pub beta: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CoxModel {
    pub fn risk(&self, z: &[f64]) -> f64 {
        dot(z, &self.beta)
    }
}

/// Maximizes the Cox partial likelihood by Newton-Raphson with step halving.
pub fn fit_cox(ds: &Dataset, opts: &FitOptions) -> Result<CoxModel> {
    ds.require_events()?;
    let p = ds.width();
    let mut beta = vec![0.0; p];
    let mut d = cox_derivatives(ds, &beta)?;
    let mut iterations = 0;
    let mut converged = false;
    let mut last_step = 0.0;
    while iterations < opts.max_iter {
        if d.score.iter().all(|&s| s == 0.0) && last_step < STEP_TOL {
            converged = true;
            break;
        }
        let chol = match d.information.cholesky(PIVOT_TOL) {
            Some(c) => c,
            None => return Err(degenerate(last_step, opts, "Cox information matrix is singular; screen collinear covariates (VIF) first")),
        };
        let step = chol.solve(&d.score);
        if max_abs(&d.score) < opts.tol && max_abs(&step) < STEP_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let mut scale = 1.0;
        let next = loop {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let nd = cox_derivatives(ds, &cand)?;
            if nd.log_likelihood.is_finite() && nd.log_likelihood >= d.log_likelihood - 1e-12 * d.log_likelihood.abs() {
                break (cand, nd);
            }
            scale *= 0.5;
            if scale < 1e-10 {
                break (cand, nd);
            }
        };
        last_step = next.0.iter().zip(&beta).fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        beta = next.0;
        d = next.1;
        if max_abs(&beta) > opts.beta_bound {
            return Err(Error::Separation { bound: opts.beta_bound });
        }
    }
    if converged && likelihood_keeps_rising(&beta, d.log_likelihood, |b| log_partial_likelihood(ds, b))? {
        return Err(Error::Separation { bound: opts.beta_bound });
    }
    Ok(CoxModel {
        covariate_names: ds.column_names(),
        beta,
        log_likelihood: d.log_likelihood,
        iterations,
        converged,
    })
}

/// Singular curvature right after a large Newton step means the estimate ran off to
/// infinity along a flat direction; otherwise the design itself is degenerate.
fn degenerate(last_step: f64, opts: &FitOptions, msg: &str) -> Error {
    if last_step >= STEP_TOL {
        Error::Separation { bound: opts.beta_bound }
    } else {
        Error::Singular(msg.into())
    }
}

/// At a proper maximum the (strictly concave) likelihood drops when the estimate is
/// pushed one unit further from the origin. If it does not, the "optimum" is a point on
/// a monotone ridge whose score merely underflowed.
fn likelihood_keeps_rising(beta: &[f64], ll: f64, eval: impl Fn(&[f64]) -> Result<f64>) -> Result<bool> {
    let norm = max_abs(beta);
    if norm < 1.0 {
        return Ok(false);
    }
    let pushed: Vec<f64> = beta.iter().map(|b| b * (1.0 + 1.0 / norm)).collect();
    Ok(eval(&pushed)? >= ll)
}

/// Newton steps larger than this keep the iteration going even when the score is tiny.
const STEP_TOL: f64 = 1e-4;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxSummaryRow {
    pub name: String,
    pub coefficient: f64,
    pub hazard_ratio: f64,
    pub standard_error: f64,
    pub z: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxSummary {
    pub rows: Vec<CoxSummaryRow>,
}

/// Two-sided standard-normal tail probability of `|z|`.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / core::f64::consts::SQRT_2)
}

pub fn summary_row(name: &str, coefficient: f64, standard_error: f64) -> CoxSummaryRow {
    let z = coefficient / standard_error;
    CoxSummaryRow {
        name: name.into(),
        coefficient,
        hazard_ratio: exp(coefficient),
        standard_error,
        z,
        p_value: two_sided_p(z),
    }
}

/// Wald summary: standard errors from the inverse observed information at the fit.
pub fn cox_summary(model: &CoxModel, ds: &Dataset) -> Result<CoxSummary> {
    if !model.converged {
        return Err(Error::InvalidInput("summary requires a converged model".into()));
    }
    let d = cox_derivatives(ds, &model.beta)?;
    let inv = d
        .information
        .cholesky(PIVOT_TOL)
        .ok_or_else(|| Error::Singular("information matrix is not invertible at the estimate".into()))?
        .inverse();
    let rows = model
        .covariate_names
        .iter()
        .zip(&model.beta)
        .enumerate()
        .map(|(j, (n, &b))| summary_row(n, b, sqrt(inv.get(j, j))))
        .collect();
    Ok(CoxSummary { rows })
}

/// Right-continuous step survival function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
}

impl SurvivalCurve {
    pub fn at(&self, t: f64) -> f64 {
        match self.times.iter().rposition(|&s| s <= t) {
            Some(k) => self.survival[k],
            None => 1.0,
        }
    }
}

/// Event-time table: distinct event times ascending, events and at-risk counts, and the
/// relative-risk sum over the risk set.
struct EventTable {
    times: Vec<f64>,
    events: Vec<usize>,
    at_risk: Vec<usize>,
    risk_sum: Vec<f64>,
}

fn event_table(ds: &Dataset, risk: &[f64]) -> EventTable {
    let durations = ds.durations();
    let order = descending_order(&durations);
    let inst = ds.instances();
    let mut t = EventTable { times: vec![], events: vec![], at_risk: vec![], risk_sum: vec![] };
    let (mut n, mut s) = (0usize, 0.0);
    for_each_tie_group(&order, &durations, |group| {
        n += group.len();
        s += group.iter().map(|&i| risk[i]).sum::<f64>();
        let d = group.iter().filter(|&&i| inst[i].event).count();
        if d > 0 {
            t.times.push(durations[group[0]]);
            t.events.push(d);
            t.at_risk.push(n);
            t.risk_sum.push(s);
        }
    });
    t.times.reverse();
    t.events.reverse();
    t.at_risk.reverse();
    t.risk_sum.reverse();
    t
}

/// Breslow cumulative baseline hazard `(times, cumulative hazard)` at event times.
pub fn breslow_cumulative_hazard(model: &CoxModel, ds: &Dataset) -> Result<(Vec<f64>, Vec<f64>)> {
    ds.require_events()?;
    let risk: Vec<f64> = linear_predictor(ds, &model.beta)?.into_iter().map(exp).collect();
    let t = event_table(ds, &risk);
    let mut cum = 0.0;
    let h = t.events.iter().zip(&t.risk_sum).map(|(&d, &s)| {
        cum += d as f64 / s;
        cum
    });
    Ok((t.times.clone(), h.collect()))
}

/// Baseline survival `exp(-Lambda_0(t))` from the Breslow estimator.
pub fn breslow_baseline(model: &CoxModel, ds: &Dataset) -> Result<SurvivalCurve> {
    if !model.converged {
        return Err(Error::InvalidInput("baseline hazard requires a converged model".into()));
    }
    let (times, cum) = breslow_cumulative_hazard(model, ds)?;
    Ok(SurvivalCurve { times, survival: cum.into_iter().map(|h| exp(-h)).collect() })
}

/// Product-limit estimator; censored instances leave the risk set without a factor.
pub fn kaplan_meier(ds: &Dataset) -> Result<SurvivalCurve> {
    ds.require_events()?;
    let ones = vec![1.0; ds.len()];
    let t = event_table(ds, &ones);
    let mut s = 1.0;
    let survival = t
        .events
        .iter()
        .zip(&t.at_risk)
        .map(|(&d, &n)| {
            s *= 1.0 - d as f64 / n as f64;
            s
        })
        .collect();
    Ok(SurvivalCurve { times: t.times, survival })
}

/// Harrell's concordance index. A pair is comparable when the shorter duration ends in
/// an event; higher risk on the shorter duration is concordant, tied risks count 1/2.
pub fn concordance_index(durations: &[f64], events: &[bool], risks: &[f64]) -> Result<f64> {
    check_lengths(durations.len(), events.len())?;
    check_lengths(durations.len(), risks.len())?;
    let mut order: Vec<usize> = (0..durations.len()).collect();
    order.sort_by(|&a, &b| durations[a].total_cmp(&durations[b]));
    let mut concordant = 0.0;
    let mut comparable = 0u64;
    let mut start_longer = 0;
    for (pos, &i) in order.iter().enumerate() {
        // first position with a strictly longer duration
        if start_longer <= pos {
            start_longer = pos + 1;
        }
        while start_longer < order.len() && durations[order[start_longer]] <= durations[i] {
            start_longer += 1;
        }
        if !events[i] {
            continue;
        }
        for &j in &order[start_longer..] {
            comparable += 1;
            if risks[i] > risks[j] {
                concordant += 1.0;
            } else if risks[i] == risks[j] {
                concordant += 0.5;
            }
        }
    }
    if comparable == 0 {
        return Err(Error::NoComparablePairs);
    }
    Ok(concordant / comparable as f64)
}

/// Discrete-time logistic model over fixed decision intervals. The last coefficient
/// multiplies elapsed time (seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticBaseline {
    pub covariate_names: Vec<String>,
    pub intercept: f64,
    /// Covariate coefficients followed by the elapsed-time coefficient.
    pub beta: Vec<f64>,
    pub interval: f64,
    /// Elapsed time at which instance risk is read off for ranking.
    pub reference_elapsed: f64,
    /// Parameters held at zero because their column was constant in the expanded data.
    pub fixed_at_zero: Vec<String>,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticBaseline {
    pub fn elapsed_coefficient(&self) -> f64 {
        *self.beta.last().expect("elapsed-time coefficient")
    }

    pub fn linear_predictor(&self, z: &[f64], elapsed: f64) -> f64 {
        let p = self.beta.len() - 1;
        self.intercept + dot(&self.beta[..p], z) + self.beta[p] * elapsed
    }

    pub fn probability(&self, z: &[f64], elapsed: f64) -> f64 {
        sigmoid(self.linear_predictor(z, elapsed))
    }

    /// Crossing probability at the reference elapsed time.
    pub fn risk(&self, z: &[f64]) -> f64 {
        self.probability(z, self.reference_elapsed)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

pub const DEFAULT_INTERVAL: f64 = 0.1;

/// Number of decision intervals covering `duration`.
pub fn interval_count(duration: f64, interval: f64) -> usize {
    (libm::ceil(duration / interval - 1e-9) as usize).max(1)
}

/// Expands every instance into per-interval rows `(covariates.., elapsed)` with a
/// crossing label on the last row of observed events.
pub fn expand_intervals(ds: &Dataset, interval: f64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for inst in ds.instances() {
        let k = interval_count(inst.duration, interval);
        for r in 0..k {
            let mut row = inst.covariates.clone();
            row.push(r as f64 * interval);
            rows.push(row);
            labels.push(inst.event && r + 1 == k);
        }
    }
    (rows, labels)
}

/// Fits the binary-choice baseline by Newton's method on the expanded rows.
pub fn fit_logistic_baseline(ds: &Dataset, interval: f64, opts: &FitOptions) -> Result<LogisticBaseline> {
    if !(interval > 0.0) {
        return Err(Error::InvalidInput("interval must be positive".into()));
    }
    if ds.is_empty() {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    if let Some(i) = ds.instances().iter().position(|i| !(i.duration > 0.0)) {
        return Err(Error::InvalidInput(format!("row {}: duration must be positive", i)));
    }
    let (rows, labels) = expand_intervals(ds, interval);
    let p = ds.width() + 1;
    // parameter 0 is the intercept; constant columns would be collinear with it
    let free: Vec<usize> = (0..p).filter(|&j| rows.iter().any(|r| r[j] != rows[0][j])).collect();
    let q = free.len() + 1;
    let design = |r: &[f64], x: &mut Vec<f64>| {
        x.clear();
        x.push(1.0);
        x.extend(free.iter().map(|&j| r[j]));
    };

    let mut theta = vec![0.0; q];
    let mut x = Vec::with_capacity(q);
    let loglik = |theta: &[f64], x: &mut Vec<f64>| -> f64 {
        rows.iter()
            .zip(&labels)
            .map(|(r, &y)| {
                design(r, x);
                let eta = dot(x, theta);
                // log sigmoid(eta) or log(1 - sigmoid(eta))
                let s = if y { eta } else { -eta };
                -softplus(-s)
            })
            .sum()
    };
    let mut ll = loglik(&theta, &mut x);
    let mut iterations = 0;
    let mut converged = false;
    let mut last_step = 0.0;
    while iterations < opts.max_iter {
        let mut grad = vec![0.0; q];
        let mut info = SquareMatrix::zeros(q);
        for (r, &y) in rows.iter().zip(&labels) {
            design(r, &mut x);
            let pr = sigmoid(dot(&x, &theta));
            let resid = if y { 1.0 - pr } else { -pr };
            for (g, v) in grad.iter_mut().zip(&x) {
                *g += resid * v;
            }
            info.add_outer(pr * (1.0 - pr), &x);
        }
        let chol = match info.cholesky(PIVOT_TOL) {
            Some(c) => c,
            None => return Err(degenerate(last_step, opts, "logistic information matrix is singular")),
        };
        let step = chol.solve(&grad);
        if max_abs(&grad) < opts.tol * (rows.len() as f64).max(1.0) && max_abs(&step) < STEP_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let mut scale = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + scale * s).collect();
            let cll = loglik(&cand, &mut x);
            if cll >= ll - 1e-12 * ll.abs() || scale < 1e-10 {
                last_step = max_abs(&step) * scale;
                theta = cand;
                ll = cll;
                break;
            }
            scale *= 0.5;
        }
        if max_abs(&theta) > opts.beta_bound {
            return Err(Error::Separation { bound: opts.beta_bound });
        }
    }
    if converged && likelihood_keeps_rising(&theta, ll, |t| Ok(loglik(t, &mut Vec::with_capacity(q))))? {
        return Err(Error::Separation { bound: opts.beta_bound });
    }
    let mut beta = vec![0.0; p];
    for (k, &j) in free.iter().enumerate() {
        beta[j] = theta[k + 1];
    }
    let mut names = ds.column_names();
    names.push("elapsed_time".into());
    let fixed_at_zero = (0..p).filter(|j| !free.contains(j)).map(|j| names[j].clone()).collect();
    names.pop();
    Ok(LogisticBaseline {
        covariate_names: names,
        intercept: theta[0],
        beta,
        interval,
        reference_elapsed: 0.0,
        fixed_at_zero,
        iterations,
        converged,
    })
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(exp(-x))
    } else {
        libm::log1p(exp(x))
    }
}
