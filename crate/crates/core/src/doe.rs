//! D-optimal scenario design for the type-I-censored exponential proportional
//! hazards model, searched by simulated annealing.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, expm1};
use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::linalg::{SquareMatrix, PIVOT_TOL};
use crate::rng::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactorLevels {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl FactorLevels {
    pub fn len(&self) -> usize {
        match self {
            FactorLevels::Numeric(v) => v.len(),
            FactorLevels::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Design-vector columns contributed: 1 for numeric, levels - 1 for categorical.
    pub fn width(&self) -> usize {
        match self {
            FactorLevels::Numeric(_) => 1,
            FactorLevels::Categorical(v) => v.len() - 1,
        }
    }

    pub fn label(&self, level: usize) -> String {
        match self {
            FactorLevels::Numeric(v) => format!("{}", v[level]),
            FactorLevels::Categorical(v) => v[level].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub levels: FactorLevels,
}

impl Factor {
    pub fn numeric(name: &str, levels: &[f64]) -> Self {
        Self { name: name.into(), levels: FactorLevels::Numeric(levels.to_vec()) }
    }

    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        Self { name: name.into(), levels: FactorLevels::Categorical(levels.iter().map(|s| s.to_string()).collect()) }
    }
}

/// Ordered factors with their levels. Scenarios are indexed in mixed radix with the
/// last factor varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CatalogRepr", into = "CatalogRepr")]
pub struct FactorCatalog {
    factors: Vec<Factor>,
}

#[derive(Serialize, Deserialize)]
struct CatalogRepr {
    factors: Vec<Factor>,
}

impl TryFrom<CatalogRepr> for FactorCatalog {
    type Error = Error;

    fn try_from(r: CatalogRepr) -> Result<Self> {
        Self::new(r.factors)
    }
}

impl From<FactorCatalog> for CatalogRepr {
    fn from(c: FactorCatalog) -> Self {
        CatalogRepr { factors: c.factors }
    }
}

impl FactorCatalog {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidInput("catalog has no factors".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if factors[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::InvalidInput(format!("duplicate factor {}", f.name)));
            }
            match &f.levels {
                FactorLevels::Numeric(v) if v.is_empty() || v.iter().any(|x| !x.is_finite()) => {
                    return Err(Error::InvalidInput(format!("factor {} needs finite numeric levels", f.name)));
                }
                FactorLevels::Categorical(v) if v.len() < 2 => {
                    return Err(Error::InvalidInput(format!("categorical factor {} needs at least 2 levels", f.name)));
                }
                _ => {}
            }
        }
        let size = factors.iter().try_fold(1usize, |acc, f| acc.checked_mul(f.levels.len()));
        if size.is_none() {
            return Err(Error::InvalidInput("catalog size overflows".into()));
        }
        Ok(Self { factors })
    }

    /// The controlled variables of the crossing experiment.
    pub fn crossing_scenarios() -> Self {
        Self::new(vec![
            Factor::numeric("speed_limit", &[30.0, 40.0, 50.0]),
            Factor::numeric("min_gap", &[1.0, 1.5, 2.0]),
            Factor::numeric("lane_width", &[2.5, 2.75, 3.0]),
            Factor::categorical("road_type", &["one_way", "two_way", "two_way_median"]),
            Factor::numeric("braking_level", &[1.0, 2.0, 3.0]),
            Factor::categorical("automation", &["human", "mixed", "automated"]),
            Factor::numeric("arrival_rate", &[530.0, 750.0, 1100.0]),
            Factor::categorical("time_of_day", &["day", "night"]),
            Factor::categorical("weather", &["clear", "snowy"]),
        ])
        .expect("built-in catalog is valid")
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Number of full-factorial combinations.
    pub fn size(&self) -> usize {
        self.factors.iter().map(|f| f.levels.len()).product()
    }

    /// Design-vector length, intercept included.
    pub fn dimension(&self) -> usize {
        1 + self.factors.iter().map(|f| f.levels.width()).sum::<usize>()
    }

    /// Level index per factor for scenario `index`.
    pub fn levels_of(&self, index: usize) -> Vec<usize> {
        let mut rest = index;
        let mut out = vec![0; self.factors.len()];
        for (k, f) in self.factors.iter().enumerate().rev() {
            let n = f.levels.len();
            out[k] = rest % n;
            rest /= n;
        }
        out
    }

    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.factors.len() {
            return Err(Error::DimensionMismatch { expected: self.factors.len(), found: levels.len() });
        }
        let mut idx = 0;
        for (f, &l) in self.factors.iter().zip(levels) {
            if l >= f.levels.len() {
                return Err(Error::InvalidInput(format!("level {} out of range for {}", l, f.name)));
            }
            idx = idx * f.levels.len() + l;
        }
        Ok(idx)
    }

    /// Design vector `(1, numeric values, one-hot indicators with the first level as baseline)`.
    pub fn encode(&self, index: usize) -> Vec<f64> {
        let levels = self.levels_of(index);
        let mut z = Vec::with_capacity(self.dimension());
        z.push(1.0);
        for (f, &l) in self.factors.iter().zip(&levels) {
            match &f.levels {
                FactorLevels::Numeric(v) => z.push(v[l]),
                FactorLevels::Categorical(v) => z.extend((1..v.len()).map(|k| if k == l { 1.0 } else { 0.0 })),
            }
        }
        z
    }

    pub fn labels(&self, index: usize) -> Vec<String> {
        self.factors.iter().zip(self.levels_of(index)).map(|(f, l)| f.levels.label(l)).collect()
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = vec![String::from("intercept")];
        for f in &self.factors {
            match &f.levels {
                FactorLevels::Numeric(_) => names.push(f.name.clone()),
                FactorLevels::Categorical(v) => names.extend(v[1..].iter().map(|l| format!("{}={}", f.name, l))),
            }
        }
        names
    }
}

/// Probability of observing the event before censoring time `c`.
pub fn censoring_factor(z: &[f64], beta: &[f64], c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let eta: f64 = z.iter().zip(beta).map(|(a, b)| a * b).sum();
    let rate = c * exp(eta.min(700.0));
    -expm1(-rate)
}

/// Per-scenario information `(1 - exp(-c exp(beta.z))) z z^T`.
pub fn fisher_info(z: &[f64], beta: &[f64], c: f64) -> Result<SquareMatrix> {
    if z.len() != beta.len() {
        return Err(Error::DimensionMismatch { expected: z.len(), found: beta.len() });
    }
    if c.is_nan() || c < 0.0 {
        return Err(Error::InvalidInput("censoring time must be non-negative".into()));
    }
    let mut m = SquareMatrix::zeros(z.len());
    m.add_outer(censoring_factor(z, beta, c), z);
    Ok(m)
}

/// Scenarios (catalog indices) with their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub scenarios: Vec<usize>,
    pub weights: Vec<f64>,
    pub objective: f64,
}

impl Design {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }
}

/// Log-determinant of `sum_j w_j I(z_j)`; `-inf` when singular.
pub fn log_det_information(atoms: &[(Vec<f64>, f64)], weights: &[f64]) -> f64 {
    let Some((first, _)) = atoms.first() else {
        return f64::NEG_INFINITY;
    };
    let mut m = SquareMatrix::zeros(first.len());
    for ((z, factor), w) in atoms.iter().zip(weights) {
        m.add_outer(w * factor, z);
    }
    match m.cholesky(PIVOT_TOL) {
        Some(ch) => ch.log_det(),
        None => f64::NEG_INFINITY,
    }
}

pub fn design_objective(catalog: &FactorCatalog, scenarios: &[usize], weights: &[f64], beta: &[f64], c: f64) -> Result<f64> {
    if scenarios.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: scenarios.len(), found: weights.len() });
    }
    if beta.len() != catalog.dimension() {
        return Err(Error::DimensionMismatch { expected: catalog.dimension(), found: beta.len() });
    }
    if let Some(&s) = scenarios.iter().find(|&&s| s >= catalog.size()) {
        return Err(Error::InvalidInput(format!("scenario {} outside catalog", s)));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidInput("weights must be non-negative".into()));
    }
    let atoms: Vec<_> = scenarios
        .iter()
        .map(|&s| {
            let z = catalog.encode(s);
            let f = censoring_factor(&z, beta, c);
            (z, f)
        })
        .collect();
    Ok(log_det_information(&atoms, weights))
}

/// How the worsening fraction `Delta` is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    /// `(logdet* - logdet_n) / |logdet*|`.
    #[default]
    NormalizedLogDet,
    /// `(det* - det_n) / det*`, evaluated as `1 - exp(logdet_n - logdet*)`.
    RelativeDet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    /// Prior coefficients, intercept first. Empty means all zeros.
    #[serde(default)]
    pub beta_prior: Vec<f64>,
    pub censor_time: f64,
    pub m: usize,
    pub iterations: usize,
    pub initial_temperature: f64,
    pub alpha: f64,
    /// Probability of proposing a scenario swap rather than a weight perturbation.
    #[serde(default = "default_swap_probability")]
    pub swap_probability: f64,
    /// Mixing fraction toward a flat-Dirichlet draw in a weight move.
    #[serde(default = "default_weight_step")]
    pub weight_step: f64,
    #[serde(default)]
    pub delta_mode: DeltaMode,
    /// Record a trace row every this many iterations (0 disables the trace).
    #[serde(default)]
    pub trace_every: usize,
    pub seed: u64,
}

fn default_swap_probability() -> f64 {
    0.5
}

fn default_weight_step() -> f64 {
    0.1
}

impl AnnealConfig {
    pub fn new(m: usize, seed: u64) -> Self {
        Self {
            beta_prior: Vec::new(),
            censor_time: 30.0,
            m,
            iterations: 20_000,
            initial_temperature: 0.05,
            alpha: 0.9995,
            swap_probability: default_swap_probability(),
            weight_step: default_weight_step(),
            delta_mode: DeltaMode::default(),
            trace_every: 0,
            seed,
        }
    }

    fn validate(&self, catalog: &FactorCatalog) -> Result<Vec<f64>> {
        let p = catalog.dimension();
        if self.m < p {
            return Err(Error::InfeasibleDesign(format!(
                "{} scenarios cannot support a {}-column design (every design would be singular)",
                self.m, p
            )));
        }
        if self.m > catalog.size() {
            return Err(Error::InfeasibleDesign(format!("{} scenarios requested from a catalog of {}", self.m, catalog.size())));
        }
        if !(self.censor_time > 0.0) {
            return Err(Error::InvalidInput("censor time must be positive".into()));
        }
        if !(self.initial_temperature > 0.0) || !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput("temperature must be positive and alpha in (0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.swap_probability) || !(self.weight_step > 0.0 && self.weight_step <= 1.0) {
            return Err(Error::InvalidInput("swap probability must be in [0, 1] and weight step in (0, 1]".into()));
        }
        if self.beta_prior.is_empty() {
            return Ok(vec![0.0; p]);
        }
        if self.beta_prior.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: self.beta_prior.len() });
        }
        Ok(self.beta_prior.clone())
    }
}

/// Worsening fraction of moving from `best` to `candidate` (both log-dets).
pub fn worsening(best: f64, candidate: f64, mode: DeltaMode) -> f64 {
    if best == f64::NEG_INFINITY {
        return if candidate == f64::NEG_INFINITY { 0.0 } else { f64::NEG_INFINITY };
    }
    if candidate == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    match mode {
        DeltaMode::NormalizedLogDet => {
            let scale = if best == 0.0 { 1.0 } else { best.abs() };
            (best - candidate) / scale
        }
        DeltaMode::RelativeDet => -expm1(candidate - best),
    }
}

/// `H = exp(-Delta / T)`, capped at 1.
pub fn acceptance_probability(delta: f64, temperature: f64) -> f64 {
    if delta <= 0.0 {
        return 1.0;
    }
    exp(-delta / temperature)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub temperature: f64,
    pub current: f64,
    pub best: f64,
    pub accepted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealOutcome {
    /// Best design seen over the whole run.
    pub design: Design,
    pub initial_objective: f64,
    pub accepted: usize,
    pub trace: Vec<TraceRow>,
}

struct Chain<'a> {
    catalog: &'a FactorCatalog,
    beta: Vec<f64>,
    c: f64,
}

impl Chain<'_> {
    fn atom(&self, s: usize) -> (Vec<f64>, f64) {
        let z = self.catalog.encode(s);
        let f = censoring_factor(&z, &self.beta, self.c);
        (z, f)
    }
}

fn flat_dirichlet(n: usize, rng: &mut Rng) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = g.iter().sum();
    g.into_iter().map(|x| x / total).collect()
}

/// Simulated annealing over `m`-scenario designs. The chain state follows the
/// accept/reject rule; the best design seen is returned.
pub fn anneal(catalog: &FactorCatalog, cfg: &AnnealConfig) -> Result<AnnealOutcome> {
    let beta = cfg.validate(catalog)?;
    let chain = Chain { catalog, beta, c: cfg.censor_time };
    let mut rng = rng::seeded(cfg.seed);
    let size = catalog.size();

    let mut scenarios: Vec<usize> = rand::seq::index::sample(&mut rng, size, cfg.m).into_vec();
    scenarios.sort_unstable();
    let mut weights = flat_dirichlet(cfg.m, &mut rng);
    let mut atoms: Vec<_> = scenarios.iter().map(|&s| chain.atom(s)).collect();
    let mut current = log_det_information(&atoms, &weights);
    let initial_objective = current;
    let mut best = Design { scenarios: scenarios.clone(), weights: weights.clone(), objective: current };

    let mut temperature = cfg.initial_temperature;
    let mut accepted = 0;
    let mut trace = Vec::new();
    for it in 0..cfg.iterations {
        let swap = cfg.m < size && rng.random::<f64>() < cfg.swap_probability;
        let mut cand_scenarios = scenarios.clone();
        let mut cand_weights = weights.clone();
        let mut cand_atoms = atoms.clone();
        if swap {
            let pos = rng.random_range(0..cfg.m);
            let replacement = loop {
                let s = rng.random_range(0..size);
                if !scenarios.contains(&s) {
                    break s;
                }
            };
            cand_scenarios[pos] = replacement;
            cand_atoms[pos] = chain.atom(replacement);
        } else {
            let d = flat_dirichlet(cfg.m, &mut rng);
            for (w, x) in cand_weights.iter_mut().zip(d) {
                *w = (1.0 - cfg.weight_step) * *w + cfg.weight_step * x;
            }
            let total: f64 = cand_weights.iter().sum();
            cand_weights.iter_mut().for_each(|w| *w /= total);
        }
        let candidate = log_det_information(&cand_atoms, &cand_weights);
        let take = if candidate > current {
            true
        } else {
            let h = acceptance_probability(worsening(current, candidate, cfg.delta_mode), temperature);
            h >= rng.random::<f64>()
        };
        if take {
            scenarios = cand_scenarios;
            weights = cand_weights;
            atoms = cand_atoms;
            current = candidate;
            accepted += 1;
            if current > best.objective {
                best = Design { scenarios: scenarios.clone(), weights: weights.clone(), objective: current };
            }
        }
        temperature *= cfg.alpha;
        if cfg.trace_every > 0 && (it + 1) % cfg.trace_every == 0 {
            trace.push(TraceRow { iteration: it + 1, temperature, current, best: best.objective, accepted });
        }
    }
    Ok(AnnealOutcome { design: best, initial_objective, accepted, trace })
}

/// Uniformly random feasible design (distinct scenarios, flat-Dirichlet weights).
pub fn random_design(catalog: &FactorCatalog, m: usize, beta: &[f64], c: f64, rng: &mut Rng) -> Result<Design> {
    if m == 0 || m > catalog.size() {
        return Err(Error::InfeasibleDesign(format!("{} scenarios from a catalog of {}", m, catalog.size())));
    }
    let scenarios = rand::seq::index::sample(rng, catalog.size(), m).into_vec();
    let weights = flat_dirichlet(m, rng);
    let objective = design_objective(catalog, &scenarios, &weights, beta, c)?;
    Ok(Design { scenarios, weights, objective })
}

/// The `budget` highest-weight scenarios, ties broken by catalog order.
pub fn select_scenarios(design: &Design, budget: usize) -> Result<Vec<usize>> {
    if budget > design.len() {
        return Err(Error::InvalidInput(format!("budget {} exceeds design size {}", budget, design.len())));
    }
    let mut order: Vec<usize> = (0..design.len()).collect();
    order.sort_by(|&a, &b| {
        design.weights[b].total_cmp(&design.weights[a]).then(design.scenarios[a].cmp(&design.scenarios[b]))
    });
    Ok(order.into_iter().take(budget).map(|i| design.scenarios[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_scenarios_shape() {
        let c = FactorCatalog::crossing_scenarios();
        assert_eq!(c.size(), 8748);
        assert_eq!(c.dimension(), 12);
        assert_eq!(c.column_names().len(), 12);
    }

    #[test]
    fn mixed_radix_roundtrip() {
        let c = FactorCatalog::crossing_scenarios();
        for idx in [0, 1, 17, 4000, 8747] {
            assert_eq!(c.index_of(&c.levels_of(idx)).unwrap(), idx);
        }
        assert_eq!(c.levels_of(1), vec![0, 0, 0, 0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn fisher_hand_value() {
        let m = fisher_info(&[1.0, 0.0], &[0.0, 0.0], 1.0).unwrap();
        assert!((m.get(0, 0) - (1.0 - exp(-1.0))).abs() < 1e-15);
        assert_eq!(m.get(1, 1), 0.0);
        assert!((m.get(0, 0) - 0.6321).abs() < 1e-4);
    }

    #[test]
    fn fisher_limits() {
        let z = [1.0, 2.0];
        assert_eq!(fisher_info(&z, &[0.0, 0.0], 0.0).unwrap().as_slice(), &[0.0; 4]);
        let big = fisher_info(&z, &[0.0, 0.0], 1e6).unwrap();
        assert_eq!(big.as_slice(), &[1.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn orthogonal_atoms() {
        let atoms = vec![(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 1.0)];
        let v = log_det_information(&atoms, &[0.5, 0.5]);
        assert!((v - libm::log(0.25)).abs() < 1e-15);
    }

    #[test]
    fn rank_deficient_is_negative_infinity() {
        let c = FactorCatalog::crossing_scenarios();
        let v = design_objective(&c, &[0, 1, 2], &[0.3, 0.3, 0.4], &[0.0; 12], 30.0).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn infeasible_m() {
        let c = FactorCatalog::crossing_scenarios();
        assert!(matches!(anneal(&c, &AnnealConfig::new(5, 0)), Err(Error::InfeasibleDesign(_))));
    }

    #[test]
    fn selection_order() {
        let d = Design { scenarios: vec![4, 2, 9], weights: vec![0.2, 0.5, 0.3], objective: 0.0 };
        assert_eq!(select_scenarios(&d, 2).unwrap(), vec![2, 9]);
        assert_eq!(select_scenarios(&d, 3).unwrap().len(), 3);
    }

    #[test]
    fn acceptance_bounds() {
        assert_eq!(acceptance_probability(-1.0, 1.0), 1.0);
        assert!((acceptance_probability(1.0, 1.0) - exp(-1.0)).abs() < 1e-15);
        assert_eq!(worsening(-2.0, f64::NEG_INFINITY, DeltaMode::NormalizedLogDet), f64::INFINITY);
        assert!((worsening(-2.0, -3.0, DeltaMode::NormalizedLogDet) - 0.5).abs() < 1e-15);
        assert!((worsening(0.0, libm::log(0.5), DeltaMode::RelativeDet) - 0.5).abs() < 1e-15);
    }
}
