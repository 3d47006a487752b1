//! RReliefF feature weights for a continuous target (the observed duration).
//!
//! Accumulator form: for each sampled instance the `k` nearest neighbours contribute,
//! with rank-based influence `exp(-(rank / sigma)^2)` normalized over the neighbours,
//! to the target-difference sum `N_dC`, the per-feature sums `N_dA[f]` and the joint
//! sums `N_dCdA[f]`. The weight is
//!
//! ```text
//! W[f] = N_dCdA[f] / N_dC - (N_dA[f] - N_dCdA[f]) / (m - N_dC)
//! ```
//!
//! which is the plug-in estimate of
//! `P(diff C | diff A) P(diff A) / P(diff C) - (1 - P(diff C | diff A)) P(diff A) / (1 - P(diff C))`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use libm::{exp, sqrt};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliefParams {
    pub k: usize,
    /// Number of sampled instances; `None` uses every instance once.
    pub samples: Option<usize>,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for ReliefParams {
    fn default() -> Self {
        Self { k: 10, samples: None, sigma: 20.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliefWeights {
    pub names: Vec<String>,
    pub weights: Vec<f64>,
    /// Column indices by descending weight; ties keep column order.
    pub ranking: Vec<usize>,
    pub params: ReliefParams,
    pub warnings: Vec<String>,
}

impl ReliefWeights {
    /// Rank (0-based) of every column.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![0; self.ranking.len()];
        for (pos, &j) in self.ranking.iter().enumerate() {
            r[j] = pos;
        }
        r
    }
}

/// Raw accumulator sums, exposed for cross-checking against the probability form.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliefSums {
    pub m: f64,
    pub n_dc: f64,
    pub n_da: Vec<f64>,
    pub n_dcda: Vec<f64>,
}

struct Prepared {
    binary: Vec<bool>,
    /// Per-column distance scale (population sd) and diff scale (range).
    sd: Vec<f64>,
    range: Vec<f64>,
    target_range: f64,
    order: Vec<usize>,
}

fn prepare(ds: &Dataset) -> Prepared {
    let n = ds.len();
    let p = ds.width();
    let inst = ds.instances();
    let binary: Vec<bool> = ds.columns().iter().map(|c| c.is_binary()).collect();
    let mut sd = vec![0.0; p];
    let mut range = vec![0.0; p];
    for j in 0..p {
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for i in inst {
            let v = i.covariates[j];
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        let mean = sum / n as f64;
        let var = inst.iter().map(|i| (i.covariates[j] - mean) * (i.covariates[j] - mean)).sum::<f64>() / n as f64;
        sd[j] = sqrt(var);
        range[j] = hi - lo;
    }
    let (lo, hi) = inst
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| (lo.min(i.duration), hi.max(i.duration)));
    // Canonical content order makes results independent of input row order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| canonical_cmp(ds, a, b));
    Prepared { binary, sd, range, target_range: hi - lo, order }
}

fn canonical_cmp(ds: &Dataset, a: usize, b: usize) -> Ordering {
    let (x, y) = (&ds.instances()[a], &ds.instances()[b]);
    for (u, v) in x.covariates.iter().zip(&y.covariates) {
        match u.total_cmp(v) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    x.duration.total_cmp(&y.duration).then(x.event.cmp(&y.event))
}

/// Neighbour distance: Manhattan on standardized continuous columns plus mismatch
/// count on binary columns.
fn distance(prep: &Prepared, a: &[f64], b: &[f64]) -> f64 {
    let mut d = 0.0;
    for j in 0..a.len() {
        if prep.binary[j] {
            if a[j] != b[j] {
                d += 1.0;
            }
        } else if prep.sd[j] > 0.0 {
            d += (a[j] - b[j]).abs() / prep.sd[j];
        }
    }
    d
}

fn feature_diff(prep: &Prepared, j: usize, a: f64, b: f64) -> f64 {
    if prep.binary[j] {
        if a != b {
            1.0
        } else {
            0.0
        }
    } else if prep.range[j] > 0.0 {
        (a - b).abs() / prep.range[j]
    } else {
        0.0
    }
}

/// Runs the accumulator pass and returns the raw sums.
pub fn relief_sums(ds: &Dataset, params: &ReliefParams) -> Result<ReliefSums> {
    let n = ds.len();
    if params.k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    if params.k >= n {
        return Err(Error::InvalidInput(format!("k = {} needs at least {} instances, got {}", params.k, params.k + 1, n)));
    }
    if !(params.sigma > 0.0) {
        return Err(Error::InvalidInput("sigma must be positive".into()));
    }
    let prep = prepare(ds);
    let inst = ds.instances();
    let p = ds.width();

    let sampled: Vec<usize> = match params.samples {
        Some(m) if m == 0 => return Err(Error::InvalidInput("sample count must be positive".into())),
        Some(m) if m < n => {
            let mut pos = rand::seq::index::sample(&mut rng::seeded(params.seed), n, m).into_vec();
            pos.sort_unstable();
            pos.into_iter().map(|q| prep.order[q]).collect()
        }
        _ => prep.order.clone(),
    };

    let influence: Vec<f64> = (1..=params.k).map(|r| {
        let x = r as f64 / params.sigma;
        exp(-x * x)
    })
    .collect();
    let total_influence: f64 = influence.iter().sum();

    let mut sums = ReliefSums { m: sampled.len() as f64, n_dc: 0.0, n_da: vec![0.0; p], n_dcda: vec![0.0; p] };
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &i in &sampled {
        cand.clear();
        for (pos, &j) in prep.order.iter().enumerate() {
            if j != i {
                cand.push((distance(&prep, &inst[i].covariates, &inst[j].covariates), pos));
            }
        }
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        cand.select_nth_unstable_by(params.k - 1, by_dist);
        cand[..params.k].sort_by(by_dist);
        for (rank, &(_, pos)) in cand[..params.k].iter().enumerate() {
            let j = prep.order[pos];
            let w = influence[rank] / total_influence;
            let dc = if prep.target_range > 0.0 {
                (inst[i].duration - inst[j].duration).abs() / prep.target_range
            } else {
                0.0
            };
            sums.n_dc += dc * w;
            for f in 0..p {
                let da = feature_diff(&prep, f, inst[i].covariates[f], inst[j].covariates[f]);
                sums.n_da[f] += da * w;
                sums.n_dcda[f] += dc * da * w;
            }
        }
    }
    Ok(sums)
}

/// RReliefF importance of every column of `ds` with the duration as target.
pub fn rrelieff(ds: &Dataset, params: &ReliefParams) -> Result<ReliefWeights> {
    let sums = relief_sums(ds, params)?;
    let mut warnings = Vec::new();
    let weights: Vec<f64> = if sums.n_dc == 0.0 {
        warnings.push(String::from("all sampled neighbours share the same target; weights are zero"));
        vec![0.0; ds.width()]
    } else {
        let rest = sums.m - sums.n_dc;
        sums.n_da
            .iter()
            .zip(&sums.n_dcda)
            .map(|(&da, &dcda)| dcda / sums.n_dc - if rest > 0.0 { (da - dcda) / rest } else { 0.0 })
            .collect()
    };
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("relief weights".into()));
    }
    let mut ranking: Vec<usize> = (0..weights.len()).collect();
    ranking.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    Ok(ReliefWeights { names: ds.column_names(), weights, ranking, params: *params, warnings })
}

/// First `n` columns of the ranking.
pub fn top_n(weights: &ReliefWeights, n: usize) -> Result<Vec<usize>> {
    if n == 0 || n > weights.ranking.len() {
        return Err(Error::InvalidInput(format!("top_n must be in 1..={}, got {}", weights.ranking.len(), n)));
    }
    Ok(weights.ranking[..n].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CovariateEntry, CovariateSchema, Instance};

    fn ds(cols: &[&str], rows: &[(Vec<f64>, f64)]) -> Dataset {
        let schema = CovariateSchema::new(cols.iter().map(|c| CovariateEntry::continuous(c)).collect()).unwrap();
        Dataset::new(schema, rows.iter().map(|(z, t)| Instance::new(z.clone(), *t, true)).collect()).unwrap()
    }

    #[test]
    fn k_must_be_below_n() {
        let d = ds(&["a"], &[(vec![1.0], 1.0), (vec![2.0], 2.0)]);
        let err = rrelieff(&d, &ReliefParams { k: 2, ..Default::default() }).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn constant_feature_gets_zero_weight() {
        let rows: Vec<_> = (0..12).map(|i| (vec![i as f64, 3.0], (i * i) as f64)).collect();
        let w = rrelieff(&ds(&["a", "c"], &rows), &ReliefParams { k: 3, ..Default::default() }).unwrap();
        assert_eq!(w.weights[1], 0.0);
        assert_eq!(w.ranking[0], 0);
    }

    #[test]
    fn identical_targets_give_zero_weights_with_warning() {
        let rows: Vec<_> = (0..6).map(|i| (vec![i as f64], 2.0)).collect();
        let w = rrelieff(&ds(&["a"], &rows), &ReliefParams { k: 2, ..Default::default() }).unwrap();
        assert_eq!(w.weights, vec![0.0]);
        assert_eq!(w.warnings.len(), 1);
    }

    #[test]
    fn top_n_bounds() {
        let rows: Vec<_> = (0..6).map(|i| (vec![i as f64, (i % 2) as f64], i as f64)).collect();
        let w = rrelieff(&ds(&["a", "b"], &rows), &ReliefParams { k: 2, ..Default::default() }).unwrap();
        assert_eq!(top_n(&w, 2).unwrap().len(), 2);
        assert!(top_n(&w, 3).is_err());
        assert!(top_n(&w, 0).is_err());
    }
}
