#![allow(dead_code)]

use pedwait_core::{CovariateEntry, CovariateSchema, Dataset, Instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dataset with continuous columns `x1..xp`.
pub fn continuous(rows: &[(Vec<f64>, f64, bool)]) -> Dataset {
    let p = rows.first().map_or(0, |r| r.0.len());
    let schema = CovariateSchema::new((1..=p).map(|i| CovariateEntry::continuous(&format!("x{i}"))).collect()).unwrap();
    let instances = rows.iter().map(|(z, t, e)| Instance::new(z.clone(), *t, *e)).collect();
    Dataset::new(schema, instances).unwrap()
}

/// Random continuous dataset with roughly 30% censoring and occasional tied durations.
pub fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let rows: Vec<_> = (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..p).map(|_| r.random_range(-1.5..1.5)).collect();
            let t = (r.random_range(1..40) as f64) * 0.25;
            (z, t, r.random::<f64>() < 0.7)
        })
        .collect();
    let mut ds = continuous(&rows);
    if ds.event_count() == 0 {
        let mut rows = rows;
        rows[0].2 = true;
        ds = continuous(&rows);
    }
    ds
}

/// Brute-force Harrell C-index over all ordered pairs.
pub fn cindex_by_pairs(t: &[f64], e: &[bool], r: &[f64]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..t.len() {
        for j in 0..t.len() {
            if e[i] && t[i] < t[j] {
                den += 1.0;
                if r[i] > r[j] {
                    num += 1.0;
                } else if r[i] == r[j] {
                    num += 0.5;
                }
            }
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Log partial likelihood straight from the definition, Breslow ties.
pub fn lpl_by_definition(eta: &[f64], t: &[f64], e: &[bool]) -> f64 {
    let mut ll = 0.0;
    for k in 0..t.len() {
        if !e[k] {
            continue;
        }
        let denom: f64 = (0..t.len()).filter(|&j| t[j] >= t[k]).map(|j| eta[j].exp()).sum();
        ll += eta[k] - denom.ln();
    }
    ll
}
