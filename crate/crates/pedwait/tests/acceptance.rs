//! Acceptance gate: one PASS/FAIL line per criterion with its measured runtime.
//!
//! Run with `cargo test -p pedwait --test acceptance -- --nocapture` to see the report.
//! Criterion 1 is a pure arithmetic check of the published coefficient table and is
//! known not to hold at the stated tolerance; it is reported as FAIL and the gate
//! asserts that exactly the documented rows miss, so a silent change in either
//! direction is caught.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use pedwait::commands::{self, Context};
use pedwait::RunConfig;
use pedwait_core::braking::{braking_profile, kmh_to_ms, DEFAULT_A_MAX};
use pedwait_core::cohort::{gaussian_cohort, HazardSpec, HazardTerm, Observation};
use pedwait_core::dataset::train_test_split;
use pedwait_core::deep::{
    cox_loss, cox_loss_gradient, evaluate_cindex, train, Activation, Batch, DeepCoxModel, NetworkSpec, TrainConfig,
};
use pedwait_core::doe::{anneal, design_objective, random_design, AnnealConfig, Factor, FactorCatalog};
use pedwait_core::explain::{shap_exact, shap_sampled, FnRisk, RiskModel};
use pedwait_core::relief::{rrelieff, ReliefParams};
use pedwait_core::rng::seeded;
use pedwait_core::survival::{concordance_index, cox_derivatives, fit_cox, linear_predictor, FitOptions};
use pedwait_core::{CovariateEntry, CovariateSchema, Dataset, Instance};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rng(seed: u64) -> pedwait_core::rng::Rng {
    seeded(seed)
}

fn continuous(rows: &[(Vec<f64>, f64, bool)]) -> Dataset {
    let p = rows[0].0.len();
    let schema = CovariateSchema::new((1..=p).map(|i| CovariateEntry::continuous(&format!("x{i}"))).collect()).unwrap();
    Dataset::new(schema, rows.iter().map(|(z, t, e)| Instance::new(z.clone(), *t, *e)).collect()).unwrap()
}

// ---------------------------------------------------------------- 1

/// (coefficient, printed hazard ratio) for the ten rows of the published CPH table.
const PUBLISHED_CPH: [(&str, f64, f64); 10] = [
    ("traffic density", -0.83, 0.43),
    ("age 30-39", 0.32, 1.38),
    ("lane width", -0.31, 0.73),
    ("two-way with median", 0.22, 1.24),
    ("walk to shopping", 0.18, 1.20),
    ("age over 50", -0.17, 0.84),
    ("previous VR experience", 0.14, 1.15),
    ("no cars in household", 0.14, 1.15),
    ("female", -0.13, 0.87),
    ("main mode car", -0.12, 0.88),
];
const HR_TOL: f64 = 0.005;
/// Rows whose exp(coefficient) misses the printed ratio by more than `HR_TOL`.
const HR_KNOWN_MISSES: [&str; 4] = ["traffic density", "two-way with median", "female", "main mode car"];

fn misses() -> Vec<&'static str> {
    PUBLISHED_CPH.iter().filter(|(_, b, hr)| (b.exp() - hr).abs() > HR_TOL).map(|r| r.0).collect()
}

fn c1_hazard_ratios() -> Outcome {
    let m = misses();
    // both numbers are rounded to two decimals: every row is consistent with some
    // coefficient in [b - 0.005, b + 0.005] mapping into [hr - 0.005, hr + 0.005]
    let interval_ok = PUBLISHED_CPH.iter().all(|(_, b, hr)| ((b - 0.005).exp() <= hr + 0.005) && ((b + 0.005).exp() >= hr - 0.005));
    let worst = PUBLISHED_CPH.iter().map(|(_, b, hr)| (b.exp() - hr).abs()).fold(0.0, f64::max);
    outcome(
        m.is_empty(),
        format!(
            "{}/10 rows within ±{HR_TOL} (max miss {worst:.4}; out: {}); rounding-interval consistency {}",
            10 - m.len(),
            m.join(", "),
            if interval_ok { "holds" } else { "fails" }
        ),
    )
}

// ---------------------------------------------------------------- 2

const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-4;
/// Denominator floor for relative error on near-zero gradients.
const FD_SCALE_FLOOR: f64 = 1e-4;

fn c2_gradients() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for b in 0..10u64 {
        let spec = NetworkSpec {
            input_width: 5,
            hidden_layers: 2,
            hidden_units: 8,
            dropout_rate: 0.0,
            use_batch_norm: true,
            activation: Activation::Tanh,
            seed: 900 + b,
        };
        let mut r = rng(1000 + b);
        let x = Batch::new(16, 5, (0..80).map(|_| r.random_range(-2.0..2.0)).collect()).unwrap();
        let t: Vec<f64> = (0..16).map(|_| r.random_range(0.1..10.0)).collect();
        let mut e: Vec<bool> = (0..16).map(|_| r.random::<f64>() < 0.7).collect();
        e[0] = true;
        let model = DeepCoxModel::new(spec).unwrap();
        let pass = model.train_forward(&x, &mut rng(0)).unwrap();
        let (_, d_out) = cox_loss_gradient(&pass.output, &t, &e).unwrap();
        let analytic = model.backward(&pass, &d_out).unwrap().0;
        let params = model.parameters();
        let loss_at = |p: &[f64]| {
            let mut m = model.clone();
            m.set_parameters(p).unwrap();
            cox_loss(&m.train_forward(&x, &mut rng(0)).unwrap().output, &t, &e).unwrap()
        };
        for i in 0..params.len() {
            let (mut up, mut dn) = (params.clone(), params.clone());
            up[i] += FD_STEP;
            dn[i] -= FD_STEP;
            let fd = (loss_at(&up) - loss_at(&dn)) / (2.0 * FD_STEP);
            let scale = analytic[i].abs().max(fd.abs()).max(FD_SCALE_FLOOR);
            worst = worst.max((analytic[i] - fd).abs() / scale);
            checked += 1;
        }
    }
    outcome(worst <= FD_REL_TOL, format!("{checked} parameters over 10 batches, max rel. error {worst:.2e} (tol {FD_REL_TOL:e})"))
}

// ---------------------------------------------------------------- 3

const BETA_TOL: f64 = 0.1;
const HESSIAN_REL_TOL: f64 = 1e-3;

fn c3_cox_recovery() -> Outcome {
    let truth = [1.0, -0.5];
    let hazard = HazardSpec::linear(0.0, &[("z1", truth[0]), ("z2", truth[1])]);
    let ds = gaussian_cohort(2000, 2, &hazard, &Observation::default(), 2024).unwrap();
    let model = fit_cox(&ds, &FitOptions::default()).unwrap();
    let beta_err = model.beta.iter().zip(truth).map(|(b, t)| (b - t).abs()).fold(0.0, f64::max);
    let d = cox_derivatives(&ds, &model.beta).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for j in 0..2 {
        let (mut up, mut dn) = (model.beta.clone(), model.beta.clone());
        up[j] += h;
        dn[j] -= h;
        let (su, sd) = (cox_derivatives(&ds, &up).unwrap().score, cox_derivatives(&ds, &dn).unwrap().score);
        for i in 0..2 {
            // information is the negated Hessian of the log partial likelihood
            let fd = -(su[i] - sd[i]) / (2.0 * h);
            let a = d.information.get(i, j);
            worst = worst.max((fd - a).abs() / a.abs().max(fd.abs()));
        }
    }
    outcome(
        beta_err <= BETA_TOL && worst <= HESSIAN_REL_TOL,
        format!("beta = ({:.4}, {:.4}), max |error| {beta_err:.4} (tol {BETA_TOL}); Hessian rel. error {worst:.2e} (tol {HESSIAN_REL_TOL:e})", model.beta[0], model.beta[1]),
    )
}

// ---------------------------------------------------------------- 4

const DEEP_GAP: f64 = 0.03;
const DEEP_SEEDS_REQUIRED: usize = 4;
const LINEAR_GAP_TOL: f64 = 0.02;

/// Returns (deep test C-index - linear CPH test C-index) for one seed.
fn deep_vs_linear(hazard: &HazardSpec, seed: u64) -> f64 {
    let ds = gaussian_cohort(3000, 5, hazard, &Observation::default(), 100 + seed).unwrap();
    let (tr, te) = train_test_split(ds.len(), 0.2, seed);
    let s = ds.standardize(&tr).unwrap();
    let (train_set, test_set) = (s.select_rows(&tr), s.select_rows(&te));
    let cox = fit_cox(&train_set, &FitOptions::default()).unwrap();
    let c_cox = concordance_index(&test_set.durations(), &test_set.events(), &linear_predictor(&test_set, &cox.beta).unwrap()).unwrap();
    // second deep model: ranked top-3 inputs
    let ranking = rrelieff(&train_set, &ReliefParams::default()).unwrap().ranking;
    let top = &ranking[..3];
    let (a, b) = (train_set.select_columns(top).unwrap(), test_set.select_columns(top).unwrap());
    let spec = NetworkSpec {
        input_width: 3,
        hidden_layers: 2,
        hidden_units: 32,
        dropout_rate: 0.0,
        use_batch_norm: false,
        activation: Activation::Relu,
        seed,
    };
    let cfg = TrainConfig { learning_rate: 0.05, lr_decay: 0.001, epochs: 200, folds: 2, momentum: 0.9, batch_size: None, seed };
    let model = train(&a, &spec, &cfg).unwrap();
    evaluate_cindex(&model, &b).unwrap() - c_cox
}

fn c4_deep_vs_linear() -> Outcome {
    let nonlinear = HazardSpec {
        intercept: -1.0,
        terms: vec![
            HazardTerm::Sin { covariate: "z1".into(), frequency: 3.0, coef: 1.0 },
            HazardTerm::Square { covariate: "z2".into(), coef: 1.0 },
        ],
        standardize: false,
    };
    let linear = HazardSpec::linear(-1.0, &[("z1", 1.0), ("z2", -0.5)]);
    let gaps: Vec<f64> = (0..5).map(|s| deep_vs_linear(&nonlinear, s)).collect();
    let lin: Vec<f64> = (0..5).map(|s| deep_vs_linear(&linear, s)).collect();
    let wins = gaps.iter().filter(|g| **g >= DEEP_GAP).count();
    let lin_ok = lin.iter().all(|g| g.abs() <= LINEAR_GAP_TOL);
    let fmt = |v: &[f64]| v.iter().map(|g| format!("{g:+.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        wins >= DEEP_SEEDS_REQUIRED && lin_ok,
        format!("nonlinear gaps [{}] ({wins}/5 >= {DEEP_GAP}); linear gaps [{}] (all within ±{LINEAR_GAP_TOL}: {lin_ok})", fmt(&gaps), fmt(&lin)),
    )
}

// ---------------------------------------------------------------- 5

const AXIOM_TOL: f64 = 1e-10;
const MC_SE_MULTIPLE: f64 = 3.0;
const MC_TRIALS: usize = 100;
const MC_REQUIRED: usize = 95;
const MC_PAIRS: usize = 200;

fn net8(seed: u64) -> DeepCoxModel {
    DeepCoxModel::new(NetworkSpec {
        input_width: 8,
        hidden_layers: 2,
        hidden_units: 12,
        dropout_rate: 0.0,
        use_batch_norm: false,
        activation: Activation::Tanh,
        seed,
    })
    .unwrap()
}

fn value<M: RiskModel>(m: &M, z: &[f64]) -> f64 {
    m.evaluate(&Batch::new(1, z.len(), z.to_vec()).unwrap()).unwrap()[0]
}

fn c5_shapley() -> Outcome {
    let mut r = rng(55);
    let mut point = |n: usize| -> Vec<f64> { (0..n).map(|_| r.random_range(-1.5..1.5)).collect() };
    let mut worst: f64 = 0.0;
    for s in 0..10u64 {
        let g = net8(s);
        let (z, b) = (point(8), point(8));
        // efficiency
        let phi = shap_exact(&g, &z, &b).unwrap();
        worst = worst.max((phi.iter().sum::<f64>() - (value(&g, &z) - value(&g, &b))).abs());
        // symmetry: inputs 0 and 1 enter through their sum and take equal values
        let inner = DeepCoxModel::new(NetworkSpec { input_width: 7, ..net8(s).spec }).unwrap();
        let folded = FnRisk {
            width: 8,
            f: move |x: &[f64]| {
                let mut v = vec![x[0] + x[1]];
                v.extend_from_slice(&x[2..]);
                value(&inner, &v)
            },
        };
        let mut zs = z.clone();
        zs[1] = zs[0];
        let mut bs = b.clone();
        bs[1] = bs[0];
        let p = shap_exact(&folded, &zs, &bs).unwrap();
        worst = worst.max((p[0] - p[1]).abs());
        // dummy: input 7 is ignored
        let inner = DeepCoxModel::new(NetworkSpec { input_width: 7, ..net8(s + 50).spec }).unwrap();
        let dummy = FnRisk { width: 8, f: move |x: &[f64]| value(&inner, &x[..7]) };
        worst = worst.max(shap_exact(&dummy, &z, &b).unwrap()[7].abs());
        // linearity
        let (g1, g2) = (net8(s + 100), net8(s + 200));
        let (p1, p2) = (shap_exact(&g1, &z, &b).unwrap(), shap_exact(&g2, &z, &b).unwrap());
        let sum = FnRisk { width: 8, f: move |x: &[f64]| value(&g1, x) + value(&g2, x) };
        let ps = shap_exact(&sum, &z, &b).unwrap();
        for i in 0..8 {
            worst = worst.max((ps[i] - p1[i] - p2[i]).abs());
        }
    }
    let mut agree = 0;
    for t in 0..MC_TRIALS as u64 {
        let g = net8(5000 + t);
        let (z, b) = (point(8), point(8));
        let exact = shap_exact(&g, &z, &b).unwrap();
        let est = shap_sampled(&g, &z, &b, MC_PAIRS, 7000 + t).unwrap();
        let ok = (0..8).all(|i| (est.phi[i] - exact[i]).abs() <= MC_SE_MULTIPLE * est.std_error[i] + 1e-12);
        agree += usize::from(ok);
    }
    outcome(
        worst <= AXIOM_TOL && agree >= MC_REQUIRED,
        format!(
            "axioms max violation {worst:.2e} (tol {AXIOM_TOL:e}); sampled within {MC_SE_MULTIPLE} SE on all features in {agree}/{MC_TRIALS} trials (need {MC_REQUIRED})"
        ),
    )
}

// ---------------------------------------------------------------- 6

const DECEL_TOL: f64 = 5e-4;
const STOP_TOL: f64 = 1e-9;
const ENERGY_TOL: f64 = 1e-9;

fn c6_braking() -> Outcome {
    let s1 = braking_profile(1, kmh_to_ms(40.0), 40.0, DEFAULT_A_MAX).unwrap();
    let a1 = s1.stages[0].decel;
    let s1_ok = (a1 - 1.543).abs() <= DECEL_TOL && (s1.stop_distance() - 40.0).abs() <= STOP_TOL && !s1.is_clamped();
    let s3: Vec<_> = (1..=3).map(|l| braking_profile(l, kmh_to_ms(50.0), 20.0, DEFAULT_A_MAX).unwrap()).collect();
    let all_at_max = s3.iter().all(|p| p.all_stages().all(|s| s.decel == DEFAULT_A_MAX));
    let same = s3.iter().all(|p| (p.stop_distance() - s3[0].stop_distance()).abs() <= STOP_TOL)
        && (0..=50).all(|k| {
            let x = s3[0].stop_distance() * k as f64 / 50.0;
            let v0 = s3[0].velocity_at(x).unwrap();
            s3.iter().all(|p| (p.velocity_at(x).unwrap() - v0).abs() <= 1e-9)
        });
    let mut r = rng(66);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let v0 = r.random_range(1.0..25.0);
        let d = r.random_range(5.0..80.0);
        for level in 1..=3 {
            let p = braking_profile(level, v0, d, DEFAULT_A_MAX).unwrap();
            let work: f64 = p.all_stages().map(|s| 2.0 * s.decel * s.length()).sum();
            worst = worst.max((work - v0 * v0).abs() / (v0 * v0));
        }
    }
    outcome(
        s1_ok && all_at_max && same && worst <= ENERGY_TOL,
        format!(
            "scenario 1 L1 decel {a1:.4} stop {:.12}; scenario 3 all stages at a_max: {all_at_max}, identical profiles: {same} (stop {:.3} m); energy rel. error {worst:.1e}",
            s1.stop_distance(),
            s3[0].stop_distance()
        ),
    )
}

// ---------------------------------------------------------------- 7

const WEIGHT_TOL: f64 = 0.02;
const RANDOM_DESIGNS: usize = 1000;

fn c7_design() -> Outcome {
    let toy = FactorCatalog::new(vec![Factor::categorical("x", &["off", "on"])]).unwrap();
    let c = 1e3;
    // grid oracle at 0.001
    let (mut best_w, mut best_v) = (0.0, f64::NEG_INFINITY);
    for k in 1..1000 {
        let w = k as f64 / 1000.0;
        let v = design_objective(&toy, &[0, 1], &[w, 1.0 - w], &[0.0, 0.0], c).unwrap();
        if v > best_v {
            (best_w, best_v) = (w, v);
        }
    }
    let cfg = AnnealConfig { censor_time: c, iterations: 3000, ..AnnealConfig::new(2, 17) };
    let d = anneal(&toy, &cfg).unwrap().design;
    let w_off = d.weights[d.scenarios.iter().position(|&s| s == 0).unwrap()];
    let toy_ok = (w_off - best_w).abs() <= WEIGHT_TOL;

    let catalog = FactorCatalog::crossing_scenarios();
    let mut beaten = 0;
    let mut margins = Vec::new();
    for seed in 0..5u64 {
        let cfg = AnnealConfig::new(90, seed);
        let ours = anneal(&catalog, &cfg).unwrap().design.objective;
        let beta = vec![0.0; catalog.dimension()];
        let mut r = rng(10_000 + seed);
        let best_random = (0..RANDOM_DESIGNS)
            .map(|_| random_design(&catalog, 90, &beta, cfg.censor_time, &mut r).unwrap().objective)
            .fold(f64::NEG_INFINITY, f64::max);
        beaten += usize::from(ours > best_random);
        margins.push(ours - best_random);
    }
    outcome(
        toy_ok && beaten == 5,
        format!(
            "toy weight {w_off:.4} vs grid {best_w} (tol {WEIGHT_TOL}); full catalog m=90 beats best of {RANDOM_DESIGNS} random designs in {beaten}/5 seeds (log-det margins {})",
            margins.iter().map(|m| format!("{m:.2}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

// ---------------------------------------------------------------- 8

fn cindex_by_pairs(t: &[f64], e: &[bool], r: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..t.len() {
        for j in 0..t.len() {
            if e[i] && t[i] < t[j] {
                den += 1.0;
                num += if r[i] > r[j] {
                    1.0
                } else if r[i] == r[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

fn c8_cindex() -> Outcome {
    let mut r = rng(88);
    let (mut exact, mut mono, mut anti) = (0, 0, 0);
    for _ in 0..50 {
        let t: Vec<f64> = (0..20).map(|_| (r.random_range(1..30) as f64) * 0.5).collect();
        let mut e: Vec<bool> = (0..20).map(|_| r.random::<f64>() < 0.7).collect();
        e[0] = true;
        // a few tied risks on purpose
        let risk: Vec<f64> = (0..20).map(|_| (r.random_range(-20..20) as f64) * 0.1).collect();
        let c = concordance_index(&t, &e, &risk).unwrap();
        exact += usize::from(c == cindex_by_pairs(&t, &e, &risk));
        let warped: Vec<f64> = risk.iter().map(|x| x.exp() * 3.0 + x.powi(3)).collect();
        mono += usize::from(concordance_index(&t, &e, &warped).unwrap() == c);
        let neg: Vec<f64> = risk.iter().map(|x| -x).collect();
        anti += usize::from((concordance_index(&t, &e, &neg).unwrap() - (1.0 - c)).abs() < 1e-12);
    }
    outcome(
        exact == 50 && mono == 50 && anti == 50,
        format!("pair oracle {exact}/50, monotone invariance {mono}/50, anti-symmetry {anti}/50"),
    )
}

// ---------------------------------------------------------------- 9

const RELIEF_TOL: f64 = 1e-12;

/// RReliefF weights from a full distance matrix, straight from the probability form.
fn relief_by_enumeration(rows: &[(Vec<f64>, f64)], k: usize, sigma: f64) -> Vec<f64> {
    let n = rows.len();
    let p = rows[0].0.len();
    let col = |j: usize| rows.iter().map(move |r| r.0[j]);
    let mean: Vec<f64> = (0..p).map(|j| col(j).sum::<f64>() / n as f64).collect();
    let sd: Vec<f64> = (0..p).map(|j| (col(j).map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n as f64).sqrt()).collect();
    let range: Vec<f64> = (0..p).map(|j| col(j).fold(f64::MIN, f64::max) - col(j).fold(f64::MAX, f64::min)).collect();
    let t_range = rows.iter().map(|r| r.1).fold(f64::MIN, f64::max) - rows.iter().map(|r| r.1).fold(f64::MAX, f64::min);
    let infl: Vec<f64> = (1..=k).map(|r| (-(r as f64 / sigma).powi(2)).exp()).collect();
    let total: f64 = infl.iter().sum();
    let (mut ndc, mut nda, mut ndcda) = (0.0, vec![0.0; p], vec![0.0; p]);
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| ((0..p).map(|f| (rows[i].0[f] - rows[j].0[f]).abs() / sd[f]).sum(), j))
            .collect();
        others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for (rank, &(_, j)) in others.iter().take(k).enumerate() {
            let w = infl[rank] / total;
            let dc = (rows[i].1 - rows[j].1).abs() / t_range;
            ndc += w * dc;
            for f in 0..p {
                let da = (rows[i].0[f] - rows[j].0[f]).abs() / range[f];
                nda[f] += w * da;
                ndcda[f] += w * dc * da;
            }
        }
    }
    (0..p).map(|f| ndcda[f] / ndc - (nda[f] - ndcda[f]) / (n as f64 - ndc)).collect()
}

fn c9_relief() -> Outcome {
    let mut top = 0;
    for seed in 0..20u64 {
        let mut r = rng(900 + seed);
        let rows: Vec<_> = (0..150)
            .map(|_| {
                let t: f64 = r.random_range(0.5..20.0);
                let mut z = vec![t];
                z.extend((0..4).map(|_| r.random_range(-1.0..1.0)));
                (z, t, true)
            })
            .collect();
        let w = rrelieff(&continuous(&rows), &ReliefParams::default()).unwrap();
        top += usize::from(w.ranking[0] == 0);
    }
    let mut r = rng(99);
    let rows: Vec<_> = (0..80)
        .map(|_| {
            let a: f64 = r.random_range(0.0..5.0);
            let b: f64 = r.random_range(0.0..5.0);
            (vec![a, b, a], a + r.random_range(0.0..2.0), true)
        })
        .collect();
    let w = rrelieff(&continuous(&rows), &ReliefParams::default()).unwrap();
    let dup = (w.weights[0] - w.weights[2]).abs();
    let four = vec![(vec![0.0, 1.0], 1.0), (vec![0.3, 0.2], 2.5), (vec![1.1, 0.7], 4.0), (vec![2.6, 0.0], 4.5)];
    let ds = continuous(&four.iter().map(|(z, t)| (z.clone(), *t, true)).collect::<Vec<_>>());
    let mut enum_err: f64 = 0.0;
    for k in 1..=3 {
        for sigma in [0.5, 2.0, 20.0] {
            let ours = rrelieff(&ds, &ReliefParams { k, sigma, ..Default::default() }).unwrap();
            for (a, b) in ours.weights.iter().zip(relief_by_enumeration(&four, k, sigma)) {
                enum_err = enum_err.max((a - b).abs());
            }
        }
    }
    outcome(
        top == 20 && dup <= RELIEF_TOL && enum_err <= RELIEF_TOL,
        format!("target copy ranked first {top}/20; duplicate gap {dup:.1e}; enumeration max error {enum_err:.1e} (tol {RELIEF_TOL:e})"),
    )
}

// ---------------------------------------------------------------- 10

fn pipeline_config() -> RunConfig {
    RunConfig::default()
        .with_overrides(&[
            "seed=42".into(),
            // 10 participants x 10 scenarios x 2 repeats = 200 rows
            "simulate.participants=10".into(),
            "simulate.scenarios_per_participant=10".into(),
            "simulate.observation.dangerous_cross_probability=0".into(),
        ])
        .unwrap()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn c10_determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let ctx = Context::new(pipeline_config(), d.path()).unwrap();
        commands::simulate(&ctx).unwrap();
        commands::train_models(&ctx).unwrap();
        commands::explain(&ctx).unwrap();
    }
    let (a, b) = (snapshot(dirs[0].path()), snapshot(dirs[1].path()));
    let identical = a == b;
    let rows = fs::read_to_string(dirs[0].path().join("cohort.csv")).unwrap().lines().count() - 1;

    let full = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let ctx = Context::new(pipeline_config(), full.path()).unwrap();
    commands::simulate(&ctx).unwrap();
    commands::fit(&ctx).unwrap();
    commands::rank(&ctx).unwrap();
    commands::train_models(&ctx).unwrap();
    commands::explain(&ctx).unwrap();
    commands::design(&ctx).unwrap();
    commands::evaluate(&ctx).unwrap();
    let elapsed = start.elapsed();
    outcome(
        identical && rows == 200 && elapsed < PIPELINE_BUDGET,
        format!(
            "{} output files byte-identical across two runs: {identical}; {rows} rows; full seven-command pipeline {:.1} s (budget {} s)",
            a.len(),
            elapsed.as_secs_f64(),
            PIPELINE_BUDGET.as_secs()
        ),
    )
}

const PIPELINE_BUDGET: Duration = Duration::from_secs(60);

// ---------------------------------------------------------------- harness

#[test]
fn acceptance() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, Duration); 10] = [
        ("1 hazard-ratio consistency", c1_hazard_ratios, Duration::from_secs(1)),
        ("2 gradient oracle", c2_gradients, Duration::from_secs(10)),
        ("3 CPH parameter recovery", c3_cox_recovery, Duration::from_secs(30)),
        ("4 deep-vs-linear direction", c4_deep_vs_linear, Duration::from_secs(600)),
        ("5 Shapley axioms", c5_shapley, Duration::from_secs(120)),
        ("6 braking fidelity", c6_braking, Duration::from_secs(1)),
        ("7 D-optimal oracle", c7_design, Duration::from_secs(120)),
        ("8 C-index properties", c8_cindex, Duration::from_secs(10)),
        ("9 RReliefF sanity", c9_relief, Duration::from_secs(30)),
        ("10 end-to-end determinism", c10_determinism, Duration::from_secs(120)),
    ];
    let mut failed = Vec::new();
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= budget;
        println!(
            "{} criterion {name}: {} [{:.2} s of {} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !pass {
            failed.push(name);
        }
    }
    // the published table rounds coefficients and ratios independently, so four rows
    // cannot meet ±0.005; anything else failing is a regression
    assert_eq!(failed, vec!["1 hazard-ratio consistency"], "unexpected acceptance failures");
    assert_eq!(misses(), HR_KNOWN_MISSES);
}
