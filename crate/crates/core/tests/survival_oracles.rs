mod common;

use common::{cindex_by_pairs, continuous, lpl_by_definition, random_dataset};
use pedwait_core::survival::{
    breslow_baseline, concordance_index, cox_derivatives, cox_summary, expand_intervals, fit_cox, interval_count,
    kaplan_meier, linear_predictor, log_partial_likelihood, two_sided_p, FitOptions,
};
use pedwait_core::Error;
use proptest::prelude::*;

#[test]
fn partial_likelihood_matches_definition() {
    for seed in 0..20 {
        let ds = random_dataset(25, 3, seed);
        let beta = [0.4, -0.7, 0.2];
        let eta = linear_predictor(&ds, &beta).unwrap();
        let oracle = lpl_by_definition(&eta, &ds.durations(), &ds.events());
        let ours = log_partial_likelihood(&ds, &beta).unwrap();
        assert!((ours - oracle).abs() < 1e-10 * oracle.abs().max(1.0), "seed {seed}: {ours} vs {oracle}");
    }
}

#[test]
fn four_instance_hand_enumeration() {
    // durations 1, 2(censored), 2, 3; risk sets {all}, {2,3,4}, {4}
    let ds = continuous(&[
        (vec![1.0], 1.0, true),
        (vec![0.0], 2.0, false),
        (vec![2.0], 2.0, true),
        (vec![-1.0], 3.0, true),
    ]);
    let b: f64 = 0.5;
    let e = |x: f64| (b * x).exp();
    let expected = (b * 1.0 - (e(1.0) + e(0.0) + e(2.0) + e(-1.0)).ln())
        + (b * 2.0 - (e(0.0) + e(2.0) + e(-1.0)).ln())
        + (b * -1.0 - e(-1.0).ln());
    assert!((log_partial_likelihood(&ds, &[b]).unwrap() - expected).abs() < 1e-14);
}

#[test]
fn score_and_information_match_finite_differences() {
    let h = 1e-5;
    for seed in 0..10 {
        let ds = random_dataset(40, 3, 100 + seed);
        let beta = vec![0.3, -0.2, 0.5];
        let d = cox_derivatives(&ds, &beta).unwrap();
        for a in 0..3 {
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[a] += h;
            dn[a] -= h;
            let fd = (log_partial_likelihood(&ds, &up).unwrap() - log_partial_likelihood(&ds, &dn).unwrap()) / (2.0 * h);
            assert!((fd - d.score[a]).abs() < 1e-6 * d.score[a].abs().max(1.0), "score {a}");
            let su = cox_derivatives(&ds, &up).unwrap().score;
            let sd = cox_derivatives(&ds, &dn).unwrap().score;
            for c in 0..3 {
                let fd_info = -(su[c] - sd[c]) / (2.0 * h);
                let info = d.information.get(a, c);
                assert!((fd_info - info).abs() < 1e-3 * info.abs().max(1e-3), "information ({a},{c}): {fd_info} vs {info}");
            }
        }
    }
}

#[test]
fn fitted_score_vanishes_and_summary_is_consistent() {
    let ds = random_dataset(200, 2, 7);
    let model = fit_cox(&ds, &FitOptions::default()).unwrap();
    assert!(model.converged);
    let d = cox_derivatives(&ds, &model.beta).unwrap();
    assert!(d.score.iter().all(|s| s.abs() < 1e-8));
    let summary = cox_summary(&model, &ds).unwrap();
    for row in &summary.rows {
        assert!((row.hazard_ratio - row.coefficient.exp()).abs() < 1e-15);
        assert!((row.z - row.coefficient / row.standard_error).abs() < 1e-12);
    }
}

#[test]
fn separation_is_reported() {
    // larger covariate always fails first: likelihood increases without bound
    let ds = continuous(&[(vec![3.0], 1.0, true), (vec![2.0], 2.0, true), (vec![1.0], 3.0, true), (vec![0.0], 4.0, true)]);
    assert!(matches!(fit_cox(&ds, &FitOptions::default()), Err(Error::Separation { .. })));
}

#[test]
fn wald_p_values() {
    assert!((two_sided_p(1.959963984540054) - 0.05).abs() < 1e-12);
    assert_eq!(two_sided_p(0.0), 1.0);
}

#[test]
fn kaplan_meier_hand_values() {
    // events at 1, 3, 3; censored at 2, 4
    let ds = continuous(&[
        (vec![0.0], 1.0, true),
        (vec![0.0], 2.0, false),
        (vec![0.0], 3.0, true),
        (vec![0.0], 3.0, true),
        (vec![0.0], 4.0, false),
    ]);
    let km = kaplan_meier(&ds).unwrap();
    assert_eq!(km.at(0.5), 1.0);
    assert!((km.at(1.0) - 0.8).abs() < 1e-15);
    assert!((km.at(2.5) - 0.8).abs() < 1e-15);
    assert!((km.at(3.0) - 0.8 * (1.0 / 3.0)).abs() < 1e-15);
}

#[test]
fn breslow_at_zero_beta_is_nelson_aalen() {
    let ds = random_dataset(30, 1, 3);
    let model = pedwait_core::survival::CoxModel {
        covariate_names: ds.column_names(),
        beta: vec![0.0],
        log_likelihood: 0.0,
        iterations: 0,
        converged: true,
    };
    let curve = breslow_baseline(&model, &ds).unwrap();
    let t = ds.durations();
    let e = ds.events();
    for (&time, &s) in curve.times.iter().zip(&curve.survival) {
        let mut h = 0.0;
        let mut times: Vec<f64> = t.iter().copied().filter(|&u| u <= time).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        for u in times {
            let d = (0..t.len()).filter(|&i| t[i] == u && e[i]).count() as f64;
            let r = t.iter().filter(|&&v| v >= u).count() as f64;
            h += d / r;
        }
        assert!((s - (-h).exp()).abs() < 1e-12);
    }
}

#[test]
fn interval_expansion() {
    assert_eq!(interval_count(0.3, 0.1), 3);
    assert_eq!(interval_count(0.31, 0.1), 4);
    assert_eq!(interval_count(0.0, 0.1), 1);
    let ds = continuous(&[(vec![1.0], 0.25, true), (vec![2.0], 0.1, false)]);
    let (rows, labels) = expand_intervals(&ds, 0.1);
    assert_eq!(rows.len(), 4);
    assert_eq!(labels, vec![false, false, true, false]);
    assert!((rows[2][1] - 0.2).abs() < 1e-15);
}

fn survival_data() -> impl Strategy<Value = (Vec<f64>, Vec<bool>, Vec<f64>)> {
    (2usize..20).prop_flat_map(|n| {
        (
            prop::collection::vec(1u8..8, n).prop_map(|v| v.into_iter().map(f64::from).collect()),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(-3i8..3, n).prop_map(|v| v.into_iter().map(|x| f64::from(x) * 0.5).collect()),
        )
    })
}

proptest! {
    #[test]
    fn cindex_matches_pair_enumeration((t, e, r) in survival_data()) {
        match (concordance_index(&t, &e, &r), cindex_by_pairs(&t, &e, &r)) {
            (Ok(c), Some(o)) => prop_assert_eq!(c, o),
            (Err(Error::NoComparablePairs), None) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn cindex_invariant_under_monotone_transform((t, e, r) in survival_data()) {
        if let Ok(c) = concordance_index(&t, &e, &r) {
            let g: Vec<f64> = r.iter().map(|x| (2.0 * x).exp() + 3.0).collect();
            prop_assert_eq!(concordance_index(&t, &e, &g).unwrap(), c);
        }
    }

    #[test]
    fn cindex_antisymmetric((t, e, r) in survival_data()) {
        if let Ok(c) = concordance_index(&t, &e, &r) {
            let neg: Vec<f64> = r.iter().map(|x| -x).collect();
            prop_assert!((concordance_index(&t, &e, &neg).unwrap() - (1.0 - c)).abs() < 1e-15);
        }
    }

    #[test]
    fn partial_likelihood_shift_invariant(seed in 0u64..1000, shift in -5.0f64..5.0) {
        let ds = random_dataset(12, 2, seed);
        let eta = linear_predictor(&ds, &[0.3, -0.4]).unwrap();
        let shifted: Vec<f64> = eta.iter().map(|x| x + shift).collect();
        let a = pedwait_core::survival::log_partial_likelihood_of(&eta, &ds.durations(), &ds.events()).unwrap();
        let b = pedwait_core::survival::log_partial_likelihood_of(&shifted, &ds.durations(), &ds.events()).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }
}
