mod common;

use common::rng;
use pedwait_core::braking::{braking_profile, kmh_to_ms, DEFAULT_A_MAX};
use rand::Rng;

const ENERGY_TOL: f64 = 1e-9;

#[test]
fn energy_is_consistent_over_all_stages() {
    let mut r = rng(1);
    for _ in 0..100 {
        let v0 = r.random_range(1.0..20.0);
        let d = r.random_range(5.0..80.0);
        for level in 1..=3 {
            let p = braking_profile(level, v0, d, DEFAULT_A_MAX).unwrap();
            let work: f64 = p.all_stages().map(|s| 2.0 * s.decel * s.length()).sum();
            assert!((work - v0 * v0).abs() <= ENERGY_TOL * v0 * v0, "level {level} v0 {v0} d {d}");
            if !p.is_clamped() {
                assert!((p.stop_distance() - d).abs() < 1e-12);
            }
            assert!(p.all_stages().all(|s| s.decel <= DEFAULT_A_MAX));
        }
    }
}

#[test]
fn speed_is_monotone_and_continuous() {
    let mut r = rng(2);
    for _ in 0..100 {
        let v0 = r.random_range(1.0..20.0);
        let d = r.random_range(5.0..80.0);
        for level in 1..=3 {
            let p = braking_profile(level, v0, d, DEFAULT_A_MAX).unwrap();
            let stop = p.stop_distance();
            let mut prev = f64::INFINITY;
            for k in 0..=200 {
                let v = p.velocity_at(stop * k as f64 / 200.0).unwrap();
                assert!(v <= prev + 1e-12);
                prev = v;
            }
            for s in p.stages.windows(2) {
                let left = s[0].end_speed;
                let right = s[1].start_speed;
                assert!((left - right).abs() < 1e-9);
                assert!((p.velocity_at(s[0].end_distance).unwrap() - left).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn fully_clamped_levels_coincide() {
    let mut r = rng(3);
    for _ in 0..50 {
        let d = r.random_range(5.0..30.0);
        // required level-1 rate above 4/3 a_max clamps every stage of every level
        let v0 = (2.0 * d * DEFAULT_A_MAX * r.random_range(1.4..3.0)).sqrt();
        let stops: Vec<f64> = (1..=3).map(|l| braking_profile(l, v0, d, DEFAULT_A_MAX).unwrap().stop_distance()).collect();
        assert!(stops.iter().all(|s| (s - stops[0]).abs() < 1e-9));
    }
}

#[test]
fn small_initial_speed_limit() {
    let p = braking_profile(3, 1e-9, 30.0, DEFAULT_A_MAX).unwrap();
    assert!(p.stages.iter().all(|s| s.decel < 1e-18));
    assert_eq!(p.stop_distance(), 30.0);
}

#[test]
fn velocity_at_origin_is_initial_speed() {
    let p = braking_profile(2, kmh_to_ms(40.0), 40.0, DEFAULT_A_MAX).unwrap();
    assert_eq!(p.velocity_at(0.0).unwrap(), kmh_to_ms(40.0));
    assert!(p.velocity_at(-1.0).is_err());
}
