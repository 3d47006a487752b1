//! Multi-stage constant-deceleration braking profiles.
//!
//! A level-`L` profile splits the distance `d` to the barrier into `L` equal stages.
//! Stage `k` aims to reach `v0 (L-k)/L` at distance `d k/L`. Each stage's
//! deceleration is clamped at `a_max` on its own; a clamped stage ends faster than
//! planned and the next stage recomputes its deceleration from the achieved speed.
//! If the vehicle still moves at `d`, it keeps braking at `a_max` past the barrier.

use alloc::vec::Vec;

use libm::sqrt;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_A_MAX: f64 = 3.0;

pub fn kmh_to_ms(kmh: f64) -> f64 {
    kmh / 3.6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    /// Deceleration magnitude, m/s².
    pub decel: f64,
    pub start_distance: f64,
    pub end_distance: f64,
    pub start_speed: f64,
    pub end_speed: f64,
    pub clamped: bool,
}

impl Stage {
    fn speed_at(&self, x: f64) -> f64 {
        sqrt((self.start_speed * self.start_speed - 2.0 * self.decel * (x - self.start_distance)).max(0.0))
    }

    pub fn length(&self) -> f64 {
        self.end_distance - self.start_distance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrakingProfile {
    pub level: u8,
    pub v0: f64,
    pub d: f64,
    pub a_max: f64,
    /// Exactly `level` stages covering `[0, d]`.
    pub stages: Vec<Stage>,
    /// Braking at `a_max` beyond the barrier when the vehicle could not stop in time.
    pub overshoot: Option<Stage>,
}

impl BrakingProfile {
    pub fn stop_distance(&self) -> f64 {
        match &self.overshoot {
            Some(s) => s.end_distance,
            None => self.d,
        }
    }

    pub fn is_clamped(&self) -> bool {
        self.stages.iter().any(|s| s.clamped)
    }

    pub fn all_stages(&self) -> impl Iterator<Item = &Stage> {
        self.stages.iter().chain(self.overshoot.iter())
    }

    /// Speed at distance `x` from the start of braking.
    pub fn velocity_at(&self, x: f64) -> Result<f64> {
        let stop = self.stop_distance();
        if !(x >= 0.0) || x > stop * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(alloc::format!("distance {} outside [0, {}]", x, stop)));
        }
        let stage = self.all_stages().find(|s| x <= s.end_distance).unwrap_or_else(|| self.all_stages().last().unwrap());
        Ok(stage.speed_at(x))
    }

    /// `(x, v)` pairs every `step` metres from 0 to the stop point (always included).
    pub fn samples(&self, step: f64) -> Result<Vec<(f64, f64)>> {
        if !(step > 0.0) {
            return Err(Error::InvalidInput("sample step must be positive".into()));
        }
        let stop = self.stop_distance();
        let n = libm::floor(stop / step) as usize;
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(n + 2);
        for i in 0..=n {
            let x = i as f64 * step;
            if x < stop {
                out.push((x, self.velocity_at(x)?));
            }
        }
        out.push((stop, self.velocity_at(stop)?));
        Ok(out)
    }
}

pub fn braking_profile(level: u8, v0: f64, d: f64, a_max: f64) -> Result<BrakingProfile> {
    if !(1..=3).contains(&level) {
        return Err(Error::InvalidInput(alloc::format!("braking level {} not in 1..=3", level)));
    }
    if !(v0 > 0.0 && d > 0.0 && a_max > 0.0) || !v0.is_finite() || !d.is_finite() || !a_max.is_finite() {
        return Err(Error::InvalidInput("speed, distance and a_max must be positive and finite".into()));
    }
    let l = level as usize;
    let mut stages = Vec::with_capacity(l);
    let mut speed = v0;
    for k in 1..=l {
        let start = d * (k - 1) as f64 / l as f64;
        let end = if k == l { d } else { d * k as f64 / l as f64 };
        let target = v0 * (l - k) as f64 / l as f64;
        let len = end - start;
        let required = (speed * speed - target * target) / (2.0 * len);
        let (decel, end_speed, clamped) = if required > a_max {
            (a_max, sqrt((speed * speed - 2.0 * a_max * len).max(0.0)), true)
        } else {
            (required, target, false)
        };
        stages.push(Stage { decel, start_distance: start, end_distance: end, start_speed: speed, end_speed, clamped });
        speed = end_speed;
    }
    let overshoot = (speed > 0.0).then(|| Stage {
        decel: a_max,
        start_distance: d,
        end_distance: d + speed * speed / (2.0 * a_max),
        start_speed: speed,
        end_speed: 0.0,
        clamped: true,
    });
    Ok(BrakingProfile { level, v0, d, a_max, stages, overshoot })
}
