//! Duty-cycle plateau torque and derating detection.

use super::log::TimeSeriesLog;
use crate::error::{Error, Result};

pub const DEFAULT_SLOPE_LIMIT_C_PER_S: f64 = 0.5;
pub const DEFAULT_PLATEAU_WINDOW_S: f64 = 10.0;
/// End-of-test steady-state criterion.
pub const DEFAULT_STEADY_SLOPE_C_PER_MIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauResult {
    /// Nm
    pub torque_cont: f64,
    /// s from log start; `None` if the command is never reduced.
    pub time_to_derate: Option<f64>,
    /// °C
    pub final_temp_motor: f64,
    /// °C
    pub final_temp_gear: f64,
    /// Largest sensor slope over the final window, °C/s.
    pub final_slope_c_per_s: f64,
}

impl PlateauResult {
    /// End-of-test steady state: final-window slope below `limit_c_per_min`.
    pub fn is_steady(&self, limit_c_per_min: f64) -> bool {
        self.final_slope_c_per_s * 60.0 < limit_c_per_min
    }
}

/// Prefix sums for O(1) windowed means and least-squares slopes.
struct Prefix {
    s: Vec<f64>,
}

impl Prefix {
    fn new(x: impl Iterator<Item = f64>) -> Self {
        let mut s = vec![0.0];
        let mut acc = 0.0;
        for v in x {
            acc += v;
            s.push(acc);
        }
        Prefix { s }
    }

    /// Sum over `[i, j)`.
    fn sum(&self, i: usize, j: usize) -> f64 {
        self.s[j] - self.s[i]
    }
}

struct SlopeScan {
    t: Prefix,
    tt: Prefix,
    y: Prefix,
    ty: Prefix,
}

impl SlopeScan {
    fn new(t: &[f64], y: &[f64]) -> Self {
        // Centre both axes so prefix sums stay small.
        let tc = t[t.len() / 2];
        let yc = y.iter().sum::<f64>() / y.len() as f64;
        let ts: Vec<f64> = t.iter().map(|v| v - tc).collect();
        let ys: Vec<f64> = y.iter().map(|v| v - yc).collect();
        SlopeScan {
            t: Prefix::new(ts.iter().copied()),
            tt: Prefix::new(ts.iter().map(|v| v * v)),
            y: Prefix::new(ys.iter().copied()),
            ty: Prefix::new(ts.iter().zip(&ys).map(|(a, b)| a * b)),
        }
    }

    fn slope(&self, i: usize, j: usize) -> f64 {
        let n = (j - i) as f64;
        let st = self.t.sum(i, j);
        let num = n * self.ty.sum(i, j) - st * self.y.sum(i, j);
        let den = n * self.tt.sum(i, j) - st * st;
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }
}

/// Least-squares slope of `y` against `t`, computed directly.
pub fn ls_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let num: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let den: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Number of samples spanning `window_s` at the log's sample rate.
pub fn window_samples(log: &TimeSeriesLog, window_s: f64) -> usize {
    (window_s * log.sample_rate + 1e-9).floor() as usize + 1
}

/// Largest mean torque over any window whose temperature slopes (both
/// sensors) stay below `slope_limit`; derating is read from the command
/// channel.
pub fn detect_plateau(log: &TimeSeriesLog, slope_limit: f64, plateau_window: f64) -> Result<PlateauResult> {
    log.validate()?;
    if !(slope_limit > 0.0) {
        return Err(Error::InvalidParameter { name: "slope_limit".into(), value: slope_limit, rule: "must be positive".into() });
    }
    if !(plateau_window > 0.0) {
        return Err(Error::InvalidParameter { name: "plateau_window".into(), value: plateau_window, rule: "must be positive".into() });
    }
    let span = log.span();
    let w = window_samples(log, plateau_window);
    if plateau_window > span + 1e-9 || w > log.len() {
        return Err(Error::WindowTooLong { window_s: plateau_window, span_s: span });
    }
    let n = log.len();
    let tq = Prefix::new(log.torque.iter().copied());
    let motor = SlopeScan::new(&log.t, &log.temp_motor);
    let gear = SlopeScan::new(&log.t, &log.temp_gear);
    let mut torque_cont: f64 = 0.0;
    for i in 0..=n - w {
        let j = i + w;
        if motor.slope(i, j) < slope_limit && gear.slope(i, j) < slope_limit {
            torque_cont = torque_cont.max(tq.sum(i, j) / w as f64);
        }
    }
    let final_slope = motor.slope(n - w, n).max(gear.slope(n - w, n));
    Ok(PlateauResult {
        torque_cont,
        time_to_derate: derate_time(log),
        final_temp_motor: log.temp_motor[n - 1],
        final_temp_gear: log.temp_gear[n - 1],
        final_slope_c_per_s: final_slope,
    })
}

/// First active sample whose command magnitude falls below the level of the
/// first active run. Commands within 1e-9 of the peak magnitude count as idle.
pub fn derate_time(log: &TimeSeriesLog) -> Option<f64> {
    let peak = log.torque_cmd.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if peak == 0.0 {
        return None;
    }
    let idle = 1e-9 * peak;
    let first = log.torque_cmd.iter().position(|c| c.abs() > idle)?;
    let run_end = log.torque_cmd[first..].iter().position(|c| c.abs() <= idle).map_or(log.len(), |k| first + k);
    let level = log.torque_cmd[first..run_end].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let tol = 1e-9 * level;
    let mut seen_level = false;
    for k in first..log.len() {
        let c = log.torque_cmd[k].abs();
        if c >= level - tol {
            seen_level = true;
        } else if seen_level && c > idle {
            return Some(log.t[k] - log.t[0]);
        }
    }
    None
}
