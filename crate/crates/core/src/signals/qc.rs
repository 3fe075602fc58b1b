//! Measurement sanity checks.

use super::log::TimeSeriesLog;
use crate::numeric::trapezoid;

const ENERGY_SLACK: f64 = 1e-6;
const BANDWIDTH_SLACK: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBalance {
    /// ∫ max(τ·ω, 0) dt, J
    pub mechanical_j: f64,
    /// ∫ v·i dt, J
    pub electrical_j: f64,
    pub pass: bool,
}

/// Mechanical energy out must not exceed electrical energy in.
pub fn power_balance_check(log: &TimeSeriesLog) -> PowerBalance {
    let p_mech: Vec<f64> = log.torque.iter().zip(&log.omega).map(|(t, w)| (t * w).max(0.0)).collect();
    let p_elec: Vec<f64> = log.v_bus.iter().zip(&log.i_bus).map(|(v, i)| v * i).collect();
    let mechanical_j = trapezoid(&log.t, &p_mech);
    let electrical_j = trapezoid(&log.t, &p_elec);
    let pass = mechanical_j <= electrical_j + ENERGY_SLACK * electrical_j.abs().max(mechanical_j.abs());
    PowerBalance { mechanical_j, electrical_j, pass }
}

/// Loaded bandwidth must not exceed no-load bandwidth (1% slack).
pub fn loaded_bandwidth_check(f_loaded: f64, f_noload: f64) -> bool {
    f_loaded > 0.0 && f_noload > 0.0 && f_loaded <= f_noload * (1.0 + BANDWIDTH_SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(efficiency: f64) -> TimeSeriesLog {
        let mut log = TimeSeriesLog::with_capacity(100, 1000.0);
        for k in 0..100 {
            let w = 2.0 + (k as f64 * 0.1).sin();
            let p = 5.0 * w;
            log.push(k as f64 * 1e-3, 0.0, w, 5.0, 5.0, 48.0, p / efficiency / 48.0, 25.0, 25.0);
        }
        log
    }

    #[test]
    fn power_balance_examples() {
        assert!(power_balance_check(&log(0.8)).pass);
        let bad = power_balance_check(&log(1.25));
        assert!(!bad.pass);
        assert!(bad.mechanical_j > bad.electrical_j);
        let mut idle = TimeSeriesLog::with_capacity(3, 1000.0);
        for k in 0..3 {
            idle.push(k as f64 * 1e-3, 0.0, 0.0, 0.0, 0.0, 48.0, 0.0, 25.0, 25.0);
        }
        let r = power_balance_check(&idle);
        assert!(r.pass);
        assert_eq!((r.mechanical_j, r.electrical_j), (0.0, 0.0));
    }

    #[test]
    fn loaded_bandwidth_examples() {
        assert!(loaded_bandwidth_check(8.0, 12.0));
        assert!(!loaded_bandwidth_check(12.0, 8.0));
        assert!(loaded_bandwidth_check(10.0, 10.0));
        assert!(loaded_bandwidth_check(10.05, 10.0));
        assert!(!loaded_bandwidth_check(0.0, 10.0));
    }
}
