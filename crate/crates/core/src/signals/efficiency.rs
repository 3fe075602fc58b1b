//! Point and task-weighted efficiency. Regeneration is never credited.

use std::collections::HashMap;

use super::log::TimeSeriesLog;
use crate::error::{Error, Result};
use crate::human_ref::OperatingBand;
use crate::numeric::point_key;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointEfficiency {
    Measured(f64),
    /// Mechanical power ≤ 0 at this point.
    Excluded,
}

impl PointEfficiency {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Measured(v) => Some(v),
            Self::Excluded => None,
        }
    }
}

pub fn point_efficiency(p_mech: f64, p_elec: f64) -> Result<PointEfficiency> {
    if !(p_elec > 0.0) {
        return Err(Error::NonpositiveElectrical { value: p_elec });
    }
    Ok(if p_mech > 0.0 { PointEfficiency::Measured(p_mech / p_elec) } else { PointEfficiency::Excluded })
}

/// Efficiency measurements keyed by exact (q, ω).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EfficiencyField {
    points: HashMap<(u64, u64), PointEfficiency>,
}

impl EfficiencyField {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, q: f64, omega: f64, eff: PointEfficiency) {
        self.points.insert(point_key(q, omega), eff);
    }

    pub fn get(&self, q: f64, omega: f64) -> Option<PointEfficiency> {
        self.points.get(&point_key(q, omega)).copied()
    }

    pub fn uniform(band: &OperatingBand, eta: f64) -> Self {
        let mut f = Self::new();
        for s in &band.samples {
            f.insert(s.q, s.omega, PointEfficiency::Measured(eta));
        }
        f
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `Σ w·η / Σ w` over positive-demand samples; points with no positive
/// mechanical power are left out of both sums.
pub fn task_weighted_efficiency(band: &OperatingBand, field: &EfficiencyField) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for s in band.samples.iter().filter(|s| s.power_hum > 0.0) {
        let eff = field.get(s.q, s.omega).ok_or_else(|| Error::SampleMismatch { joint: band.joint.clone(), q: s.q, omega: s.omega })?;
        if let PointEfficiency::Measured(eta) = eff {
            num += s.weight * eta;
            den += s.weight;
        }
    }
    if !(den > 0.0) {
        return Err(Error::DegenerateBand { task: band.task.clone(), joint: band.joint.clone() });
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEfficiency {
    /// Mean τ·ω, W.
    pub p_mech: f64,
    /// Mean v·i, W.
    pub p_elec: f64,
    pub efficiency: PointEfficiency,
    /// Some samples had negative mechanical power (energy returned, not credited).
    pub regeneration_present: bool,
}

/// Efficiency over `[t0, t1)` of a log, or the whole log.
pub fn log_efficiency(log: &TimeSeriesLog, window: Option<(f64, f64)>) -> Result<LogEfficiency> {
    let (i0, i1) = match window {
        Some((a, b)) => log.index_range(a, b),
        None => (0, log.len()),
    };
    if i1 <= i0 {
        return Err(Error::Malformed("efficiency window holds no samples".into()));
    }
    let n = (i1 - i0) as f64;
    let p_mech = (i0..i1).map(|k| log.torque[k] * log.omega[k]).sum::<f64>() / n;
    let p_elec = (i0..i1).map(|k| log.v_bus[k] * log.i_bus[k]).sum::<f64>() / n;
    let regeneration_present = (i0..i1).any(|k| log.torque[k] * log.omega[k] < 0.0);
    Ok(LogEfficiency { p_mech, p_elec, efficiency: point_efficiency(p_mech, p_elec)?, regeneration_present })
}
