//! Human-Equivalence Envelope coverage and lower-envelope margins.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::human_ref::OperatingBand;
use crate::numeric::{clip01, point_key, quantile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapabilitySample {
    /// deg
    pub q: f64,
    /// rad/s
    pub omega: f64,
    /// Continuous-safe torque magnitude, Nm.
    pub torque_rob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapabilityMap {
    pub joint: String,
    pub axis: String,
    samples: Vec<CapabilitySample>,
    pub conditions: String,
    index: HashMap<(u64, u64), usize>,
}

impl CapabilityMap {
    pub fn new(joint: &str, axis: &str, samples: Vec<CapabilitySample>, conditions: &str) -> Result<Self> {
        if conditions.trim().is_empty() {
            return Err(Error::MissingConditions { joint: joint.into() });
        }
        let mut index = HashMap::with_capacity(samples.len());
        for (k, s) in samples.iter().enumerate() {
            if !(s.torque_rob >= 0.0 && s.torque_rob.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: format!("torque_nm at q = {}, omega = {}", s.q, s.omega),
                    value: s.torque_rob,
                    rule: "continuous-safe torque must be finite and nonnegative".into(),
                });
            }
            if index.insert(point_key(s.q, s.omega), k).is_some() {
                return Err(Error::DuplicateSample { q: s.q, omega: s.omega });
            }
        }
        Ok(CapabilityMap { joint: joint.into(), axis: axis.into(), samples, conditions: conditions.into(), index })
    }

    pub fn samples(&self) -> &[CapabilitySample] {
        &self.samples
    }

    /// Exact lookup; capability is never interpolated.
    pub fn torque_at(&self, q: f64, omega: f64) -> Option<f64> {
        self.index.get(&point_key(q, omega)).map(|&k| self.samples[k].torque_rob)
    }

    fn require(&self, q: f64, omega: f64) -> Result<f64> {
        self.torque_at(q, omega).ok_or_else(|| Error::SampleMismatch { joint: self.joint.clone(), q, omega })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeeSample {
    pub q: f64,
    pub omega: f64,
    pub weight: f64,
    pub torque_ok: bool,
    pub power_ok: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeeResult {
    pub coverage: f64,
    pub per_sample: Vec<HeeSample>,
}

impl HeeResult {
    pub fn passing_rates(&self) -> Vec<f64> {
        self.per_sample.iter().filter(|s| s.pass).map(|s| s.omega).collect()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta >= 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "headroom_delta".into(), value: delta, rule: "must be finite and nonnegative".into() })
    }
}

/// A sample passes iff `T_rob ≥ (1+δ)·T_hum` and `T_rob·ω ≥ (1+δ)·P_hum`.
pub fn hee_coverage(band: &OperatingBand, map: &CapabilityMap, headroom_delta: f64) -> Result<HeeResult> {
    check_delta(headroom_delta)?;
    let scale = 1.0 + headroom_delta;
    let mut per_sample = Vec::with_capacity(band.samples.len());
    let mut coverage = 0.0;
    for s in &band.samples {
        let t_rob = map.require(s.q, s.omega)?;
        let torque_ok = t_rob >= scale * s.torque_hum;
        let power_ok = t_rob * s.omega >= scale * s.power_hum;
        let pass = torque_ok && power_ok;
        if pass {
            coverage += s.weight;
        }
        per_sample.push(HeeSample { q: s.q, omega: s.omega, weight: s.weight, torque_ok, power_ok, pass });
    }
    if band.degenerate {
        return Err(Error::DegenerateBand { task: band.task.clone(), joint: band.joint.clone() });
    }
    Ok(HeeResult { coverage: clip01(coverage), per_sample })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MarginMethod {
    #[default]
    Min,
    Quantile10,
}

impl MarginMethod {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "min" => Some(Self::Min),
            "quantile10" => Some(Self::Quantile10),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Min => "min",
            Self::Quantile10 => "quantile10",
        }
    }

    fn reduce(self, ratios: &[f64]) -> f64 {
        match self {
            Self::Min => ratios.iter().copied().fold(f64::INFINITY, f64::min),
            Self::Quantile10 => quantile(ratios, 0.10).expect("nonempty"),
        }
    }
}

/// A margin value plus the (q, ω) points excluded for nonpositive demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Margin {
    pub value: f64,
    pub excluded: Vec<(f64, f64)>,
}

fn margin(
    band: &OperatingBand,
    map: &CapabilityMap,
    method: MarginMethod,
    what: &str,
    demand: impl Fn(&crate::human_ref::DemandSample) -> f64,
    supply: impl Fn(f64, f64) -> f64,
) -> Result<Margin> {
    if band.samples.is_empty() {
        return Err(Error::EmptyBand);
    }
    let mut ratios = Vec::with_capacity(band.samples.len());
    let mut excluded = Vec::new();
    for s in &band.samples {
        let t_rob = map.require(s.q, s.omega)?;
        let d = demand(s);
        if d > 0.0 {
            ratios.push(clip01(supply(t_rob, s.omega) / d));
        } else {
            excluded.push((s.q, s.omega));
        }
    }
    if ratios.is_empty() {
        return Err(Error::ZeroDemand { what: what.into() });
    }
    Ok(Margin { value: method.reduce(&ratios), excluded })
}

pub fn torque_margin(band: &OperatingBand, map: &CapabilityMap, method: MarginMethod) -> Result<Margin> {
    margin(band, map, method, "torque", |s| s.torque_hum, |t, _| t)
}

pub fn power_margin(band: &OperatingBand, map: &CapabilityMap, method: MarginMethod) -> Result<Margin> {
    margin(band, map, method, "power", |s| s.power_hum, |t, w| t * w)
}

pub fn rate_margin(omega_max: f64, omega_req: f64) -> Result<f64> {
    if !(omega_req > 0.0) {
        return Err(Error::ZeroRequirement { value: omega_req });
    }
    Ok(clip01(omega_max / omega_req))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    pub torque_margin: f64,
    pub power_margin: f64,
    pub rate_margin: Option<f64>,
    pub method: MarginMethod,
    pub excluded: Vec<(f64, f64)>,
}

pub fn margin_report(band: &OperatingBand, map: &CapabilityMap, method: MarginMethod, rate: Option<(f64, f64)>) -> Result<MarginReport> {
    let t = torque_margin(band, map, method)?;
    let p = power_margin(band, map, method)?;
    let mut excluded = t.excluded;
    for e in p.excluded {
        if !excluded.contains(&e) {
            excluded.push(e);
        }
    }
    Ok(MarginReport {
        torque_margin: t.value,
        power_margin: p.value,
        rate_margin: rate.map(|(max, req)| rate_margin(max, req)).transpose()?,
        method,
        excluded,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::human_ref::DemandSample;
    use std::collections::BTreeSet;

    pub(crate) fn ankle_walk() -> (OperatingBand, CapabilityMap) {
        let t_hum = [30.0, 32.0, 34.0, 33.0, 30.0];
        let p_hum = [240.0, 288.0, 340.0, 363.0, 360.0];
        let t_rob = [36.0, 35.0, 34.0, 30.0, 27.0];
        let samples = (0..5).map(|k| DemandSample::new(10.0, 8.0 + k as f64, t_hum[k], p_hum[k])).collect();
        let band = OperatingBand::new("Walk", "ankle", samples, BTreeSet::new()).unwrap();
        let caps = (0..5).map(|k| CapabilitySample { q: 10.0, omega: 8.0 + k as f64, torque_rob: t_rob[k] }).collect();
        let map = CapabilityMap::new("ankle", "dorsi_plantar", caps, "ambient 25 C").unwrap();
        (band, map)
    }

    fn demands_as_map(band: &OperatingBand, scale: f64) -> CapabilityMap {
        let caps = band.samples.iter().map(|s| CapabilitySample { q: s.q, omega: s.omega, torque_rob: scale * s.torque_hum }).collect();
        CapabilityMap::new(&band.joint, "a", caps, "test").unwrap()
    }

    #[test]
    fn ankle_walk_hee() {
        let (band, map) = ankle_walk();
        let r = hee_coverage(&band, &map, 0.0).unwrap();
        assert!((r.coverage - 0.546).abs() < 1e-3, "{}", r.coverage);
        assert_eq!(r.passing_rates(), vec![8.0, 9.0, 10.0]);
        let r = hee_coverage(&band, &map, 0.10).unwrap();
        assert_eq!(r.passing_rates(), vec![8.0]);
        assert!((r.coverage - 240.0 / 1591.0).abs() < 1e-15);
        assert!(!r.per_sample[1].torque_ok);
    }

    #[test]
    fn equality_passes_everywhere() {
        let (band, _) = ankle_walk();
        let r = hee_coverage(&band, &demands_as_map(&band, 1.0), 0.0).unwrap();
        assert_eq!(r.coverage, 1.0);
    }

    #[test]
    fn hee_errors() {
        let (band, map) = ankle_walk();
        let small = CapabilityMap::new("ankle", "a", map.samples()[..4].to_vec(), "c").unwrap();
        assert!(matches!(hee_coverage(&band, &small, 0.0), Err(Error::SampleMismatch { omega, .. }) if omega == 12.0));
        assert!(hee_coverage(&band, &map, -0.1).is_err());
        let dead = OperatingBand::new("Walk", "ankle", vec![DemandSample::new(10.0, 8.0, 1.0, -5.0)], BTreeSet::new()).unwrap();
        assert!(matches!(hee_coverage(&dead, &map, 0.0), Err(Error::DegenerateBand { .. })));
        assert!(CapabilityMap::new("j", "a", vec![], " ").is_err());
        let dup = vec![CapabilitySample { q: 0.0, omega: 1.0, torque_rob: 1.0 }; 2];
        assert!(matches!(CapabilityMap::new("j", "a", dup, "c"), Err(Error::DuplicateSample { .. })));
        let neg = vec![CapabilitySample { q: 0.0, omega: 1.0, torque_rob: -1.0 }];
        assert!(CapabilityMap::new("j", "a", neg, "c").is_err());
    }

    #[test]
    fn ankle_walk_margins() {
        let (band, map) = ankle_walk();
        let t = torque_margin(&band, &map, MarginMethod::Min).unwrap();
        assert!((t.value - 0.9).abs() < 1e-12);
        let q = torque_margin(&band, &map, MarginMethod::Quantile10).unwrap();
        let oracle = 0.9 + 0.4 * (30.0 / 33.0 - 0.9);
        assert!((q.value - oracle).abs() < 1e-12);
        assert!((q.value - 0.9036).abs() < 1e-4);
        let p = power_margin(&band, &map, MarginMethod::Min).unwrap();
        assert!((p.value - 0.9).abs() < 1e-12);
    }

    #[test]
    fn margin_edge_cases() {
        let (band, _) = ankle_walk();
        let same = demands_as_map(&band, 1.0);
        for m in [MarginMethod::Min, MarginMethod::Quantile10] {
            assert_eq!(torque_margin(&band, &same, m).unwrap().value, 1.0);
        }
        assert_eq!(power_margin(&band, &demands_as_map(&band, 2.0), MarginMethod::Min).unwrap().value, 1.0);
        let single = OperatingBand::new("t", "j", vec![DemandSample::new(0.0, 2.0, 10.0, 20.0)], BTreeSet::new()).unwrap();
        let half = CapabilityMap::new("j", "a", vec![CapabilitySample { q: 0.0, omega: 2.0, torque_rob: 5.0 }], "c").unwrap();
        assert_eq!(power_margin(&single, &half, MarginMethod::Min).unwrap().value, 0.5);
        let zero = OperatingBand::new("t", "j", vec![DemandSample::new(0.0, 2.0, 0.0, 20.0)], BTreeSet::new()).unwrap();
        assert_eq!(torque_margin(&zero, &half, MarginMethod::Min), Err(Error::ZeroDemand { what: "torque".into() }));
        let r = margin_report(&band, &same, MarginMethod::Min, Some((12.0, 12.0))).unwrap();
        assert_eq!(r.rate_margin, Some(1.0));
    }

    #[test]
    fn rate_margin_examples() {
        assert!((rate_margin(20.0, 130.0).unwrap() - 20.0 / 130.0).abs() < 1e-15);
        assert_eq!(rate_margin(12.0, 12.0).unwrap(), 1.0);
        assert_eq!(rate_margin(24.0, 12.0).unwrap(), 1.0);
        assert_eq!(rate_margin(1.0, 0.0), Err(Error::ZeroRequirement { value: 0.0 }));
    }
}
