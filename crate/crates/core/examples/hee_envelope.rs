//! Human-equivalent envelope coverage for one pair, with margins.

use std::collections::BTreeSet;

use hlas::envelope::{hee_coverage, margin_report, CapabilityMap, CapabilitySample, MarginMethod};
use hlas::human_ref::{DemandSample, OperatingBand};

fn main() -> hlas::Result<()> {
    let omega = [8.0, 9.0, 10.0, 11.0, 12.0];
    let t_hum = [30.0, 32.0, 34.0, 33.0, 30.0];
    let t_rob = [36.0, 35.0, 34.0, 30.0, 27.0];
    let demand = (0..5).map(|k| DemandSample::new(10.0, omega[k], t_hum[k], t_hum[k] * omega[k])).collect();
    let band = OperatingBand::new("Walk", "ankle", demand, BTreeSet::new())?;
    let caps = (0..5).map(|k| CapabilitySample { q: 10.0, omega: omega[k], torque_rob: t_rob[k] }).collect();
    let map = CapabilityMap::new("ankle", "dorsi_plantar", caps, "isovelocity, 25 C")?;

    for delta in [0.0, 0.05, 0.10] {
        let h = hee_coverage(&band, &map, delta)?;
        println!("delta {delta:.2}: coverage {:.3}, passing rates {:?}", h.coverage, h.passing_rates());
    }
    for method in [MarginMethod::Min, MarginMethod::Quantile10] {
        let m = margin_report(&band, &map, method, Some((14.0, 12.0)))?;
        println!("{}: torque {:.3}, power {:.3}, rate {:.3}", method.as_str(), m.torque_margin, m.power_margin, m.rate_margin.unwrap());
    }
    Ok(())
}
