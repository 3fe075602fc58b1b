//! Readers and writers for the delimited data files.

use indexmap::IndexMap;
use sha2::{Digest, Sha256};

use super::table::{fmt6, Table};
use crate::envelope::{CapabilityMap, CapabilitySample, HeeResult, HeeSample};
use crate::error::{Error, Result};
use crate::human_ref::{torque_from_power, DemandSample, OperatingBand, PhaseTrajectory};
use crate::numeric::fmt_sig12;
use crate::scoring::PairKey;
use crate::signals::{point_efficiency, EfficiencyField};

pub const BAND_COLUMNS: [&str; 6] = ["task", "joint", "q_deg", "omega_rad_s", "torque_hum_nm", "power_hum_w"];
pub const CAPABILITY_COLUMNS: [&str; 5] = ["joint", "axis", "q_deg", "omega_rad_s", "torque_nm"];
pub const EFFICIENCY_COLUMNS: [&str; 5] = ["joint", "q_deg", "omega_rad_s", "p_mech_w", "p_elec_w"];
pub const PHASE_COLUMNS: [&str; 4] = ["phase", "q_deg", "omega_rad_s", "power_w"];
pub const HEE_MASK_COLUMNS: [&str; 6] = ["q_deg", "omega_rad_s", "weight", "torque_ok", "power_ok", "pass"];

/// `sha256:<hex>` of raw bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

/// Digest of a delimited file's content, insensitive to whitespace, comment
/// lines and number spelling (`8`, `8.0` and `8.000` hash alike).
pub fn canonical_table_digest(text: &str) -> Result<String> {
    let t = Table::parse(text)?;
    let mut canon = Table::new(&t.headers.iter().map(String::as_str).collect::<Vec<_>>());
    for r in &t.rows {
        canon.push_row(
            r.fields
                .iter()
                .map(|f| match f.parse::<f64>() {
                    Ok(v) if v.is_finite() => fmt_sig12(v),
                    _ => f.clone(),
                })
                .collect(),
        );
    }
    Ok(sha256_hex(canon.to_text().as_bytes()))
}

/// Band demand rows grouped by (task, joint), in file order. A blank torque
/// cell is derived as P/ω.
pub fn parse_bands(text: &str) -> Result<IndexMap<PairKey, Vec<DemandSample>>> {
    let t = Table::parse(text)?;
    t.expect_columns(&BAND_COLUMNS)?;
    let mut out: IndexMap<PairKey, Vec<DemandSample>> = IndexMap::new();
    for r in &t.rows {
        let q = r.f64(2, "q_deg")?;
        let omega = r.f64(3, "omega_rad_s")?;
        let power = r.f64(5, "power_hum_w")?;
        let torque = match r.opt_f64(4, "torque_hum_nm")? {
            Some(v) => v,
            None => torque_from_power(power, omega).map_err(|e| r.parse_error(e.to_string()))?,
        };
        out.entry(PairKey::new(r.str(0), r.str(1))).or_default().push(DemandSample::new(q, omega, torque, power));
    }
    Ok(out)
}

pub fn bands_table(bands: &[&OperatingBand]) -> Table {
    let mut t = Table::new(&BAND_COLUMNS);
    for b in bands {
        for s in &b.samples {
            t.push_row(vec![
                b.task.clone(),
                b.joint.clone(),
                fmt_sig12(s.q),
                fmt_sig12(s.omega),
                fmt_sig12(s.torque_hum),
                fmt_sig12(s.power_hum),
            ]);
        }
    }
    t
}

/// One capability map per joint. The `conditions` header applies to all.
pub fn parse_capability(text: &str) -> Result<IndexMap<String, CapabilityMap>> {
    let t = Table::parse(text)?;
    t.expect_columns(&CAPABILITY_COLUMNS)?;
    let conditions = t.meta("conditions").unwrap_or("");
    let mut grouped: IndexMap<String, (String, Vec<CapabilitySample>)> = IndexMap::new();
    for r in &t.rows {
        let entry = grouped.entry(r.str(0).to_string()).or_insert_with(|| (r.str(1).to_string(), Vec::new()));
        if entry.0 != r.str(1) {
            return Err(r.parse_error(format!("joint `{}` has more than one axis; use one file per axis", r.str(0))));
        }
        entry.1.push(CapabilitySample { q: r.f64(2, "q_deg")?, omega: r.f64(3, "omega_rad_s")?, torque_rob: r.f64(4, "torque_nm")? });
    }
    grouped.into_iter().map(|(joint, (axis, s))| Ok((joint.clone(), CapabilityMap::new(&joint, &axis, s, conditions)?))).collect()
}

pub fn capability_table(maps: &[&CapabilityMap]) -> Table {
    let mut t = Table::new(&CAPABILITY_COLUMNS);
    if let Some(m) = maps.first() {
        t.push_meta("conditions", m.conditions.clone());
    }
    for m in maps {
        for s in m.samples() {
            t.push_row(vec![m.joint.clone(), m.axis.clone(), fmt_sig12(s.q), fmt_sig12(s.omega), fmt_sig12(s.torque_rob)]);
        }
    }
    t
}

/// Per-joint efficiency fields from paired mechanical/electrical power.
pub fn parse_efficiency(text: &str) -> Result<IndexMap<String, EfficiencyField>> {
    let t = Table::parse(text)?;
    t.expect_columns(&EFFICIENCY_COLUMNS)?;
    let mut out: IndexMap<String, EfficiencyField> = IndexMap::new();
    for r in &t.rows {
        let eff = point_efficiency(r.f64(3, "p_mech_w")?, r.f64(4, "p_elec_w")?).map_err(|e| r.parse_error(e.to_string()))?;
        out.entry(r.str(0).to_string()).or_default().insert(r.f64(1, "q_deg")?, r.f64(2, "omega_rad_s")?, eff);
    }
    Ok(out)
}

/// Phase-resolved gait trajectory; `task`/`joint` come from the header.
pub fn parse_phase(text: &str) -> Result<(PhaseTrajectory, Option<PairKey>)> {
    let t = Table::parse(text)?;
    t.expect_columns(&PHASE_COLUMNS)?;
    let mut cols: [Vec<f64>; 4] = Default::default();
    for r in &t.rows {
        for (k, c) in cols.iter_mut().enumerate() {
            c.push(r.f64(k, PHASE_COLUMNS[k])?);
        }
    }
    let key = match (t.meta("task"), t.meta("joint")) {
        (Some(task), Some(joint)) => Some(PairKey::new(task, joint)),
        _ => None,
    };
    let [phase, q, omega, power] = cols;
    Ok((PhaseTrajectory::new(phase, q, omega, power)?, key))
}

pub fn phase_table(traj: &PhaseTrajectory, key: Option<&PairKey>) -> Table {
    let mut t = Table::new(&PHASE_COLUMNS);
    if let Some(k) = key {
        t.push_meta("task", k.task.clone());
        t.push_meta("joint", k.joint.clone());
    }
    for i in 0..traj.len() {
        t.push_row([traj.phase[i], traj.q[i], traj.omega[i], traj.power[i]].iter().map(|v| fmt_sig12(*v)).collect());
    }
    t
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

/// Per-sample pass/fail mask with its weight column, for heatmaps.
pub fn hee_mask_table(key: &PairKey, hee: &HeeResult, headroom_delta: f64) -> Table {
    let mut t = Table::new(&HEE_MASK_COLUMNS);
    t.push_meta("task", key.task.clone());
    t.push_meta("joint", key.joint.clone());
    t.push_meta("headroom_delta", fmt6(headroom_delta));
    t.push_meta("coverage", fmt6(hee.coverage));
    for s in &hee.per_sample {
        t.push_row(vec![fmt6(s.q), fmt6(s.omega), fmt6(s.weight), flag(s.torque_ok), flag(s.power_ok), flag(s.pass)]);
    }
    t
}

pub fn parse_hee_mask(text: &str) -> Result<(PairKey, HeeResult, f64)> {
    let t = Table::parse(text)?;
    t.expect_columns(&HEE_MASK_COLUMNS)?;
    let meta = |k: &str| t.meta(k).ok_or_else(|| Error::Malformed(format!("HEE mask lacks `{k}` header")));
    let num = |k: &str| -> Result<f64> {
        let s = meta(k)?;
        s.parse().map_err(|_| Error::Malformed(format!("HEE mask header `{k}` is not a number: `{s}`")))
    };
    let key = PairKey::new(meta("task")?, meta("joint")?);
    let mut per_sample = Vec::with_capacity(t.rows.len());
    for r in &t.rows {
        per_sample.push(HeeSample {
            q: r.f64(0, "q_deg")?,
            omega: r.f64(1, "omega_rad_s")?,
            weight: r.f64(2, "weight")?,
            torque_ok: r.bool(3, "torque_ok")?,
            power_ok: r.bool(4, "power_ok")?,
            pass: r.bool(5, "pass")?,
        });
    }
    Ok((key, HeeResult { coverage: num("coverage")?, per_sample }, num("headroom_delta")?))
}
