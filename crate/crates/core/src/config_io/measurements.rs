//! Measurement documents and assembly of per-pair scoring inputs.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, FixedOffset};
use indexmap::IndexMap;
use toml::Value;

use super::formats::{canonical_table_digest, parse_bands, parse_capability, parse_efficiency, sha256_hex};
use super::prereg::{load_preregistration, parse_timestamp, MeasurementStamp, Preregistration};
use crate::atlas::{
    dof_sufficiency, rom_coverage, Atlas, AxisActuationReport, AxisSpec, RomCategory, RomInterval, DEFAULT_COUPLING_THRESHOLD,
};
use crate::envelope::CapabilityMap;
use crate::error::{Error, Result};
use crate::human_ref::{DemandSample, OperatingBand};
use crate::scoring::{PairInput, PairKey, PairMeasurement};
use crate::signals::{task_weighted_efficiency, EfficiencyField};

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub created: Option<DateTime<FixedOffset>>,
    pub prereg_digest: Option<String>,
    pub capability_file: String,
    pub efficiency_file: String,
    pub coupling_threshold: f64,
    pub robot_rom: IndexMap<String, BTreeMap<String, RomInterval>>,
    pub actuation: IndexMap<String, Vec<(String, bool, f64)>>,
    pub crossover_hz: IndexMap<String, f64>,
    pub omega_max_rad_s: IndexMap<String, f64>,
    pub torque_cont_nm: IndexMap<PairKey, f64>,
    pub declared_deficits: Vec<PairKey>,
}

fn malformed(what: &str, expected: &str) -> Error {
    Error::Malformed(format!("{what}: expected {expected}"))
}

fn num(v: &Value, what: &str) -> Result<f64> {
    match v {
        Value::Float(f) if f.is_finite() => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(malformed(what, "a finite number")),
    }
}

fn tab<'a>(v: &'a Value, what: &str) -> Result<&'a toml::Table> {
    v.as_table().ok_or_else(|| malformed(what, "a table"))
}

fn opt_tab<'a>(doc: &'a toml::Table, name: &str) -> Result<Option<&'a toml::Table>> {
    doc.get(name).map(|v| tab(v, name)).transpose()
}

fn req_str(doc: &toml::Table, name: &str) -> Result<String> {
    doc.get(name).ok_or_else(|| Error::MissingSection(name.into()))?.as_str().map(str::to_string).ok_or_else(|| malformed(name, "a string"))
}

fn joint_numbers(doc: &toml::Table, name: &str) -> Result<IndexMap<String, f64>> {
    match opt_tab(doc, name)? {
        Some(t) => t.iter().map(|(k, v)| Ok((k.clone(), num(v, &format!("{name}.{k}"))?))).collect(),
        None => Ok(IndexMap::new()),
    }
}

fn parse_pair_key(s: &str) -> Result<PairKey> {
    let (task, joint) = s.split_once('/').ok_or_else(|| malformed("declared_deficits entry", "`task/joint`"))?;
    Ok(PairKey::new(task, joint))
}

pub fn parse_measurements(text: &str) -> Result<MeasurementSet> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Malformed(e.to_string()))?;
    let created = match doc.get("created") {
        Some(Value::Datetime(d)) => Some(parse_timestamp(&d.to_string(), "created")?),
        Some(Value::String(s)) => Some(parse_timestamp(s, "created")?),
        Some(_) => return Err(malformed("created", "a timestamp")),
        None => None,
    };
    let prereg_digest = doc
        .get("prereg_digest")
        .map(|v| v.as_str().map(str::to_string).ok_or_else(|| malformed("prereg_digest", "a string")))
        .transpose()?;

    let mut robot_rom = IndexMap::new();
    for (joint, axes) in opt_tab(&doc, "robot_rom")?.into_iter().flatten() {
        let mut m = BTreeMap::new();
        for (axis, iv) in tab(axes, &format!("robot_rom.{joint}"))? {
            let what = format!("robot_rom.{joint}.{axis}");
            let a = iv.as_array().filter(|a| a.len() == 2).ok_or_else(|| malformed(&what, "[lo, hi]"))?;
            m.insert(axis.clone(), RomInterval::new(num(&a[0], &what)?, num(&a[1], &what)?, RomCategory::Active)?);
        }
        robot_rom.insert(joint.clone(), m);
    }

    let mut actuation = IndexMap::new();
    for (joint, axes) in opt_tab(&doc, "actuation")?.into_iter().flatten() {
        let mut v = Vec::new();
        for (axis, rec) in tab(axes, &format!("actuation.{joint}"))? {
            let what = format!("actuation.{joint}.{axis}");
            let r = tab(rec, &what)?;
            let implemented = r.get("implemented").and_then(Value::as_bool).ok_or_else(|| malformed(&what, "`implemented` boolean"))?;
            let coupling = num(r.get("coupling_rms").ok_or_else(|| malformed(&what, "`coupling_rms`"))?, &what)?;
            v.push((axis.clone(), implemented, coupling));
        }
        actuation.insert(joint.clone(), v);
    }

    let mut torque_cont_nm = IndexMap::new();
    for (task, joints) in opt_tab(&doc, "torque_cont_nm")?.into_iter().flatten() {
        for (joint, v) in tab(joints, &format!("torque_cont_nm.{task}"))? {
            torque_cont_nm.insert(PairKey::new(task, joint), num(v, &format!("torque_cont_nm.{task}.{joint}"))?);
        }
    }

    let declared_deficits = match doc.get("declared_deficits") {
        Some(v) => v
            .as_array()
            .ok_or_else(|| malformed("declared_deficits", "an array"))?
            .iter()
            .map(|s| s.as_str().ok_or_else(|| malformed("declared_deficits entry", "a string")).and_then(parse_pair_key))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };

    Ok(MeasurementSet {
        created,
        prereg_digest,
        capability_file: req_str(&doc, "capability_file")?,
        efficiency_file: req_str(&doc, "efficiency_file")?,
        coupling_threshold: doc
            .get("coupling_threshold")
            .map(|v| num(v, "coupling_threshold"))
            .transpose()?
            .unwrap_or(DEFAULT_COUPLING_THRESHOLD),
        robot_rom,
        actuation,
        crossover_hz: joint_numbers(&doc, "crossover_hz")?,
        omega_max_rad_s: joint_numbers(&doc, "omega_max_rad_s")?,
        torque_cont_nm,
        declared_deficits,
    })
}

/// One axis of the ROM overlay artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct RomOverlayRow {
    pub key: PairKey,
    pub axis: String,
    pub functional: RomInterval,
    pub robot: Option<RomInterval>,
    pub coverage: f64,
}

/// Everything needed to score one robot against one preregistration.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub prereg: Preregistration,
    pub measurements: MeasurementSet,
    pub inputs: IndexMap<PairKey, PairInput>,
    pub rom_overlay: Vec<RomOverlayRow>,
    /// Stamps of every measurement file, for the binding check.
    pub stamps: Vec<MeasurementStamp>,
    /// (file, sha256 of raw bytes) for every input read.
    pub input_digests: Vec<(String, String)>,
}

impl Dataset {
    /// Loads a dataset; `read` maps a file name from the documents to its
    /// text. Errors carry the name of the file they came from.
    pub fn load(prereg_name: &str, measurements_name: &str, mut read: impl FnMut(&str) -> Result<String>) -> Result<Dataset> {
        let mut digests = Vec::new();
        let mut fetch = |name: &str| -> Result<String> {
            let text = read(name).map_err(|e| e.in_file(name))?;
            digests.push((name.to_string(), sha256_hex(text.as_bytes())));
            Ok(text)
        };
        let prereg = load_preregistration(&fetch(prereg_name)?).map_err(|e| e.in_file(prereg_name))?;
        let m_text = fetch(measurements_name)?;
        let measurements = parse_measurements(&m_text).map_err(|e| e.in_file(measurements_name))?;
        let mut stamps = vec![MeasurementStamp::read(measurements_name, &m_text).map_err(|e| e.in_file(measurements_name))?];

        let mut demands: IndexMap<PairKey, Vec<DemandSample>> = IndexMap::new();
        for b in &prereg.bands {
            let text = fetch(&b.file)?;
            let digest = canonical_table_digest(&text).map_err(|e| e.in_file(&b.file))?;
            if digest != b.digest {
                return Err(
                    Error::Malformed(format!("band content digest {digest} does not match preregistered {}", b.digest)).in_file(&b.file)
                );
            }
            for (k, v) in parse_bands(&text).map_err(|e| e.in_file(&b.file))? {
                demands.entry(k).or_default().extend(v);
            }
        }
        let cap_name = measurements.capability_file.clone();
        let cap_text = fetch(&cap_name)?;
        stamps.push(MeasurementStamp::read(&cap_name, &cap_text).map_err(|e| e.in_file(&cap_name))?);
        let caps = parse_capability(&cap_text).map_err(|e| e.in_file(&cap_name))?;
        let eff_name = measurements.efficiency_file.clone();
        let eff_text = fetch(&eff_name)?;
        stamps.push(MeasurementStamp::read(&eff_name, &eff_text).map_err(|e| e.in_file(&eff_name))?);
        let eff = parse_efficiency(&eff_text).map_err(|e| e.in_file(&eff_name))?;

        let (inputs, rom_overlay) =
            assemble_inputs(&prereg, &measurements, demands, &caps, &eff, &Atlas::builtin()).map_err(|e| e.in_file(measurements_name))?;
        Ok(Dataset { prereg, measurements, inputs, rom_overlay, stamps, input_digests: digests })
    }

    /// Loads from files on disk, resolving names relative to `dir`.
    pub fn load_dir(dir: &std::path::Path, prereg_name: &str, measurements_name: &str) -> Result<Dataset> {
        Dataset::load(prereg_name, measurements_name, |name| Ok(std::fs::read_to_string(dir.join(name))?))
    }
}

/// Builds one [`PairInput`] per in-scope pair.
pub fn assemble_inputs(
    prereg: &Preregistration,
    m: &MeasurementSet,
    mut demands: IndexMap<PairKey, Vec<DemandSample>>,
    caps: &IndexMap<String, CapabilityMap>,
    eff: &IndexMap<String, EfficiencyField>,
    atlas: &Atlas,
) -> Result<(IndexMap<PairKey, PairInput>, Vec<RomOverlayRow>)> {
    let mut inputs = IndexMap::new();
    let mut overlay = Vec::new();
    let pairs: Vec<PairKey> = prereg.scheme.pairs().map(|(k, _, _)| k).collect();
    if let Some(k) = m.declared_deficits.iter().find(|k| !pairs.contains(k)) {
        return Err(Error::ConfigIncomplete(format!("declared deficit {k} is not a preregistered pair")));
    }
    for key in pairs {
        if m.declared_deficits.contains(&key) {
            inputs.insert(key, PairInput::DeclaredDeficit);
            continue;
        }
        let missing = |what: &str| Error::ConfigIncomplete(format!("no {what} for {key}"));
        let functional = prereg.functional_rom.get(&key).ok_or_else(|| missing("functional ROM"))?;
        let required: BTreeSet<String> = functional.keys().cloned().collect();
        let empty = BTreeMap::new();
        let robot = m.robot_rom.get(&key.joint).unwrap_or(&empty);
        let rom = rom_coverage(robot, functional, &required)?;
        for (axis, f) in functional {
            let r = robot.get(axis).copied();
            let coverage = r.map_or(0.0, |r| (r.overlap(f) / f.length()).min(1.0));
            overlay.push(RomOverlayRow { key: key.clone(), axis: axis.clone(), functional: *f, robot: r, coverage });
        }
        let reports: Vec<AxisActuationReport> = m
            .actuation
            .get(&key.joint)
            .map(|v| {
                v.iter()
                    .map(|(axis, implemented, coupling)| AxisActuationReport {
                        axis: atlas.axis(&key.joint, axis).cloned().unwrap_or_else(|| AxisSpec {
                            joint: key.joint.clone(),
                            axis: axis.clone(),
                            positive_direction: String::new(),
                        }),
                        implemented: *implemented,
                        coupling_rms_fraction: *coupling,
                    })
                    .collect()
            })
            .unwrap_or_default();
        let dof = dof_sufficiency(&reports, &required, m.coupling_threshold)?;
        let band =
            OperatingBand::new(&key.task, &key.joint, demands.shift_remove(&key).ok_or_else(|| missing("operating band"))?, required)?;
        let capability = caps.get(&key.joint).ok_or_else(|| missing("capability map"))?.clone();
        let efficiency = task_weighted_efficiency(&band, eff.get(&key.joint).ok_or_else(|| missing("efficiency measurements"))?)?;
        inputs.insert(
            key.clone(),
            PairInput::Measured(Box::new(PairMeasurement {
                rom_coverage: rom,
                dof_sufficiency: dof,
                band,
                capability,
                crossover_hz: *m.crossover_hz.get(&key.joint).ok_or_else(|| missing("crossover"))?,
                omega_max: m.omega_max_rad_s.get(&key.joint).copied(),
                efficiency,
                torque_cont: *m.torque_cont_nm.get(&key).ok_or_else(|| missing("plateau torque"))?,
            })),
        );
    }
    Ok((inputs, overlay))
}
