//! Pre-registration documents: parsing, canonical form, digest and binding
//! checks against measurement files.
//!
//! Numbers are rounded to 12 significant digits on load, so a loaded
//! document is already in canonical form and reserializing it is exact.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use chrono::{DateTime, FixedOffset};
use indexmap::IndexMap;
use toml::Value;

use super::formats::sha256_hex;
use crate::atlas::{RomCategory, RomInterval};
use crate::error::{Error, Result};
use crate::human_ref::ReferenceBody;
use crate::numeric::fmt_sig12;
use crate::scoring::{BandwidthSlot, FeatureWeights, PairKey, WeightScheme, FEATURE_NAMES};

#[derive(Debug, Clone, PartialEq)]
pub struct BandRef {
    pub file: String,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preregistration {
    pub scheme: WeightScheme,
    pub bands: Vec<BandRef>,
    /// Task-specific functional intervals; their axes are the pair's required axes.
    pub functional_rom: IndexMap<PairKey, BTreeMap<String, RomInterval>>,
    pub reference_body: Option<ReferenceBody>,
    pub created: DateTime<FixedOffset>,
    /// Digest of the canonical document without `created`.
    pub digest: String,
}

fn canon_num(v: f64) -> f64 {
    fmt_sig12(v).parse().expect("fmt_sig12 output parses")
}

fn number(v: &Value, what: &str) -> Result<f64> {
    let x = match v {
        Value::Float(f) => *f,
        Value::Integer(i) => *i as f64,
        _ => return Err(Error::Malformed(format!("{what}: expected a number, got {v}"))),
    };
    if !x.is_finite() {
        return Err(Error::Malformed(format!("{what}: expected a finite number, got {x}")));
    }
    Ok(canon_num(x))
}

fn table<'a>(v: &'a Value, what: &str) -> Result<&'a toml::Table> {
    v.as_table().ok_or_else(|| Error::Malformed(format!("{what}: expected a table")))
}

fn section<'a>(doc: &'a toml::Table, name: &str) -> Result<&'a Value> {
    doc.get(name).ok_or_else(|| Error::MissingSection(name.to_string()))
}

fn number_map(v: &Value, what: &str) -> Result<IndexMap<String, f64>> {
    table(v, what)?.iter().map(|(k, v)| Ok((k.clone(), number(v, &format!("{what}.{k}"))?))).collect()
}

/// `[name.<task>] <joint> = value`
fn pair_map(v: &Value, what: &str) -> Result<IndexMap<PairKey, f64>> {
    let mut out = IndexMap::new();
    for (task, joints) in table(v, what)? {
        for (joint, x) in number_map(joints, &format!("{what}.{task}"))? {
            out.insert(PairKey::new(task, &joint), x);
        }
    }
    Ok(out)
}

fn string(v: &Value, what: &str) -> Result<String> {
    v.as_str().map(str::to_string).ok_or_else(|| Error::Malformed(format!("{what}: expected a string")))
}

pub fn parse_timestamp(s: &str, what: &str) -> Result<DateTime<FixedOffset>> {
    DateTime::parse_from_rfc3339(s.trim()).map_err(|e| Error::Malformed(format!("{what}: `{s}` is not an RFC 3339 timestamp ({e})")))
}

fn timestamp(v: &Value, what: &str) -> Result<DateTime<FixedOffset>> {
    match v {
        Value::String(s) => parse_timestamp(s, what),
        Value::Datetime(d) => parse_timestamp(&d.to_string(), what),
        _ => Err(Error::Malformed(format!("{what}: expected a timestamp"))),
    }
}

pub fn load_preregistration(text: &str) -> Result<Preregistration> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Malformed(e.to_string()))?;
    let task_weights = number_map(section(&doc, "task_weights")?, "task_weights")?;
    let mut joint_weights = IndexMap::new();
    for (task, u) in table(section(&doc, "joint_weights")?, "joint_weights")? {
        joint_weights.insert(task.clone(), number_map(u, &format!("joint_weights.{task}"))?);
    }
    let fw = number_map(section(&doc, "feature_weights")?, "feature_weights")?;
    if let Some(k) = fw.keys().find(|k| !FEATURE_NAMES.contains(&k.as_str())) {
        return Err(Error::Malformed(format!("feature_weights: unknown feature `{k}`")));
    }
    let mut alpha = [0.0; 6];
    for (k, name) in FEATURE_NAMES.iter().enumerate() {
        alpha[k] = *fw.get(*name).ok_or_else(|| Error::ConfigIncomplete(format!("feature_weights lacks `{name}`")))?;
    }
    let bands = section(&doc, "bands")?
        .as_array()
        .ok_or_else(|| Error::Malformed("bands: expected an array of tables".into()))?
        .iter()
        .map(|b| {
            let t = table(b, "bands entry")?;
            let get = |k: &str| t.get(k).ok_or_else(|| Error::Malformed(format!("bands entry lacks `{k}`")));
            Ok(BandRef { file: string(get("file")?, "bands.file")?, digest: string(get("digest")?, "bands.digest")? })
        })
        .collect::<Result<Vec<_>>>()?;
    if bands.is_empty() {
        return Err(Error::MissingSection("bands".into()));
    }
    let bandwidth_targets = pair_map(section(&doc, "bandwidth_targets_hz")?, "bandwidth_targets_hz")?;
    let efficiency_targets = pair_map(section(&doc, "efficiency_targets")?, "efficiency_targets")?;
    let thermal_requirements = pair_map(section(&doc, "thermal_requirements_nm")?, "thermal_requirements_nm")?;
    let rate_requirements = match doc.get("rate_requirements_rad_s") {
        Some(v) => pair_map(v, "rate_requirements_rad_s")?,
        None => IndexMap::new(),
    };
    let created = timestamp(section(&doc, "created")?, "created")?;

    let mut functional_rom = IndexMap::new();
    if let Some(v) = doc.get("functional_rom") {
        for (task, joints) in table(v, "functional_rom")? {
            for (joint, axes) in table(joints, &format!("functional_rom.{task}"))? {
                let mut m = BTreeMap::new();
                for (axis, iv) in table(axes, &format!("functional_rom.{task}.{joint}"))? {
                    let what = format!("functional_rom.{task}.{joint}.{axis}");
                    let pair =
                        iv.as_array().filter(|a| a.len() == 2).ok_or_else(|| Error::Malformed(format!("{what}: expected [lo, hi]")))?;
                    m.insert(axis.clone(), RomInterval::new(number(&pair[0], &what)?, number(&pair[1], &what)?, RomCategory::Functional)?);
                }
                functional_rom.insert(PairKey::new(task, joint), m);
            }
        }
    }

    let reference_body = match doc.get("reference_body") {
        Some(v) => {
            let t = table(v, "reference_body")?;
            let get = |k: &str| t.get(k).ok_or_else(|| Error::Malformed(format!("reference_body lacks `{k}`")));
            Some(ReferenceBody::new(number(get("mass_kg")?, "mass_kg")?, number(get("height_m")?, "height_m")?)?)
        }
        None => None,
    };

    let empty = toml::Table::new();
    let g = match doc.get("guardrails") {
        Some(v) => table(v, "guardrails")?,
        None => &empty,
    };
    let opt_num = |k: &str| g.get(k).map(|v| number(v, &format!("guardrails.{k}"))).transpose();
    let critical_tasks = match g.get("critical_tasks") {
        Some(v) => v
            .as_array()
            .ok_or_else(|| Error::Malformed("guardrails.critical_tasks: expected an array".into()))?
            .iter()
            .map(|t| string(t, "guardrails.critical_tasks"))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let bandwidth_slot = match g.get("bandwidth_slot") {
        Some(v) => {
            let s = string(v, "guardrails.bandwidth_slot")?;
            BandwidthSlot::parse(&s).ok_or_else(|| Error::Malformed(format!("guardrails.bandwidth_slot: unknown `{s}`")))?
        }
        None => BandwidthSlot::default(),
    };

    let scheme = WeightScheme {
        task_weights,
        joint_weights,
        feature_weights: FeatureWeights::new(alpha)?,
        bandwidth_targets,
        efficiency_targets,
        thermal_requirements,
        rate_requirements,
        headroom_delta: opt_num("headroom_delta")?.unwrap_or(0.0),
        breadth_floor: opt_num("breadth_floor")?,
        critical_tasks,
        task_gate: opt_num("task_gate")?,
        bandwidth_slot,
    };
    scheme.validate()?;
    for key in scheme.pairs().map(|(k, _, _)| k) {
        if !scheme.thermal_requirements.contains_key(&key) {
            return Err(Error::ConfigIncomplete(format!("no thermal requirement for {key}")));
        }
    }
    let mut p = Preregistration { scheme, bands, functional_rom, reference_body, created, digest: String::new() };
    p.digest = p.compute_digest();
    Ok(p)
}

fn num_value(x: f64) -> Value {
    Value::Float(x)
}

fn pair_table(m: &IndexMap<PairKey, f64>) -> toml::Table {
    let mut out = toml::Table::new();
    for (k, v) in m {
        let task = out.entry(k.task.clone()).or_insert_with(|| Value::Table(toml::Table::new()));
        task.as_table_mut().expect("task entry is a table").insert(k.joint.clone(), num_value(*v));
    }
    out
}

fn weight_table(m: &IndexMap<String, f64>) -> toml::Table {
    m.iter().map(|(k, v)| (k.clone(), num_value(*v))).collect()
}

impl Preregistration {
    pub fn to_toml(&self) -> toml::Table {
        let s = &self.scheme;
        let mut doc = toml::Table::new();
        doc.insert("created".into(), Value::String(self.created.to_rfc3339()));
        doc.insert("task_weights".into(), Value::Table(weight_table(&s.task_weights)));
        doc.insert(
            "joint_weights".into(),
            Value::Table(s.joint_weights.iter().map(|(t, u)| (t.clone(), Value::Table(weight_table(u)))).collect()),
        );
        doc.insert(
            "feature_weights".into(),
            Value::Table(FEATURE_NAMES.iter().zip(s.feature_weights.as_array()).map(|(n, a)| (n.to_string(), num_value(a))).collect()),
        );
        doc.insert(
            "bands".into(),
            Value::Array(
                self.bands
                    .iter()
                    .map(|b| {
                        let mut t = toml::Table::new();
                        t.insert("file".into(), Value::String(b.file.clone()));
                        t.insert("digest".into(), Value::String(b.digest.clone()));
                        Value::Table(t)
                    })
                    .collect(),
            ),
        );
        doc.insert("bandwidth_targets_hz".into(), Value::Table(pair_table(&s.bandwidth_targets)));
        doc.insert("efficiency_targets".into(), Value::Table(pair_table(&s.efficiency_targets)));
        doc.insert("thermal_requirements_nm".into(), Value::Table(pair_table(&s.thermal_requirements)));
        if !s.rate_requirements.is_empty() {
            doc.insert("rate_requirements_rad_s".into(), Value::Table(pair_table(&s.rate_requirements)));
        }
        if !self.functional_rom.is_empty() {
            let mut rom = toml::Table::new();
            for (k, axes) in &self.functional_rom {
                let task = rom.entry(k.task.clone()).or_insert_with(|| Value::Table(toml::Table::new()));
                let axes: toml::Table =
                    axes.iter().map(|(a, iv)| (a.clone(), Value::Array(vec![num_value(iv.lo), num_value(iv.hi)]))).collect();
                task.as_table_mut().expect("task entry is a table").insert(k.joint.clone(), Value::Table(axes));
            }
            doc.insert("functional_rom".into(), Value::Table(rom));
        }
        if let Some(b) = &self.reference_body {
            let mut t = toml::Table::new();
            t.insert("mass_kg".into(), num_value(b.mass));
            t.insert("height_m".into(), num_value(b.height));
            doc.insert("reference_body".into(), Value::Table(t));
        }
        let mut g = toml::Table::new();
        g.insert("headroom_delta".into(), num_value(s.headroom_delta));
        if let Some(v) = s.breadth_floor {
            g.insert("breadth_floor".into(), num_value(v));
        }
        if let Some(v) = s.task_gate {
            g.insert("task_gate".into(), num_value(v));
        }
        g.insert("critical_tasks".into(), Value::Array(s.critical_tasks.iter().cloned().map(Value::String).collect()));
        g.insert("bandwidth_slot".into(), Value::String(s.bandwidth_slot.as_str().into()));
        doc.insert("guardrails".into(), Value::Table(g));
        doc
    }

    /// Sorted keys, 12-significant-digit numbers.
    pub fn canonical(&self) -> String {
        canonical_toml(&self.to_toml())
    }

    fn compute_digest(&self) -> String {
        document_digest(&self.to_toml())
    }
}

/// Digest of a preregistration document: its canonical form with `created`
/// removed.
pub fn document_digest(doc: &toml::Table) -> String {
    let mut doc = doc.clone();
    doc.remove("created");
    sha256_hex(canonical_toml(&doc).as_bytes())
}

fn key(k: &str) -> String {
    if !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        k.to_string()
    } else {
        Value::String(k.to_string()).to_string()
    }
}

fn inline(v: &Value) -> String {
    match v {
        Value::Float(f) => fmt_sig12(*f),
        Value::Array(a) => format!("[{}]", a.iter().map(inline).collect::<Vec<_>>().join(", ")),
        Value::Table(t) => {
            let mut keys: Vec<&String> = t.keys().collect();
            keys.sort();
            format!("{{ {} }}", keys.iter().map(|k| format!("{} = {}", key(k), inline(&t[*k]))).collect::<Vec<_>>().join(", "))
        }
        other => other.to_string(),
    }
}

fn is_table_array(v: &Value) -> bool {
    matches!(v, Value::Array(a) if !a.is_empty() && a.iter().all(Value::is_table))
}

fn emit(out: &mut String, path: &[String], t: &toml::Table) {
    let mut keys: Vec<&String> = t.keys().collect();
    keys.sort();
    for k in &keys {
        let v = &t[*k];
        if !v.is_table() && !is_table_array(v) {
            let _ = writeln!(out, "{} = {}", key(k), inline(v));
        }
    }
    for k in &keys {
        let mut sub = path.to_vec();
        sub.push(key(k));
        match &t[*k] {
            Value::Table(inner) => {
                let has_scalars = inner.values().any(|v| !v.is_table() && !is_table_array(v));
                if has_scalars || inner.is_empty() {
                    let _ = writeln!(out, "\n[{}]", sub.join("."));
                }
                emit(out, &sub, inner);
            }
            v if is_table_array(v) => {
                for item in v.as_array().expect("checked") {
                    let _ = writeln!(out, "\n[[{}]]", sub.join("."));
                    emit(out, &sub, item.as_table().expect("checked"));
                }
            }
            _ => {}
        }
    }
}

/// Deterministic TOML text: keys sorted at every level, floats at 12
/// significant digits.
pub fn canonical_toml(doc: &toml::Table) -> String {
    let mut out = String::new();
    emit(&mut out, &[], doc);
    out.trim_start_matches('\n').to_string()
}

/// Creation stamp and prereg binding read from a measurement file.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementStamp {
    pub file: String,
    pub created: Option<DateTime<FixedOffset>>,
    pub prereg_digest: Option<String>,
}

impl MeasurementStamp {
    /// TOML files carry top-level `created` / `prereg_digest` keys; delimited
    /// files and logs carry `# created:` / `# prereg_digest:` header lines.
    pub fn read(file: &str, text: &str) -> Result<Self> {
        if file.ends_with(".toml") {
            let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Malformed(e.to_string()))?;
            return Ok(MeasurementStamp {
                file: file.into(),
                created: doc.get("created").map(|v| timestamp(v, "created")).transpose()?,
                prereg_digest: doc.get("prereg_digest").map(|v| string(v, "prereg_digest")).transpose()?,
            });
        }
        let mut stamp = MeasurementStamp { file: file.into(), created: None, prereg_digest: None };
        for line in text.lines().map(str::trim).take_while(|l| l.starts_with('#') || l.is_empty()) {
            if let Some((k, v)) = line.trim_start_matches('#').split_once(':') {
                match k.trim() {
                    "created" => stamp.created = Some(parse_timestamp(v, "created")?),
                    "prereg_digest" => stamp.prereg_digest = Some(v.trim().to_string()),
                    _ => {}
                }
            }
        }
        Ok(stamp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BindingReport {
    pub checked: usize,
    pub findings: Vec<String>,
}

impl BindingReport {
    pub fn pass(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for BindingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "binding {}: {} file(s) checked", if self.pass() { "PASS" } else { "FAIL" }, self.checked)?;
        for x in &self.findings {
            writeln!(f, "  - {x}")?;
        }
        write!(f, "note: timestamps are self-reported; ordering is checked, provenance is not proven")
    }
}

/// Every measurement must postdate the preregistration and name its digest.
pub fn verify_prereg_binding(prereg: &Preregistration, stamps: &[MeasurementStamp]) -> BindingReport {
    let mut findings = Vec::new();
    for s in stamps {
        match s.created {
            None => findings.push(format!("{}: no creation timestamp", s.file)),
            Some(t) if t < prereg.created => {
                findings.push(format!("{}: created {} before preregistration {}", s.file, t.to_rfc3339(), prereg.created.to_rfc3339()))
            }
            Some(_) => {}
        }
        match &s.prereg_digest {
            None => findings.push(format!("{}: no prereg_digest", s.file)),
            Some(d) if *d != prereg.digest => findings.push(format!("{}: prereg digest {} does not match {}", s.file, d, prereg.digest)),
            Some(_) => {}
        }
    }
    BindingReport { checked: stamps.len(), findings }
}
