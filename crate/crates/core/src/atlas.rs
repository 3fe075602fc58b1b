//! DoF inventory, range-of-motion norms, and the two workspace factors.
//!
//! Angles are degrees on ISB-signed axes: positive is flexion, abduction,
//! internal rotation, supination, dorsiflexion, radial deviation, inversion,
//! and left rotation/bend for midline segments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use indexmap::IndexMap;

use crate::config_io::table::Table;
use crate::error::{Error, Result};

const AXES_CSV: &str = include_str!("../data/atlas/axes.csv");
const ROM_CSV: &str = include_str!("../data/atlas/rom.csv");

pub const DEFAULT_COUPLING_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RomCategory {
    Active,
    Passive,
    Functional,
}

impl RomCategory {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "active" => Some(Self::Active),
            "passive" => Some(Self::Passive),
            "functional" => Some(Self::Functional),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Active => "active",
            Self::Passive => "passive",
            Self::Functional => "functional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    Rotational,
    Translational,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AxisSpec {
    pub joint: String,
    pub axis: String,
    pub positive_direction: String,
}

/// Closed angular interval in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RomInterval {
    pub lo: f64,
    pub hi: f64,
    pub category: RomCategory,
}

impl RomInterval {
    /// Zero-length intervals are allowed here; `rom_coverage` rejects them
    /// where a positive length is required.
    pub fn new(lo: f64, hi: f64, category: RomCategory) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(RomInterval { lo, hi, category })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn overlap(&self, other: &RomInterval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }

    pub fn contains(&self, other: &RomInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointDofRecord {
    pub region: String,
    pub joint: String,
    pub axes: Vec<AxisSpec>,
    pub rotational_count: usize,
    pub translational_count: usize,
    /// 1 for midline segments, 2 for paired limbs.
    pub sides: usize,
}

/// Norms for one axis. `None` means the source lists no quantitative value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RomNorm {
    pub active: Option<RomInterval>,
    pub passive: Option<RomInterval>,
    pub functional: Option<RomInterval>,
}

impl RomNorm {
    pub fn get(&self, category: RomCategory) -> Option<RomInterval> {
        match category {
            RomCategory::Active => self.active,
            RomCategory::Passive => self.passive,
            RomCategory::Functional => self.functional,
        }
    }

    fn slot(&mut self, category: RomCategory) -> &mut Option<RomInterval> {
        match category {
            RomCategory::Active => &mut self.active,
            RomCategory::Passive => &mut self.passive,
            RomCategory::Functional => &mut self.functional,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atlas {
    pub joints: Vec<JointDofRecord>,
    pub rom: BTreeMap<(String, String), RomNorm>,
}

impl Atlas {
    /// The shipped inventory and norms.
    pub fn builtin() -> Self {
        Self::from_tables(AXES_CSV, ROM_CSV).expect("embedded atlas tables are well formed")
    }

    pub fn from_tables(axes_csv: &str, rom_csv: &str) -> Result<Self> {
        let t = Table::parse(axes_csv)?;
        t.expect_columns(&["region", "joint", "sides", "axis", "kind", "positive_direction"])?;
        let mut joints: IndexMap<String, JointDofRecord> = IndexMap::new();
        let mut seen = BTreeSet::new();
        for row in &t.rows {
            let joint = row.str(1).to_string();
            let axis = row.str(3).to_string();
            if !seen.insert((joint.clone(), axis.clone())) {
                return Err(row.parse_error(format!("duplicate axis {joint}/{axis}")));
            }
            let sides = row.f64(2, "sides")? as usize;
            let kind = match row.str(4) {
                "R" => DofKind::Rotational,
                "T" => DofKind::Translational,
                k => return Err(row.parse_error(format!("unknown DoF kind `{k}`"))),
            };
            let rec = joints.entry(joint.clone()).or_insert_with(|| JointDofRecord {
                region: row.str(0).to_string(),
                joint: joint.clone(),
                axes: Vec::new(),
                rotational_count: 0,
                translational_count: 0,
                sides,
            });
            match kind {
                DofKind::Rotational => rec.rotational_count += 1,
                DofKind::Translational => rec.translational_count += 1,
            }
            rec.axes.push(AxisSpec { joint, axis, positive_direction: row.str(5).to_string() });
        }
        let mut atlas = Atlas { joints: joints.into_values().collect(), rom: BTreeMap::new() };
        atlas.apply_rows(rom_csv, true)?;
        Ok(atlas)
    }

    /// Applies an override file (`joint,axis,category,lo_deg,hi_deg`).
    /// Blank bounds mark the entry unavailable.
    pub fn apply_overrides(&mut self, csv: &str) -> Result<()> {
        self.apply_rows(csv, false)
    }

    fn apply_rows(&mut self, csv: &str, initial: bool) -> Result<()> {
        let t = Table::parse(csv)?;
        t.expect_columns(&["joint", "axis", "category", "lo_deg", "hi_deg"])?;
        for row in &t.rows {
            let key = (row.str(0).to_string(), row.str(1).to_string());
            if self.axis(&key.0, &key.1).is_none() {
                return Err(row.parse_error(format!("unknown axis {}/{}", key.0, key.1)));
            }
            let cat = RomCategory::parse(row.str(2)).ok_or_else(|| row.parse_error(format!("unknown category `{}`", row.str(2))))?;
            let interval = match (row.opt_f64(3, "lo_deg")?, row.opt_f64(4, "hi_deg")?) {
                (Some(lo), Some(hi)) => Some(RomInterval::new(lo, hi, cat).map_err(|e| row.parse_error(e.to_string()))?),
                (None, None) => None,
                _ => return Err(row.parse_error("both bounds or neither must be given")),
            };
            let norm = self.rom.entry(key).or_default();
            if initial && norm.get(cat).is_some() {
                return Err(row.parse_error("duplicate ROM entry"));
            }
            *norm.slot(cat) = interval;
        }
        Ok(())
    }

    pub fn joint(&self, joint: &str) -> Option<&JointDofRecord> {
        self.joints.iter().find(|j| j.joint == joint)
    }

    pub fn axis(&self, joint: &str, axis: &str) -> Option<&AxisSpec> {
        self.joint(joint)?.axes.iter().find(|a| a.axis == axis)
    }

    pub fn norm(&self, joint: &str, axis: &str) -> Option<&RomNorm> {
        self.rom.get(&(joint.to_string(), axis.to_string()))
    }

    pub fn functional(&self, joint: &str, axis: &str) -> Option<RomInterval> {
        self.norm(joint, axis)?.functional
    }

    /// Bilateral (rotational, translational) totals.
    pub fn dof_totals(&self) -> (usize, usize) {
        self.joints.iter().fold((0, 0), |(r, t), j| (r + j.sides * j.rotational_count, t + j.sides * j.translational_count))
    }

    /// Plain-text listing for `atlas show`.
    pub fn show(&self, joint: &str) -> Option<String> {
        let rec = self.joint(joint)?;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} ({}): {}R + {}T per side, {} side(s)",
            rec.joint, rec.region, rec.rotational_count, rec.translational_count, rec.sides
        );
        let _ = writeln!(out, "axis,positive_direction,active_deg,passive_deg,functional_deg");
        let fmt = |i: Option<RomInterval>| i.map_or("n/a".to_string(), |i| format!("[{}, {}]", i.lo, i.hi));
        for a in &rec.axes {
            let n = self.norm(joint, &a.axis).copied().unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", a.axis, a.positive_direction, fmt(n.active), fmt(n.passive), fmt(n.functional));
        }
        Some(out)
    }
}

/// Mean over required axes of |robot ∩ functional| / |functional|.
/// A required axis with no robot interval contributes 0.
pub fn rom_coverage(
    robot: &BTreeMap<String, RomInterval>,
    functional: &BTreeMap<String, RomInterval>,
    required_axes: &BTreeSet<String>,
) -> Result<f64> {
    if required_axes.is_empty() {
        return Err(Error::EmptyAxisSet);
    }
    let mut sum = 0.0;
    for axis in required_axes {
        let func = functional.get(axis).ok_or_else(|| Error::MissingInterval { axis: axis.clone() })?;
        if func.length() <= 0.0 {
            return Err(Error::DegenerateInterval { axis: axis.clone() });
        }
        if let Some(rob) = robot.get(axis) {
            sum += (rob.overlap(func) / func.length()).min(1.0);
        }
    }
    Ok(sum / required_axes.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisActuationReport {
    pub axis: AxisSpec,
    pub implemented: bool,
    pub coupling_rms_fraction: f64,
}

impl AxisActuationReport {
    pub fn passes(&self, coupling_threshold: f64) -> bool {
        self.implemented && self.coupling_rms_fraction < coupling_threshold
    }
}

/// Fraction of required axes that are implemented with coupling below the
/// threshold. Reports are matched to required axes by axis name.
pub fn dof_sufficiency(reports: &[AxisActuationReport], required_axes: &BTreeSet<String>, coupling_threshold: f64) -> Result<f64> {
    if required_axes.is_empty() {
        return Err(Error::EmptyAxisSet);
    }
    if !(coupling_threshold > 0.0) {
        return Err(Error::InvalidParameter {
            name: "coupling_threshold".into(),
            value: coupling_threshold,
            rule: "must be positive".into(),
        });
    }
    if let Some(r) = reports.iter().find(|r| r.coupling_rms_fraction < 0.0 || r.coupling_rms_fraction.is_nan()) {
        return Err(Error::InvalidParameter {
            name: format!("coupling_rms_fraction for {}", r.axis.axis),
            value: r.coupling_rms_fraction,
            rule: "must be nonnegative".into(),
        });
    }
    let passing = required_axes.iter().filter(|a| reports.iter().any(|r| &r.axis.axis == *a && r.passes(coupling_threshold))).count();
    Ok(passing as f64 / required_axes.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> RomInterval {
        RomInterval::new(lo, hi, RomCategory::Functional).unwrap()
    }

    fn one(axis: &str, i: RomInterval) -> BTreeMap<String, RomInterval> {
        BTreeMap::from([(axis.to_string(), i)])
    }

    fn axes(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ankle_walk_coverage() {
        let c = rom_coverage(&one("dp", iv(-5.0, 22.0)), &one("dp", iv(0.0, 25.0)), &axes(&["dp"])).unwrap();
        assert!((c - 0.88).abs() < 1e-12);
    }

    #[test]
    fn wrist_coverage() {
        let c = rom_coverage(&one("fe", iv(-12.0, 12.0)), &one("fe", iv(-15.0, 15.0)), &axes(&["fe"])).unwrap();
        assert!((c - 0.8).abs() < 1e-12);
    }

    #[test]
    fn identical_intervals_cover_fully() {
        let f = one("a", iv(3.0, 40.0));
        assert_eq!(rom_coverage(&f, &f, &axes(&["a"])).unwrap(), 1.0);
    }

    #[test]
    fn missing_robot_axis_scores_zero() {
        let mut func = one("a", iv(0.0, 10.0));
        func.insert("b".into(), iv(0.0, 10.0));
        let c = rom_coverage(&one("a", iv(0.0, 10.0)), &func, &axes(&["a", "b"])).unwrap();
        assert_eq!(c, 0.5);
    }

    #[test]
    fn disjoint_overlap_is_zero() {
        let c = rom_coverage(&one("a", iv(20.0, 30.0)), &one("a", iv(0.0, 10.0)), &axes(&["a"])).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn rom_errors() {
        let f = one("a", iv(0.0, 10.0));
        assert_eq!(rom_coverage(&f, &f, &BTreeSet::new()), Err(Error::EmptyAxisSet));
        let d = one("a", iv(5.0, 5.0));
        assert_eq!(rom_coverage(&f, &d, &axes(&["a"])), Err(Error::DegenerateInterval { axis: "a".into() }));
        assert_eq!(rom_coverage(&f, &f, &axes(&["z"])), Err(Error::MissingInterval { axis: "z".into() }));
        assert!(RomInterval::new(2.0, 1.0, RomCategory::Active).is_err());
    }

    fn report(axis: &str, implemented: bool, coupling: f64) -> AxisActuationReport {
        AxisActuationReport {
            axis: AxisSpec { joint: "j".into(), axis: axis.into(), positive_direction: "flexion".into() },
            implemented,
            coupling_rms_fraction: coupling,
        }
    }

    #[test]
    fn dof_examples() {
        let t = DEFAULT_COUPLING_THRESHOLD;
        assert_eq!(dof_sufficiency(&[report("a", true, 0.02)], &axes(&["a"]), t).unwrap(), 1.0);
        let r = [report("a", true, 0.0), report("b", true, 0.05)];
        let s = dof_sufficiency(&r, &axes(&["a", "b", "c"]), t).unwrap();
        assert!((s - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(dof_sufficiency(&[report("a", true, 0.15)], &axes(&["a"]), t).unwrap(), 0.0);
        assert_eq!(dof_sufficiency(&[report("a", false, 0.0)], &axes(&["a"]), t).unwrap(), 0.0);
        assert_eq!(dof_sufficiency(&[], &BTreeSet::new(), t), Err(Error::EmptyAxisSet));
        assert!(dof_sufficiency(&[], &axes(&["a"]), 0.0).is_err());
    }

    #[test]
    fn builtin_totals_match_inventory() {
        let atlas = Atlas::builtin();
        assert_eq!(atlas.dof_totals(), (106, 4));
        for j in &atlas.joints {
            assert_eq!(j.rotational_count + j.translational_count, j.axes.len());
        }
    }

    #[test]
    fn builtin_functional_within_active() {
        let atlas = Atlas::builtin();
        for ((j, a), n) in &atlas.rom {
            if let (Some(act), Some(func)) = (n.active, n.functional) {
                assert!(act.contains(&func), "{j}/{a}: {func:?} not within {act:?}");
            }
        }
    }

    #[test]
    fn builtin_entries_and_qualitative_gaps() {
        let atlas = Atlas::builtin();
        let knee = atlas.functional("knee", "flex_ext").unwrap();
        assert_eq!((knee.lo, knee.hi), (0.0, 110.0));
        let elbow = atlas.functional("elbow", "flex_ext").unwrap();
        assert_eq!((elbow.lo, elbow.hi), (30.0, 130.0));
        assert!(atlas.functional("thumb", "cmc_abd").is_none());
        assert!(atlas.functional("hallux", "mtp_flex_ext").is_none());
        assert!(atlas.norm("thoracolumbar", "flex_ext").is_none());
        assert_eq!(atlas.axis("ankle", "dorsi_plantar").unwrap().positive_direction, "dorsiflexion");
    }

    #[test]
    fn overrides_replace_functional_intervals() {
        let mut atlas = Atlas::builtin();
        atlas.apply_overrides("joint,axis,category,lo_deg,hi_deg\nwrist,flex_ext,functional,-15,15\nknee,flex_ext,passive,,\n").unwrap();
        let w = atlas.functional("wrist", "flex_ext").unwrap();
        assert_eq!((w.lo, w.hi), (-15.0, 15.0));
        assert!(atlas.norm("knee", "flex_ext").unwrap().passive.is_none());
        assert!(atlas.apply_overrides("joint,axis,category,lo_deg,hi_deg\nknee,bogus,functional,0,1\n").is_err());
    }

    #[test]
    fn show_lists_axes() {
        let s = Atlas::builtin().show("ankle").unwrap();
        assert!(s.contains("dorsi_plantar,dorsiflexion,[-50, 20],[-55, 25],[-20, 10]"), "{s}");
        assert!(Atlas::builtin().show("tail").is_none());
    }
}
