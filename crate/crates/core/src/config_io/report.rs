//! Report bundles: the tabular artifacts of a scoring run and their manifest.

use std::path::Path;

use super::formats::{hee_mask_table, sha256_hex};
use super::measurements::RomOverlayRow;
use super::table::{fmt6, Table};
use crate::envelope::HeeResult;
use crate::error::{Error, Result};
use crate::scoring::{PairKey, ScoreBreakdown, FEATURE_NAMES};
use crate::signals::frf::frf_table;
use crate::signals::{Crossover, FrfPoint};

pub const FEATURE_TABLE: &str = "features.csv";
pub const CONTRIBUTIONS_TABLE: &str = "contributions.csv";
pub const TASK_TABLE: &str = "tasks.csv";
pub const SUMMARY_TABLE: &str = "summary.csv";
pub const GUARDRAIL_TABLE: &str = "guardrails.csv";
pub const ROM_OVERLAY_TABLE: &str = "rom_overlay.csv";
pub const MANIFEST: &str = "manifest.csv";

/// Optional signal-analysis outputs bundled alongside the score.
#[derive(Debug, Clone, Default)]
pub struct Analyses {
    /// Per joint: FRF points and the crossover found in them.
    pub frf: Vec<(String, Vec<FrfPoint>, Option<Crossover>)>,
    /// Named thermal trace tables.
    pub thermal: Vec<(String, Table)>,
    pub rom_overlay: Vec<RomOverlayRow>,
    /// Extra `key,value` summary rows (gated scores, sensitivity runs).
    pub summary_extra: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub table: Table,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub artifacts: Vec<Artifact>,
    /// Optional artifacts that were absent.
    pub flags: Vec<String>,
}

impl ReportBundle {
    pub fn get(&self, name: &str) -> Option<&Table> {
        self.artifacts.iter().find(|a| a.name == name).map(|a| &a.table)
    }

    /// Writes every artifact plus a manifest of names and digests.
    pub fn write_to(&self, dir: &Path, run: &RunManifest) -> Result<Vec<String>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
        let mut written = Vec::new();
        for a in &self.artifacts {
            let path = dir.join(&a.name);
            std::fs::write(&path, a.table.to_text()).map_err(|e| Error::from(e).in_file(&path))?;
            written.push(path.display().to_string());
        }
        let path = dir.join(MANIFEST);
        std::fs::write(&path, run.table(self).to_text()).map_err(|e| Error::from(e).in_file(&path))?;
        written.push(path.display().to_string());
        Ok(written)
    }
}

/// Provenance for one invocation. Carries no timestamps, so identical runs
/// produce identical manifests.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub command_line: String,
    pub version: String,
    pub seed: Option<u64>,
    pub inputs: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command_line: impl Into<String>) -> Self {
        RunManifest { command_line: command_line.into(), version: env!("CARGO_PKG_VERSION").into(), ..Default::default() }
    }

    pub fn table(&self, bundle: &ReportBundle) -> Table {
        let mut t = Table::new(&["kind", "name", "digest"]);
        t.push_meta("command", self.command_line.clone());
        t.push_meta("version", self.version.clone());
        if let Some(s) = self.seed {
            t.push_meta("seed", s.to_string());
        }
        for f in &bundle.flags {
            t.push_meta("flag", f.clone());
        }
        for (name, digest) in &self.inputs {
            t.push_row(vec!["input".into(), name.clone(), digest.clone()]);
        }
        for a in &bundle.artifacts {
            t.push_row(vec!["output".into(), a.name.clone(), sha256_hex(a.table.to_text().as_bytes())]);
        }
        t
    }
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

pub fn hee_mask_name(key: &PairKey) -> String {
    format!("hee_mask_{}_{}.csv", slug(&key.task), slug(&key.joint))
}

pub fn feature_table(b: &ScoreBreakdown) -> Table {
    let mut headers = vec!["task", "joint"];
    headers.extend(FEATURE_NAMES);
    headers.push("score");
    let mut t = Table::new(&headers);
    t.push_meta("headroom_delta", fmt6(b.headroom_delta));
    t.push_meta("feature_weights", b.feature_weights.as_array().iter().map(|a| fmt6(*a)).collect::<Vec<_>>().join(";"));
    for p in &b.pairs {
        let mut row = vec![p.key.task.clone(), p.key.joint.clone()];
        row.extend(p.features.as_array().iter().map(|x| fmt6(*x)));
        row.push(fmt6(p.score));
        t.push_row(row);
    }
    t
}

pub fn contributions_table(b: &ScoreBreakdown) -> Table {
    let mut t = Table::new(&["task", "joint", "task_weight", "joint_weight", "score", "contribution"]);
    t.push_meta("total", fmt6(b.contributions_total()));
    for p in &b.pairs {
        t.push_row(vec![
            p.key.task.clone(),
            p.key.joint.clone(),
            fmt6(p.task_weight),
            fmt6(p.joint_weight),
            fmt6(p.score),
            fmt6(p.contribution),
        ]);
    }
    t
}

pub fn task_table(b: &ScoreBreakdown) -> Table {
    let mut t = Table::new(&["task", "weight", "score"]);
    for (task, s) in &b.task_scores {
        let w = b.pairs.iter().find(|p| &p.key.task == task).map_or(0.0, |p| p.task_weight);
        t.push_row(vec![task.clone(), fmt6(w), fmt6(*s)]);
    }
    t
}

fn rom_overlay_table(rows: &[RomOverlayRow]) -> Table {
    let mut t =
        Table::new(&["task", "joint", "axis", "functional_lo_deg", "functional_hi_deg", "robot_lo_deg", "robot_hi_deg", "coverage"]);
    for r in rows {
        t.push_row(vec![
            r.key.task.clone(),
            r.key.joint.clone(),
            r.axis.clone(),
            fmt6(r.functional.lo),
            fmt6(r.functional.hi),
            r.robot.map_or(String::new(), |x| fmt6(x.lo)),
            r.robot.map_or(String::new(), |x| fmt6(x.hi)),
            fmt6(r.coverage),
        ]);
    }
    t
}

/// Builds every artifact. Each scored pair needs an HEE mask: measured
/// pairs from their HEE result, declared deficits as an empty mask.
pub fn emit_report(b: &ScoreBreakdown, a: &Analyses) -> Result<ReportBundle> {
    let mut artifacts = Vec::new();
    let mut push = |name: String, table: Table| artifacts.push(Artifact { name, table });

    let mut summary = Table::new(&["key", "value"]);
    summary.push_row(vec!["hlas".into(), fmt6(b.hlas)]);
    summary.push_row(vec!["headroom_delta".into(), fmt6(b.headroom_delta)]);
    summary.push_row(vec!["guardrail_flags".into(), b.guardrail_flags.len().to_string()]);
    for (k, v) in &a.summary_extra {
        summary.push_row(vec![k.clone(), v.clone()]);
    }
    push(SUMMARY_TABLE.into(), summary);
    push(TASK_TABLE.into(), task_table(b));
    push(FEATURE_TABLE.into(), feature_table(b));
    push(CONTRIBUTIONS_TABLE.into(), contributions_table(b));
    let mut flags_t = Table::new(&["flag"]);
    for f in &b.guardrail_flags {
        flags_t.push_row(vec![f.clone()]);
    }
    push(GUARDRAIL_TABLE.into(), flags_t);

    let mut absent = Vec::new();
    for p in &b.pairs {
        let name = hee_mask_name(&p.key);
        match b.hee.get(&p.key) {
            Some(h) => push(name, hee_mask_table(&p.key, h, b.headroom_delta)),
            None if p.declared_deficit => {
                let mut t = hee_mask_table(&p.key, &HeeResult { coverage: 0.0, per_sample: Vec::new() }, b.headroom_delta);
                t.push_meta("declared_deficit", "1");
                push(name, t);
            }
            None => absent.push(name),
        }
    }
    if !absent.is_empty() {
        return Err(Error::IncompleteAnalyses(absent));
    }

    let mut flags = Vec::new();
    if a.rom_overlay.is_empty() {
        flags.push("rom_overlay: none supplied".to_string());
    } else {
        push(ROM_OVERLAY_TABLE.into(), rom_overlay_table(&a.rom_overlay));
    }
    if a.frf.is_empty() {
        flags.push("frf_tables: none supplied".to_string());
    }
    for (joint, frf, c) in &a.frf {
        push(format!("frf_{}.csv", slug(joint)), frf_table(frf, c.as_ref()));
    }
    if a.thermal.is_empty() {
        flags.push("thermal_traces: none supplied".to_string());
    }
    for (name, t) in &a.thermal {
        push(format!("thermal_{}.csv", slug(name)), t.clone());
    }
    Ok(ReportBundle { artifacts, flags })
}
