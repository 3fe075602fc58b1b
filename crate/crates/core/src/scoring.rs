//! Feature vectors, weighted aggregation and guardrails.
//!
//! Every weighted sum is divided by its weight total. Validated totals are 1
//! within 1e-9, so this changes nothing numerically, but it makes the
//! all-ones identity exact in floating point.

use std::fmt;

use indexmap::IndexMap;

use crate::envelope::{hee_coverage, rate_margin, CapabilityMap, HeeResult};
use crate::error::{Error, Result};
use crate::human_ref::OperatingBand;
use crate::numeric::clip01;

pub const FEATURE_NAMES: [&str; 6] = ["rom", "dof", "hee", "bandwidth", "efficiency", "thermal"];
pub const DEFAULT_FEATURE_WEIGHTS: [f64; 6] = [0.10, 0.10, 0.50, 0.10, 0.10, 0.10];
const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub rom: f64,
    pub dof: f64,
    pub hee: f64,
    pub bandwidth: f64,
    pub efficiency: f64,
    pub thermal: f64,
}

impl FeatureVector {
    pub fn from_array(x: [f64; 6]) -> Result<Self> {
        for (name, v) in FEATURE_NAMES.iter().zip(x) {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter { name: format!("feature {name}"), value: v, rule: "must lie in [0, 1]".into() });
            }
        }
        Ok(FeatureVector { rom: x[0], dof: x[1], hee: x[2], bandwidth: x[3], efficiency: x[4], thermal: x[5] })
    }

    pub fn ones() -> Self {
        FeatureVector { rom: 1.0, dof: 1.0, hee: 1.0, bandwidth: 1.0, efficiency: 1.0, thermal: 1.0 }
    }

    pub fn zeros() -> Self {
        FeatureVector { rom: 0.0, dof: 0.0, hee: 0.0, bandwidth: 0.0, efficiency: 0.0, thermal: 0.0 }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.rom, self.dof, self.hee, self.bandwidth, self.efficiency, self.thermal]
    }
}

fn check_weights<'a>(what: &str, weights: impl IntoIterator<Item = (String, f64)> + 'a) -> Result<f64> {
    let mut sum = 0.0;
    for (name, w) in weights {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::NegativeWeight { what: format!("{what} `{name}`"), value: w });
        }
        sum += w;
    }
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::WeightSumViolation { what: what.to_string(), sum });
    }
    Ok(sum)
}

/// The six α_k, nonnegative and summing to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureWeights([f64; 6]);

impl FeatureWeights {
    pub fn new(alpha: [f64; 6]) -> Result<Self> {
        check_weights("feature weights", FEATURE_NAMES.iter().map(|n| n.to_string()).zip(alpha))?;
        Ok(FeatureWeights(alpha))
    }

    pub fn as_array(&self) -> [f64; 6] {
        self.0
    }
}

impl Default for FeatureWeights {
    fn default() -> Self {
        FeatureWeights(DEFAULT_FEATURE_WEIGHTS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairKey {
    pub task: String,
    pub joint: String,
}

impl PairKey {
    pub fn new(task: &str, joint: &str) -> Self {
        PairKey { task: task.to_string(), joint: joint.to_string() }
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.task, self.joint)
    }
}

/// What fills the bandwidth feature slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandwidthSlot {
    #[default]
    TorqueBandwidth,
    /// `clip(ω_max / ω_req)` in place of the crossover ratio.
    RateMargin,
}

impl BandwidthSlot {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "torque_bandwidth" => Some(Self::TorqueBandwidth),
            "rate_margin" => Some(Self::RateMargin),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::TorqueBandwidth => "torque_bandwidth",
            Self::RateMargin => "rate_margin",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    /// Task order here is the report order.
    pub task_weights: IndexMap<String, f64>,
    pub joint_weights: IndexMap<String, IndexMap<String, f64>>,
    pub feature_weights: FeatureWeights,
    /// Hz
    pub bandwidth_targets: IndexMap<PairKey, f64>,
    pub efficiency_targets: IndexMap<PairKey, f64>,
    /// Nm, duty-cycle torque each pair must sustain.
    pub thermal_requirements: IndexMap<PairKey, f64>,
    /// rad/s, used only with the rate-margin slot.
    pub rate_requirements: IndexMap<PairKey, f64>,
    pub headroom_delta: f64,
    pub breadth_floor: Option<f64>,
    /// Scope of the breadth floor and task gate; all tasks when empty.
    pub critical_tasks: Vec<String>,
    pub task_gate: Option<f64>,
    pub bandwidth_slot: BandwidthSlot,
}

impl WeightScheme {
    pub fn validate(&self) -> Result<()> {
        check_weights("task weights", self.task_weights.iter().map(|(k, v)| (k.clone(), *v)))?;
        for task in self.task_weights.keys() {
            let u = self.joint_weights.get(task).ok_or_else(|| Error::ConfigIncomplete(format!("no joint weights for task `{task}`")))?;
            check_weights(&format!("joint weights of `{task}`"), u.iter().map(|(k, v)| (k.clone(), *v)))?;
        }
        if let Some(task) = self.joint_weights.keys().find(|t| !self.task_weights.contains_key(*t)) {
            return Err(Error::UnknownTask(task.clone()));
        }
        FeatureWeights::new(self.feature_weights.0)?;
        for key in self.pairs().map(|(k, _, _)| k) {
            for (what, map) in [("bandwidth target", &self.bandwidth_targets), ("efficiency target", &self.efficiency_targets)] {
                if !map.contains_key(&key) {
                    return Err(Error::ConfigIncomplete(format!("no {what} for {key}")));
                }
            }
        }
        for map in [&self.bandwidth_targets, &self.efficiency_targets] {
            if let Some((_, &v)) = map.iter().find(|(_, v)| !(**v > 0.0)) {
                return Err(Error::ZeroTarget { value: v });
            }
        }
        for map in [&self.thermal_requirements, &self.rate_requirements] {
            if let Some((_, &v)) = map.iter().find(|(_, v)| !(**v > 0.0)) {
                return Err(Error::ZeroRequirement { value: v });
            }
        }
        if !(self.headroom_delta >= 0.0 && self.headroom_delta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "headroom_delta".into(),
                value: self.headroom_delta,
                rule: "must be finite and nonnegative".into(),
            });
        }
        for (name, v) in [("breadth_floor", self.breadth_floor), ("task_gate", self.task_gate)] {
            if let Some(v) = v.filter(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidParameter { name: name.into(), value: v, rule: "must lie in [0, 1]".into() });
            }
        }
        if let Some(t) = self.critical_tasks.iter().find(|t| !self.task_weights.contains_key(*t)) {
            return Err(Error::UnknownTask(t.clone()));
        }
        Ok(())
    }

    /// In-scope pairs in report order with their `w_t` and `u_{j,t}`.
    pub fn pairs(&self) -> impl Iterator<Item = (PairKey, f64, f64)> + '_ {
        self.task_weights.iter().flat_map(move |(task, &w)| {
            self.joint_weights.get(task).into_iter().flat_map(move |u| u.iter().map(move |(joint, &uj)| (PairKey::new(task, joint), w, uj)))
        })
    }

    fn in_guardrail_scope(&self, task: &str) -> bool {
        self.critical_tasks.is_empty() || self.critical_tasks.iter().any(|t| t == task)
    }
}

/// Raw per-pair measurements. Target-dependent factors are derived from
/// these at scoring time so a different scheme can reuse them.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMeasurement {
    pub rom_coverage: f64,
    pub dof_sufficiency: f64,
    pub band: OperatingBand,
    pub capability: CapabilityMap,
    /// Loaded torque-mode crossover, Hz.
    pub crossover_hz: f64,
    /// Peak rate under load, rad/s, for the rate-margin slot.
    pub omega_max: Option<f64>,
    /// Task-weighted efficiency η̄.
    pub efficiency: f64,
    /// Plateau torque under the task duty, Nm.
    pub torque_cont: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairInput {
    Measured(Box<PairMeasurement>),
    /// Explicit score-as-zero override for a pair that was not measured.
    DeclaredDeficit,
    /// Factors supplied directly.
    Features(FeatureVector),
}

fn check_measured(name: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter { name: name.into(), value: v, rule: "must be finite and nonnegative".into() })
    }
}

pub fn bandwidth_factor(f_c: f64, f_target: f64) -> Result<f64> {
    if !(f_target > 0.0) {
        return Err(Error::ZeroTarget { value: f_target });
    }
    Ok(clip01(check_measured("crossover_hz", f_c)? / f_target))
}

pub fn efficiency_factor(eta_bar: f64, eta_target: f64) -> Result<f64> {
    if !(eta_target > 0.0) {
        return Err(Error::ZeroTarget { value: eta_target });
    }
    Ok(clip01(check_measured("efficiency", eta_bar)? / eta_target))
}

pub fn thermal_factor(t_cont: f64, t_req: f64) -> Result<f64> {
    if !(t_req > 0.0) {
        return Err(Error::ZeroRequirement { value: t_req });
    }
    Ok(clip01(check_measured("torque_cont", t_cont)? / t_req))
}

pub fn joint_task_score(x: &FeatureVector, alpha: &FeatureWeights) -> f64 {
    let a = alpha.as_array();
    let num: f64 = a.iter().zip(x.as_array()).map(|(a, x)| a * x).sum();
    clip01(num / a.iter().sum::<f64>())
}

/// `Σ_j u_j s_j` over the joints in `u`.
pub fn task_score(task: &str, scores: &IndexMap<String, f64>, u: &IndexMap<String, f64>) -> Result<f64> {
    let total = check_weights(&format!("joint weights of `{task}`"), u.iter().map(|(k, v)| (k.clone(), *v)))?;
    let mut num = 0.0;
    for (joint, &uj) in u {
        let s = scores.get(joint).ok_or_else(|| Error::MissingJoint { task: task.into(), joint: joint.clone() })?;
        num += uj * s;
    }
    Ok(clip01(num / total))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub key: PairKey,
    pub task_weight: f64,
    pub joint_weight: f64,
    pub features: FeatureVector,
    pub score: f64,
    /// `w_t · u_{j,t} · s_{j,t}`, with weights normalized by their totals.
    pub contribution: f64,
    pub declared_deficit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBreakdown {
    pub hlas: f64,
    pub task_scores: IndexMap<String, f64>,
    pub pairs: Vec<PairScore>,
    pub hee: IndexMap<PairKey, HeeResult>,
    pub headroom_delta: f64,
    pub feature_weights: FeatureWeights,
    pub guardrail_flags: Vec<String>,
}

impl ScoreBreakdown {
    pub fn pair(&self, task: &str, joint: &str) -> Option<&PairScore> {
        self.pairs.iter().find(|p| p.key.task == task && p.key.joint == joint)
    }

    pub fn contributions_total(&self) -> f64 {
        self.pairs.iter().map(|p| p.contribution).sum()
    }

    /// Converts guardrail flags into a hard failure.
    pub fn enforce_guardrails(&self) -> Result<()> {
        if self.guardrail_flags.is_empty() {
            Ok(())
        } else {
            Err(Error::GuardrailViolation(self.guardrail_flags.clone()))
        }
    }
}

/// Aggregates precomputed feature vectors. Every in-scope pair must be present.
pub fn aggregate(features: &IndexMap<PairKey, FeatureVector>, scheme: &WeightScheme) -> Result<ScoreBreakdown> {
    scheme.validate()?;
    let w_total: f64 = scheme.task_weights.values().sum();
    let mut pairs = Vec::new();
    let mut task_scores = IndexMap::new();
    let mut num = 0.0;
    for (task, &w) in &scheme.task_weights {
        let u = &scheme.joint_weights[task];
        let u_total: f64 = u.values().sum();
        let mut scores = IndexMap::new();
        for (joint, &uj) in u {
            let key = PairKey::new(task, joint);
            let x = *features.get(&key).ok_or_else(|| Error::ConfigIncomplete(format!("no measurements for {key}")))?;
            let s = joint_task_score(&x, &scheme.feature_weights);
            scores.insert(joint.clone(), s);
            pairs.push(PairScore {
                key,
                task_weight: w,
                joint_weight: uj,
                features: x,
                score: s,
                contribution: (w / w_total) * (uj / u_total) * s,
                declared_deficit: false,
            });
        }
        let st = task_score(task, &scores, u)?;
        num += w * st;
        task_scores.insert(task.clone(), st);
    }
    let hlas = clip01(num / w_total);
    let mut breakdown = ScoreBreakdown {
        hlas,
        task_scores,
        pairs,
        hee: IndexMap::new(),
        headroom_delta: scheme.headroom_delta,
        feature_weights: scheme.feature_weights,
        guardrail_flags: Vec::new(),
    };
    breakdown.guardrail_flags = guardrail_flags(&breakdown, scheme);
    Ok(breakdown)
}

fn guardrail_flags(b: &ScoreBreakdown, scheme: &WeightScheme) -> Vec<String> {
    let mut flags = Vec::new();
    if let Some(h_min) = scheme.breadth_floor {
        for p in b.pairs.iter().filter(|p| scheme.in_guardrail_scope(&p.key.task)) {
            if p.features.hee < h_min {
                flags.push(format!("breadth floor: {} HEE {:.3} < h_min {}", p.key, p.features.hee, h_min));
            }
        }
    }
    if let Some(s_min) = scheme.task_gate {
        for (task, &s) in b.task_scores.iter().filter(|(t, _)| scheme.in_guardrail_scope(t)) {
            if s < s_min {
                flags.push(format!("task gate: {task} score {s:.3} < s_min {s_min}"));
            }
        }
    }
    flags
}

/// Derives one pair's feature vector under `scheme`.
pub fn pair_features(key: &PairKey, m: &PairMeasurement, scheme: &WeightScheme) -> Result<(FeatureVector, HeeResult)> {
    let missing = |what: &str| Error::ConfigIncomplete(format!("no {what} for {key}"));
    let hee = hee_coverage(&m.band, &m.capability, scheme.headroom_delta)?;
    let bandwidth = match scheme.bandwidth_slot {
        BandwidthSlot::TorqueBandwidth => {
            bandwidth_factor(m.crossover_hz, *scheme.bandwidth_targets.get(key).ok_or_else(|| missing("bandwidth target"))?)?
        }
        BandwidthSlot::RateMargin => rate_margin(
            m.omega_max.ok_or_else(|| missing("measured omega_max"))?,
            *scheme.rate_requirements.get(key).ok_or_else(|| missing("rate requirement"))?,
        )?,
    };
    let efficiency = efficiency_factor(m.efficiency, *scheme.efficiency_targets.get(key).ok_or_else(|| missing("efficiency target"))?)?;
    let thermal = thermal_factor(m.torque_cont, *scheme.thermal_requirements.get(key).ok_or_else(|| missing("thermal requirement"))?)?;
    let x = FeatureVector::from_array([
        clip01(check_measured("rom_coverage", m.rom_coverage)?),
        clip01(check_measured("dof_sufficiency", m.dof_sufficiency)?),
        hee.coverage,
        bandwidth,
        efficiency,
        thermal,
    ])?;
    Ok((x, hee))
}

/// Full score from raw measurements.
pub fn hlas(inputs: &IndexMap<PairKey, PairInput>, scheme: &WeightScheme) -> Result<ScoreBreakdown> {
    scheme.validate()?;
    let mut features = IndexMap::new();
    let mut hee = IndexMap::new();
    let mut deficits = Vec::new();
    for (key, _, _) in scheme.pairs() {
        let input = inputs.get(&key).ok_or_else(|| Error::ConfigIncomplete(format!("no measurements for {key}")))?;
        let x = match input {
            PairInput::Measured(m) => {
                let (x, h) = pair_features(&key, m, scheme)?;
                hee.insert(key.clone(), h);
                x
            }
            PairInput::DeclaredDeficit => {
                deficits.push(key.clone());
                FeatureVector::zeros()
            }
            PairInput::Features(x) => *x,
        };
        features.insert(key, x);
    }
    let mut b = aggregate(&features, scheme)?;
    for p in b.pairs.iter_mut() {
        p.declared_deficit = deficits.contains(&p.key);
    }
    b.hee = hee;
    Ok(b)
}

/// `(Π_{t∈crit} s_t)^{1/|crit|} · HLAS`.
pub fn gated_hlas(b: &ScoreBreakdown, critical_tasks: &[String]) -> Result<f64> {
    if critical_tasks.is_empty() {
        return Err(Error::EmptyCriticalSet);
    }
    let mut product = 1.0;
    for t in critical_tasks {
        product *= b.task_scores.get(t).ok_or_else(|| Error::UnknownTask(t.clone()))?;
    }
    Ok(product.powf(1.0 / critical_tasks.len() as f64) * b.hlas)
}

/// HLAS under each named scheme, reusing the same measurements.
pub fn sensitivity_weights(inputs: &IndexMap<PairKey, PairInput>, schemes: &[(String, WeightScheme)]) -> Result<IndexMap<String, f64>> {
    schemes.iter().map(|(name, s)| Ok((name.clone(), hlas(inputs, s)?.hlas))).collect()
}
