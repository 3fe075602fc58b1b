#![allow(dead_code)]

use std::collections::BTreeSet;

use hlas::envelope::{CapabilityMap, CapabilitySample};
use hlas::human_ref::{DemandSample, OperatingBand};
use hlas::scoring::{BandwidthSlot, FeatureVector, FeatureWeights, PairKey, PairMeasurement, WeightScheme};
use indexmap::IndexMap;
use proptest::prelude::*;

/// Ankle during walking: one posture, five rates.
pub const ANKLE_OMEGA: [f64; 5] = [8.0, 9.0, 10.0, 11.0, 12.0];
pub const ANKLE_T_HUM: [f64; 5] = [30.0, 32.0, 34.0, 33.0, 30.0];
pub const ANKLE_P_HUM: [f64; 5] = [240.0, 288.0, 340.0, 363.0, 360.0];
pub const ANKLE_T_ROB: [f64; 5] = [36.0, 35.0, 34.0, 30.0, 27.0];

pub fn ankle_walk() -> (OperatingBand, CapabilityMap) {
    let samples = (0..5).map(|k| DemandSample::new(10.0, ANKLE_OMEGA[k], ANKLE_T_HUM[k], ANKLE_P_HUM[k])).collect();
    let band = OperatingBand::new("Walk", "ankle", samples, BTreeSet::new()).unwrap();
    let caps = (0..5).map(|k| CapabilitySample { q: 10.0, omega: ANKLE_OMEGA[k], torque_rob: ANKLE_T_ROB[k] }).collect();
    (band, CapabilityMap::new("ankle", "dorsi_plantar", caps, "isovelocity, 25 C ambient").unwrap())
}

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / s).collect()
}

/// Positive weights summing to one.
pub fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(normalized)
}

pub fn feature_weights() -> impl Strategy<Value = FeatureWeights> {
    simplex(6).prop_map(|a| FeatureWeights::new(a.try_into().unwrap()).unwrap())
}

pub fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0]
}

pub fn feature_vector() -> impl Strategy<Value = FeatureVector> {
    prop::array::uniform6(unit()).prop_map(|x| FeatureVector::from_array(x).unwrap())
}

/// A valid scheme over 1–3 tasks with 1–3 joints each; every target is 1.
pub fn scheme() -> impl Strategy<Value = WeightScheme> {
    (1usize..=3)
        .prop_flat_map(|n| (simplex(n), prop::collection::vec(1usize..=3, n), feature_weights()))
        .prop_flat_map(|(w, joint_counts, alpha)| {
            let us: Vec<_> = joint_counts.iter().map(|&m| simplex(m)).collect();
            (Just(w), us, Just(alpha))
        })
        .prop_map(|(w, us, alpha)| {
            let mut task_weights = IndexMap::new();
            let mut joint_weights = IndexMap::new();
            let mut ones = IndexMap::new();
            for (t, (wt, u)) in w.into_iter().zip(us).enumerate() {
                let task = format!("T{t}");
                task_weights.insert(task.clone(), wt);
                let mut m = IndexMap::new();
                for (j, uj) in u.into_iter().enumerate() {
                    let joint = format!("j{j}");
                    ones.insert(PairKey::new(&task, &joint), 1.0);
                    m.insert(joint, uj);
                }
                joint_weights.insert(task, m);
            }
            WeightScheme {
                task_weights,
                joint_weights,
                feature_weights: alpha,
                bandwidth_targets: ones.clone(),
                efficiency_targets: ones.clone(),
                thermal_requirements: ones,
                rate_requirements: IndexMap::new(),
                headroom_delta: 0.0,
                breadth_floor: None,
                critical_tasks: Vec::new(),
                task_gate: None,
                bandwidth_slot: BandwidthSlot::TorqueBandwidth,
            }
        })
}

pub fn pair_keys(s: &WeightScheme) -> Vec<PairKey> {
    s.pairs().map(|(k, _, _)| k).collect()
}

/// A scheme with a feature vector for each of its pairs.
pub fn scheme_with_features() -> impl Strategy<Value = (WeightScheme, IndexMap<PairKey, FeatureVector>)> {
    scheme()
        .prop_flat_map(|s| {
            let keys = pair_keys(&s);
            let n = keys.len();
            (Just(s), Just(keys), prop::collection::vec(feature_vector(), n))
        })
        .prop_map(|(s, keys, xs)| (s, keys.into_iter().zip(xs).collect()))
}

/// Band and map on distinct grid points; `n` samples, rates ≥ 0.5 rad/s.
pub fn band_and_map(max_n: usize) -> impl Strategy<Value = (OperatingBand, CapabilityMap)> {
    (1usize..=max_n)
        .prop_flat_map(|n| {
            let row = (0.0f64..60.0, -50.0f64..400.0, 0.0f64..80.0);
            prop::collection::vec(row, n)
        })
        .prop_map(|rows| {
            let mut demand = Vec::new();
            let mut caps = Vec::new();
            for (k, (t_hum, p_hum, t_rob)) in rows.into_iter().enumerate() {
                let q = (k / 6) as f64 * 5.0;
                let omega = 0.5 + (k % 6) as f64 * 1.5;
                demand.push(DemandSample::new(q, omega, t_hum, p_hum));
                caps.push(CapabilitySample { q, omega, torque_rob: t_rob });
            }
            let band = OperatingBand::new("T0", "j0", demand, BTreeSet::new()).unwrap();
            (band, CapabilityMap::new("j0", "a", caps, "synthetic").unwrap())
        })
        .prop_filter("band needs positive power", |(b, _)| !b.degenerate)
}

pub fn measurement(band: OperatingBand, capability: CapabilityMap) -> PairMeasurement {
    PairMeasurement {
        rom_coverage: 0.9,
        dof_sufficiency: 1.0,
        band,
        capability,
        crossover_hz: 0.8,
        omega_max: None,
        efficiency: 0.7,
        torque_cont: 0.95,
    }
}

/// One task, one joint (`T0/j0`), unit targets, default feature weights.
pub fn single_pair_scheme() -> WeightScheme {
    let key = PairKey::new("T0", "j0");
    let one: IndexMap<PairKey, f64> = [(key, 1.0)].into_iter().collect();
    WeightScheme {
        task_weights: [("T0".to_string(), 1.0)].into_iter().collect(),
        joint_weights: [("T0".to_string(), [("j0".to_string(), 1.0)].into_iter().collect())].into_iter().collect(),
        feature_weights: FeatureWeights::default(),
        bandwidth_targets: one.clone(),
        efficiency_targets: one.clone(),
        thermal_requirements: one,
        rate_requirements: IndexMap::new(),
        headroom_delta: 0.0,
        breadth_floor: None,
        critical_tasks: Vec::new(),
        task_gate: None,
        bandwidth_slot: BandwidthSlot::TorqueBandwidth,
    }
}
