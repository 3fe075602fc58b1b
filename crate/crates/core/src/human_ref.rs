//! Human demand fields on discretized task bands.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceBody {
    /// kg
    pub mass: f64,
    /// m
    pub height: f64,
}

impl Default for ReferenceBody {
    fn default() -> Self {
        ReferenceBody { mass: 75.0, height: 1.75 }
    }
}

impl ReferenceBody {
    pub fn new(mass: f64, height: f64) -> Result<Self> {
        for (name, v) in [("mass_kg", mass), ("height_m", height)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name: name.into(), value: v, rule: "must be positive".into() });
            }
        }
        Ok(ReferenceBody { mass, height })
    }
}

/// Mass-normalized torque (Nm/kg) and power (W/kg) to absolute Nm and W.
pub fn scale_to_absolute(body: &ReferenceBody, normalized_torque: f64, normalized_power: f64) -> (f64, f64) {
    (body.mass * normalized_torque, body.mass * normalized_power)
}

pub fn torque_from_power(power: f64, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::ZeroRate);
    }
    Ok(power / omega)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandSample {
    /// deg
    pub q: f64,
    /// rad/s
    pub omega: f64,
    /// Nm
    pub torque_hum: f64,
    /// W
    pub power_hum: f64,
    pub weight: f64,
}

impl DemandSample {
    pub fn new(q: f64, omega: f64, torque_hum: f64, power_hum: f64) -> Self {
        DemandSample { q, omega, torque_hum, power_hum, weight: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub samples: Vec<DemandSample>,
    /// Set when no sample carries positive power.
    pub degenerate: bool,
}

/// Sets `weight_i = max(P_i, 0) / Σ max(P_k, 0)`.
pub fn normalize_weights(samples: Vec<DemandSample>) -> Result<Normalized> {
    if samples.is_empty() {
        return Err(Error::EmptyBand);
    }
    let total: f64 = samples.iter().map(|s| s.power_hum.max(0.0)).sum();
    let degenerate = !(total > 0.0);
    let samples =
        samples.into_iter().map(|s| DemandSample { weight: if degenerate { 0.0 } else { s.power_hum.max(0.0) / total }, ..s }).collect();
    Ok(Normalized { samples, degenerate })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingBand {
    pub task: String,
    pub joint: String,
    pub samples: Vec<DemandSample>,
    pub axes: BTreeSet<String>,
    pub degenerate: bool,
}

impl OperatingBand {
    /// Builds a band and normalizes its weights. Duplicate (q, ω) points are
    /// rejected so band samples map one-to-one onto capability samples.
    pub fn new(task: &str, joint: &str, samples: Vec<DemandSample>, axes: BTreeSet<String>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for s in &samples {
            if !seen.insert(crate::numeric::point_key(s.q, s.omega)) {
                return Err(Error::DuplicateSample { q: s.q, omega: s.omega });
            }
            if !(s.q.is_finite() && s.omega.is_finite() && s.torque_hum.is_finite() && s.power_hum.is_finite()) {
                return Err(Error::Malformed(format!("non-finite band sample in {task}/{joint}")));
            }
        }
        let n = normalize_weights(samples)?;
        Ok(OperatingBand { task: task.into(), joint: joint.into(), samples: n.samples, axes, degenerate: n.degenerate })
    }

    pub fn total_positive_power(&self) -> f64 {
        self.samples.iter().map(|s| s.power_hum.max(0.0)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrajectory {
    pub phase: Vec<f64>,
    pub q: Vec<f64>,
    pub omega: Vec<f64>,
    pub power: Vec<f64>,
}

impl PhaseTrajectory {
    pub fn new(phase: Vec<f64>, q: Vec<f64>, omega: Vec<f64>, power: Vec<f64>) -> Result<Self> {
        let n = phase.len();
        if q.len() != n || omega.len() != n || power.len() != n {
            return Err(Error::Malformed("trajectory channels differ in length".into()));
        }
        if phase.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Malformed("phase values must lie in [0, 1]".into()));
        }
        if phase.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Malformed("phase must be strictly increasing".into()));
        }
        Ok(PhaseTrajectory { phase, q, omega, power })
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    pub fn total_positive_power(&self) -> f64 {
        self.power.iter().map(|p| p.max(0.0)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BinAssignment {
    #[default]
    Nearest,
    /// Splits each sample's power over the four surrounding bins of a
    /// rectangular grid.
    Bilinear,
}

/// Accumulates positive trajectory power into grid bins. Each bin's
/// `power_hum` is the accumulated power mass; `torque_hum` is the
/// power-weighted mean of contributing sample torques (P/ω).
pub fn phase_to_grid(
    traj: &PhaseTrajectory,
    grid: &[(f64, f64)],
    task: &str,
    joint: &str,
    assignment: BinAssignment,
) -> Result<OperatingBand> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut mass = vec![0.0; grid.len()];
    let mut torque_mass = vec![0.0; grid.len()];
    let rect = match assignment {
        BinAssignment::Nearest => None,
        BinAssignment::Bilinear => Some(RectGrid::from_points(grid)?),
    };
    for i in 0..traj.len() {
        let p = traj.power[i];
        if !(p > 0.0) {
            continue;
        }
        let torque = torque_from_power(p, traj.omega[i])?;
        let mut deposit = |bin: usize, share: f64| {
            mass[bin] += share * p;
            torque_mass[bin] += share * p * torque;
        };
        match &rect {
            None => deposit(nearest_bin(grid, traj.q[i], traj.omega[i]), 1.0),
            Some(r) => {
                for (bin, share) in r.split(traj.q[i], traj.omega[i]) {
                    if share > 0.0 {
                        deposit(bin, share);
                    }
                }
            }
        }
    }
    let samples = grid
        .iter()
        .enumerate()
        .map(|(k, &(q, omega))| {
            let torque = if mass[k] > 0.0 { torque_mass[k] / mass[k] } else { 0.0 };
            DemandSample::new(q, omega, torque, mass[k])
        })
        .collect();
    OperatingBand::new(task, joint, samples, BTreeSet::new())
}

fn span(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let s = hi - lo;
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Nearest bin in span-normalized (q, ω); ties go to the earlier bin.
pub fn nearest_bin(grid: &[(f64, f64)], q: f64, omega: f64) -> usize {
    let sq = span(grid.iter().map(|g| g.0));
    let sw = span(grid.iter().map(|g| g.1));
    let mut best = (0, f64::INFINITY);
    for (k, &(gq, gw)) in grid.iter().enumerate() {
        let d = ((q - gq) / sq).powi(2) + ((omega - gw) / sw).powi(2);
        if d < best.1 {
            best = (k, d);
        }
    }
    best.0
}

struct RectGrid {
    qs: Vec<f64>,
    ws: Vec<f64>,
    index: Vec<usize>,
}

impl RectGrid {
    fn from_points(grid: &[(f64, f64)]) -> Result<Self> {
        let mut qs: Vec<f64> = grid.iter().map(|g| g.0).collect();
        let mut ws: Vec<f64> = grid.iter().map(|g| g.1).collect();
        for v in [&mut qs, &mut ws] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        if qs.len() * ws.len() != grid.len() {
            return Err(Error::Malformed("bilinear assignment needs a full rectangular grid".into()));
        }
        let mut index = vec![usize::MAX; grid.len()];
        for (k, &(q, w)) in grid.iter().enumerate() {
            let i = qs.iter().position(|&x| x == q).unwrap();
            let j = ws.iter().position(|&x| x == w).unwrap();
            index[i * ws.len() + j] = k;
        }
        if index.contains(&usize::MAX) {
            return Err(Error::Malformed("bilinear assignment needs a full rectangular grid".into()));
        }
        Ok(RectGrid { qs, ws, index })
    }

    /// Bracketing cell and fractional position along one axis, clamped.
    fn locate(axis: &[f64], x: f64) -> (usize, usize, f64) {
        if axis.len() == 1 || x <= axis[0] {
            return (0, 0, 0.0);
        }
        let last = axis.len() - 1;
        if x >= axis[last] {
            return (last, last, 0.0);
        }
        let hi = axis.partition_point(|&a| a <= x);
        let lo = hi - 1;
        (lo, hi, (x - axis[lo]) / (axis[hi] - axis[lo]))
    }

    fn split(&self, q: f64, omega: f64) -> [(usize, f64); 4] {
        let (i0, i1, fq) = Self::locate(&self.qs, q);
        let (j0, j1, fw) = Self::locate(&self.ws, omega);
        let at = |i: usize, j: usize| self.index[i * self.ws.len() + j];
        [(at(i0, j0), (1.0 - fq) * (1.0 - fw)), (at(i1, j0), fq * (1.0 - fw)), (at(i0, j1), (1.0 - fq) * fw), (at(i1, j1), fq * fw)]
    }
}

/// `n_q × n_omega` points, q-major, endpoints inclusive.
pub fn build_band_grid(q_range: (f64, f64), omega_range: (f64, f64), n_q: usize, n_omega: usize) -> Result<Vec<(f64, f64)>> {
    if n_q == 0 || n_omega == 0 {
        return Err(Error::EmptyGrid);
    }
    let qs = linspace("q_range", q_range, n_q)?;
    let ws = linspace("omega_range", omega_range, n_omega)?;
    Ok(qs.iter().flat_map(|&q| ws.iter().map(move |&w| (q, w))).collect())
}

fn linspace(what: &str, (lo, hi): (f64, f64), n: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi || (n > 1 && lo == hi) {
        return Err(Error::InvalidRange { what: what.into(), lo, hi });
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|k| if k == n - 1 { hi } else { lo + step * k as f64 }).collect())
}
