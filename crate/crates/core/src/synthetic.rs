//! Synthetic actuator with closed-form behaviour, for known-answer tests
//! without hardware.
//!
//! Electrical draw is `max(τ·ω, 0) + k·τ² + idle`, so every generated log
//! passes the power-balance check by construction.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::envelope::{CapabilityMap, CapabilitySample};
use crate::error::{Error, Result};
use crate::numeric::sign;
use crate::signals::{SweepSegment, TimeSeriesLog};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticActuator {
    /// Nm
    pub stall_torque: f64,
    /// Nm per rad/s
    pub torque_speed_slope: f64,
    pub gear_ratio: f64,
    /// kg·m²
    pub j_ref: f64,
    /// Nm·s/rad
    pub b_visc: f64,
    /// Nm
    pub f_coulomb: f64,
    /// °C/W
    pub thermal_resistance: f64,
    /// s
    pub thermal_time_constant: f64,
    /// W/Nm²
    pub copper_loss_coeff: f64,
    /// Hz
    pub crossover_true: f64,
    /// °C
    pub ambient_c: f64,
    /// V
    pub v_bus: f64,
    /// W
    pub idle_power: f64,
}

impl Default for SyntheticActuator {
    fn default() -> Self {
        SyntheticActuator {
            stall_torque: 44.0,
            torque_speed_slope: 1.0,
            gear_ratio: 50.0,
            j_ref: 0.05,
            b_visc: 0.8,
            f_coulomb: 1.2,
            thermal_resistance: 0.8,
            thermal_time_constant: 120.0,
            copper_loss_coeff: 0.02,
            crossover_true: 10.0,
            ambient_c: 25.0,
            v_bus: 48.0,
            idle_power: 5.0,
        }
    }
}

impl SyntheticActuator {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("stall_torque", self.stall_torque),
            ("torque_speed_slope", self.torque_speed_slope),
            ("gear_ratio", self.gear_ratio),
            ("j_ref", self.j_ref),
            ("b_visc", self.b_visc),
            ("f_coulomb", self.f_coulomb),
            ("thermal_resistance", self.thermal_resistance),
            ("thermal_time_constant", self.thermal_time_constant),
            ("copper_loss_coeff", self.copper_loss_coeff),
            ("crossover_true", self.crossover_true),
            ("v_bus", self.v_bus),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name: name.into(), value: v, rule: "must be positive".into() });
            }
        }
        if !(self.idle_power >= 0.0) || !self.ambient_c.is_finite() {
            return Err(Error::InvalidParameter { name: "idle_power".into(), value: self.idle_power, rule: "must be nonnegative".into() });
        }
        Ok(())
    }

    /// `max(0, stall − slope·ω)`, posture independent.
    pub fn torque_limit(&self, omega: f64) -> f64 {
        (self.stall_torque - self.torque_speed_slope * omega).max(0.0)
    }

    pub fn electrical_power(&self, torque: f64, omega: f64) -> f64 {
        (torque * omega).max(0.0) + self.copper_loss_coeff * torque * torque + self.idle_power
    }

    /// Steady winding rise above ambient at constant torque, °C.
    pub fn steady_rise(&self, torque: f64) -> f64 {
        self.thermal_resistance * self.copper_loss_coeff * torque * torque
    }

    /// Winding temperature at `t` under constant torque from ambient.
    pub fn rc_temperature(&self, torque: f64, t: f64) -> f64 {
        self.ambient_c + self.steady_rise(torque) * (1.0 - (-t / self.thermal_time_constant).exp())
    }

    /// Time at which constant torque from ambient first reaches `limit_c`;
    /// `None` if the steady temperature never gets there.
    pub fn limit_crossing_time(&self, torque: f64, limit_c: f64) -> Option<f64> {
        let need = (limit_c - self.ambient_c) / self.steady_rise(torque);
        if need <= 0.0 {
            Some(0.0)
        } else if need < 1.0 {
            Some(-self.thermal_time_constant * (1.0 - need).ln())
        } else {
            None
        }
    }

    /// Largest continuous torque whose steady temperature stays at `limit_c`.
    pub fn sustainable_torque(&self, limit_c: f64) -> f64 {
        ((limit_c - self.ambient_c).max(0.0) / (self.thermal_resistance * self.copper_loss_coeff)).sqrt()
    }

    /// Single-pole closed-loop torque response `1 / (1 + j f/f_c)`.
    pub fn closed_loop(&self, freq: f64) -> (f64, f64) {
        let x = freq / self.crossover_true;
        (1.0 / (1.0 + x * x).sqrt(), -x.atan().to_degrees())
    }
}

/// Gaussian noise source; the seed is written to the log header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub std: f64,
    pub seed: u64,
}

struct Noise {
    rng: ChaCha8Rng,
    dist: Option<Normal<f64>>,
}

impl Noise {
    fn new(spec: Option<NoiseSpec>) -> Result<Self> {
        let dist = match spec {
            Some(s) if s.std > 0.0 => Some(Normal::new(0.0, s.std).map_err(|e| Error::InvalidParameter {
                name: "noise_std".into(),
                value: s.std,
                rule: e.to_string(),
            })?),
            Some(s) if s.std < 0.0 => {
                return Err(Error::InvalidParameter { name: "noise_std".into(), value: s.std, rule: "must be nonnegative".into() })
            }
            _ => None,
        };
        Ok(Noise { rng: ChaCha8Rng::seed_from_u64(spec.map_or(0, |s| s.seed)), dist })
    }

    fn sample(&mut self) -> f64 {
        match &self.dist {
            Some(d) => d.sample(&mut self.rng),
            None => 0.0,
        }
    }
}

fn stamp_noise(log: &mut TimeSeriesLog, noise: Option<NoiseSpec>) {
    let (std, seed) = noise.map_or((0.0, 0), |n| (n.std, n.seed));
    log.set_meta("noise_std", format!("{std}"));
    log.set_meta("seed", seed.to_string());
}

fn check_rate(sample_rate: f64) -> Result<()> {
    if sample_rate >= crate::signals::log::MIN_SAMPLE_RATE_HZ && sample_rate.is_finite() {
        Ok(())
    } else {
        Err(Error::LowSampleRate { sample_rate_hz: sample_rate })
    }
}

pub fn generate_capability_map(act: &SyntheticActuator, joint: &str, axis: &str, grid: &[(f64, f64)]) -> Result<CapabilityMap> {
    act.validate()?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let samples = grid.iter().map(|&(q, omega)| CapabilitySample { q, omega, torque_rob: act.torque_limit(omega) }).collect();
    let conditions =
        format!("synthetic linear torque-speed law, stall {} Nm, slope {} Nm per rad/s", act.stall_torque, act.torque_speed_slope);
    CapabilityMap::new(joint, axis, samples, &conditions)
}

/// `n` frequencies spaced evenly in log between `lo` and `hi`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub sample_rate: f64,
    /// Minimum cycles per dwell.
    pub cycles: f64,
    pub noise: Option<NoiseSpec>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { sample_rate: 2000.0, cycles: 10.0, noise: None }
    }
}

/// Stepped-sine torque sweep through the single-pole loop. Actual torque is
/// the exact solution of `ẏ = ω_c (u − y)` including each dwell's start
/// transient; dwells are long enough for the discarded 20% to cover sixteen
/// loop time constants.
pub fn generate_sweep_log(act: &SyntheticActuator, freqs: &[f64], amplitude: f64, opts: SweepOptions) -> Result<TimeSeriesLog> {
    act.validate()?;
    check_rate(opts.sample_rate)?;
    if !(amplitude > 0.0) {
        return Err(Error::InvalidParameter { name: "amplitude".into(), value: amplitude, rule: "must be positive".into() });
    }
    if freqs.is_empty() {
        return Err(Error::Malformed("sweep needs at least one frequency".into()));
    }
    let wc = 2.0 * PI * act.crossover_true;
    let h = 1.0 / opts.sample_rate;
    let mut noise = Noise::new(opts.noise)?;
    let mut log = TimeSeriesLog::with_capacity(0, opts.sample_rate);
    log.set_meta("generator", "synthetic sweep");
    log.set_meta("crossover_true_hz", format!("{}", act.crossover_true));
    log.set_meta("amplitude_nm", format!("{amplitude}"));
    stamp_noise(&mut log, opts.noise);
    let mut y0 = 0.0;
    let mut k_global = 0usize;
    let mut segments = Vec::new();
    for &f in freqs {
        if !(f > 0.0) {
            return Err(Error::InvalidParameter { name: "frequency".into(), value: f, rule: "must be positive".into() });
        }
        let duration = (opts.cycles / f).max(80.0 / wc);
        let n = (duration * opts.sample_rate).ceil() as usize;
        let t0 = k_global as f64 * h;
        let w = 2.0 * PI * f;
        let (mag, phase_deg) = act.closed_loop(f);
        let phi = phase_deg.to_radians();
        let c = y0 - amplitude * mag * phi.sin();
        for k in 0..n {
            let tau = k as f64 * h;
            let u = amplitude * (w * tau).sin();
            let y = amplitude * mag * (w * tau + phi).sin() + c * (-wc * tau).exp();
            let measured = y + noise.sample();
            let p = act.electrical_power(measured, 0.0);
            log.push(t0 + tau, 0.0, 0.0, measured, u, act.v_bus, p / act.v_bus, act.ambient_c, act.ambient_c);
        }
        // State carried into the next dwell is the response one step on.
        let tau = n as f64 * h;
        y0 = amplitude * mag * (w * tau + phi).sin() + c * (-wc * tau).exp();
        segments.push(SweepSegment { freq_hz: f, t_start: t0, t_end: t0 + n as f64 * h });
        k_global += n;
    }
    for s in &segments {
        log.meta.push(("segment".into(), s.to_meta()));
    }
    Ok(log)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackdriveOptions {
    pub sample_rate: f64,
    /// s
    pub duration: f64,
    /// Length of the windowed multi-sine perturbation at the start, s.
    pub perturbation: f64,
    pub noise: Option<NoiseSpec>,
}

impl Default for BackdriveOptions {
    fn default() -> Self {
        BackdriveOptions { sample_rate: 1000.0, duration: 30.0, perturbation: 10.0, noise: None }
    }
}

const SLOW_FREQ_HZ: f64 = 0.4;
const SLOW_AMPLITUDE_DEG: f64 = 30.0;

/// Angle, rate and acceleration of the backdrive motion at `t`: a slow ±30°
/// sinusoid throughout plus a multi-sine burst windowed by `sin⁶(πt/T_p)`.
fn backdrive_motion(t: f64, t_p: f64) -> (f64, f64, f64) {
    let ws = 2.0 * PI * SLOW_FREQ_HZ;
    let a = SLOW_AMPLITUDE_DEG.to_radians();
    let mut q = a * (ws * t).sin();
    let mut omega = a * ws * (ws * t).cos();
    let mut alpha = -a * ws * ws * (ws * t).sin();
    if t < t_p {
        // p(t) = g(t)·m(t), g = sin⁶(πt/T_p)
        let k = PI / t_p;
        let (s, c) = (k * t).sin_cos();
        let g = s.powi(6);
        let dg = 6.0 * s.powi(5) * c * k;
        let (w1, w2) = (2.0 * PI * 0.7, 2.0 * PI * 1.2);
        let (a1, a2) = (0.8, 0.5);
        let m = a1 * (w1 * t).sin() + a2 * (w2 * t).sin();
        let dm = a1 * w1 * (w1 * t).cos() + a2 * w2 * (w2 * t).cos();
        // The perturbation is defined on rate; q gets its running integral
        // only approximately, which no analysis depends on.
        q += g * m / w1;
        omega += g * m;
        alpha += dg * m + g * dm;
    }
    (q.to_degrees(), omega, alpha)
}

/// Zero-command backdrive record with torque `J·ω̇ + b·ω + f_c·sign(ω)`.
/// The header names the slow-sinusoid segment used for the p95 statistic.
pub fn generate_backdrive_log(act: &SyntheticActuator, opts: BackdriveOptions) -> Result<TimeSeriesLog> {
    act.validate()?;
    check_rate(opts.sample_rate)?;
    if !(opts.duration > opts.perturbation && opts.perturbation > 0.0) {
        return Err(Error::InvalidRange { what: "perturbation window".into(), lo: opts.perturbation, hi: opts.duration });
    }
    let n = (opts.duration * opts.sample_rate).round() as usize;
    let mut noise = Noise::new(opts.noise)?;
    let mut log = TimeSeriesLog::with_capacity(n, opts.sample_rate);
    log.set_meta("generator", "synthetic backdrive");
    log.set_meta("true_j_ref", format!("{}", act.j_ref));
    log.set_meta("true_b_visc", format!("{}", act.b_visc));
    log.set_meta("true_f_coulomb", format!("{}", act.f_coulomb));
    log.set_meta("slow_segment_s", format!("{},{}", opts.perturbation, opts.duration));
    stamp_noise(&mut log, opts.noise);
    for k in 0..n {
        let t = k as f64 / opts.sample_rate;
        let (q, omega, alpha) = backdrive_motion(t, opts.perturbation);
        let tau = act.j_ref * alpha + act.b_visc * omega + act.f_coulomb * sign(omega);
        let measured = tau + noise.sample();
        // External work drives the joint; the drive itself only idles.
        let p = act.idle_power;
        log.push(t, q, omega, measured, 0.0, act.v_bus, p / act.v_bus, act.ambient_c, act.ambient_c);
    }
    Ok(log)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DutyProfile {
    Continuous,
    /// Repeating `on_s` at the torque level, `off_s` at zero.
    Bursts {
        on_s: f64,
        off_s: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalOptions {
    pub sample_rate: f64,
    /// s
    pub duration: f64,
    /// Output speed during the duty, rad/s.
    pub omega: f64,
    /// Winding limit at which the command drops to the sustainable torque.
    pub temp_limit_c: Option<f64>,
    pub noise: Option<NoiseSpec>,
}

impl Default for ThermalOptions {
    fn default() -> Self {
        ThermalOptions { sample_rate: 1000.0, duration: 120.0, omega: 0.0, temp_limit_c: None, noise: None }
    }
}

/// Duty-cycle log with exact first-order winding temperature (torque held
/// over each sample). The gear sensor follows the winding with four times
/// the time constant. Once the winding reaches the limit the command drops
/// to [`SyntheticActuator::sustainable_torque`] for the rest of the log.
pub fn generate_thermal_duty_log(
    act: &SyntheticActuator,
    profile: DutyProfile,
    torque: f64,
    opts: ThermalOptions,
) -> Result<TimeSeriesLog> {
    act.validate()?;
    check_rate(opts.sample_rate)?;
    if !(torque >= 0.0) {
        return Err(Error::InvalidParameter { name: "torque".into(), value: torque, rule: "must be nonnegative".into() });
    }
    if let DutyProfile::Bursts { on_s, off_s } = profile {
        if !(on_s > 0.0 && off_s >= 0.0) {
            return Err(Error::InvalidRange { what: "burst on/off".into(), lo: on_s, hi: off_s });
        }
    }
    let h = 1.0 / opts.sample_rate;
    let n = (opts.duration * opts.sample_rate).round() as usize + 1;
    let decay = (-h / act.thermal_time_constant).exp();
    let decay_gear = (-h / (4.0 * act.thermal_time_constant)).exp();
    let mut noise = Noise::new(opts.noise)?;
    let mut log = TimeSeriesLog::with_capacity(n, opts.sample_rate);
    log.set_meta("generator", "synthetic thermal duty");
    log.set_meta("torque_level_nm", format!("{torque}"));
    match profile {
        DutyProfile::Continuous => log.set_meta("profile", "continuous"),
        DutyProfile::Bursts { on_s, off_s } => log.set_meta("profile", format!("bursts {on_s} s on, {off_s} s off")),
    }
    if let Some(l) = opts.temp_limit_c {
        log.set_meta("temp_limit_c", format!("{l}"));
    }
    stamp_noise(&mut log, opts.noise);
    let sustained = opts.temp_limit_c.map(|l| act.sustainable_torque(l));
    let (mut tm, mut tg) = (act.ambient_c, act.ambient_c);
    let mut derated = false;
    for k in 0..n {
        let t = k as f64 * h;
        if let Some(l) = opts.temp_limit_c {
            derated |= tm >= l;
        }
        let active = match profile {
            DutyProfile::Continuous => true,
            DutyProfile::Bursts { on_s, off_s } => (t + 1e-9 * h) % (on_s + off_s) < on_s,
        };
        let level = if derated { sustained.unwrap_or(torque).min(torque) } else { torque };
        let cmd = if active { level } else { 0.0 };
        let measured = cmd + noise.sample();
        let p = act.electrical_power(cmd, opts.omega);
        log.push(t, 0.0, opts.omega, measured, cmd, act.v_bus, p / act.v_bus, tm, tg);
        let target = act.ambient_c + act.steady_rise(cmd);
        let tm_next = target + (tm - target) * decay;
        tg = tm + (tg - tm) * decay_gear;
        tm = tm_next;
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{compute_frf, detect_plateau, find_crossover, fit_friction, power_balance_check, sweep_freqs, CrossoverKind};

    #[test]
    fn capability_law() {
        let act = SyntheticActuator { stall_torque: 36.0, torque_speed_slope: 0.75, ..Default::default() };
        let m = generate_capability_map(&act, "ankle", "dp", &[(10.0, 8.0), (10.0, 60.0)]).unwrap();
        assert_eq!(m.torque_at(10.0, 8.0), Some(30.0));
        assert_eq!(m.torque_at(10.0, 60.0), Some(0.0));
        let act = SyntheticActuator::default();
        let grid: Vec<(f64, f64)> = (8..=12).map(|w| (10.0, w as f64)).collect();
        let m = generate_capability_map(&act, "ankle", "dp", &grid).unwrap();
        let t: Vec<f64> = m.samples().iter().map(|s| s.torque_rob).collect();
        assert_eq!(t, vec![36.0, 35.0, 34.0, 33.0, 32.0]);
        assert_eq!(generate_capability_map(&act, "a", "b", &[]), Err(Error::EmptyGrid));
    }

    #[test]
    fn sweep_recovers_crossover() {
        let act = SyntheticActuator::default();
        let freqs = log_spaced(1.0, 40.0, 33);
        let log = generate_sweep_log(&act, &freqs, 5.0, SweepOptions::default()).unwrap();
        let frf = compute_frf(&log, &sweep_freqs(&log).unwrap()).unwrap();
        for p in &frf {
            let (m, ph) = act.closed_loop(p.freq);
            assert!((p.magnitude - m).abs() < 1e-6 * m, "{p:?}");
            assert!((p.phase - ph).abs() < 1e-4, "{p:?} {ph}");
        }
        let c = find_crossover(&frf).unwrap();
        assert!((c.freq_hz - 10.0).abs() < 0.2, "{c}");
        assert!(power_balance_check(&log).pass);
    }

    #[test]
    fn sweep_amplitude_is_linear_and_range_is_flagged() {
        let act = SyntheticActuator { crossover_true: 60.0, ..Default::default() };
        let freqs = log_spaced(1.0, 30.0, 8);
        let a = generate_sweep_log(&act, &freqs, 1.0, SweepOptions::default()).unwrap();
        let b = generate_sweep_log(&act, &freqs, 2.0, SweepOptions::default()).unwrap();
        let fa = compute_frf(&a, &freqs).unwrap();
        let fb = compute_frf(&b, &freqs).unwrap();
        for (x, y) in fa.iter().zip(&fb) {
            assert!((x.magnitude - y.magnitude).abs() < 1e-12 && (x.phase - y.phase).abs() < 1e-9);
        }
        assert_eq!(find_crossover(&fa).unwrap().kind, CrossoverKind::AboveRange);
    }

    #[test]
    fn backdrive_is_recovered() {
        let act = SyntheticActuator::default();
        let log = generate_backdrive_log(&act, BackdriveOptions::default()).unwrap();
        let fit = fit_friction(&log).unwrap();
        for (got, want) in [(fit.j_ref, act.j_ref), (fit.b_visc, act.b_visc), (fit.f_coulomb, act.f_coulomb)] {
            assert!((got - want).abs() < 1e-6 * want, "{fit:?}");
        }
        assert!(power_balance_check(&log).pass);
    }

    #[test]
    fn thermal_below_limit_holds_command() {
        let act = SyntheticActuator::default();
        assert!(act.steady_rise(48.0) / act.thermal_time_constant < 0.5);
        let log = generate_thermal_duty_log(&act, DutyProfile::Continuous, 48.0, ThermalOptions::default()).unwrap();
        let r = detect_plateau(&log, 0.5, 10.0).unwrap();
        assert_eq!(r.torque_cont, 48.0);
        assert_eq!(r.time_to_derate, None);
        let t_end = log.span();
        assert!((r.final_temp_motor - act.rc_temperature(48.0, t_end)).abs() < 1e-6);
        assert!(power_balance_check(&log).pass);
    }

    #[test]
    fn thermal_derates_at_closed_form_time() {
        let act = SyntheticActuator::default();
        let opts = ThermalOptions { duration: 150.0, temp_limit_c: Some(100.0), ..Default::default() };
        let log = generate_thermal_duty_log(&act, DutyProfile::Continuous, 100.0, opts).unwrap();
        let r = detect_plateau(&log, 0.5, 10.0).unwrap();
        let t_star = act.limit_crossing_time(100.0, 100.0).unwrap();
        let got = r.time_to_derate.unwrap();
        assert!(got >= t_star && got - t_star <= 1.0 / 1000.0 + 1e-9, "{got} vs {t_star}");
    }

    #[test]
    fn zero_torque_stays_at_ambient() {
        let act = SyntheticActuator::default();
        let log = generate_thermal_duty_log(&act, DutyProfile::Bursts { on_s: 0.2, off_s: 0.3 }, 0.0, ThermalOptions::default()).unwrap();
        assert!(log.temp_motor.iter().all(|&t| t == act.ambient_c));
    }

    #[test]
    fn seeds_are_recorded_and_deterministic() {
        let act = SyntheticActuator::default();
        let opts = BackdriveOptions { noise: Some(NoiseSpec { std: 0.02, seed: 7 }), ..Default::default() };
        let a = generate_backdrive_log(&act, opts).unwrap();
        assert_eq!(a, generate_backdrive_log(&act, opts).unwrap());
        assert_eq!(a.meta("seed"), Some("7"));
    }
}
