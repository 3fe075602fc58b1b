//! Stepped-sine frequency response and −3 dB crossover.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use nalgebra::{Matrix3, Vector3};

use super::log::TimeSeriesLog;
use crate::config_io::table::Table;
use crate::error::{Error, Result};

pub const MIN_CYCLES: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrfPoint {
    /// Hz
    pub freq: f64,
    pub magnitude: f64,
    /// deg, unwrapped across the sweep
    pub phase: f64,
}

/// One dwell of a stepped sweep, `t_start ≤ t < t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSegment {
    pub freq_hz: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl SweepSegment {
    pub fn to_meta(&self) -> String {
        format!("{},{},{}", self.freq_hz, self.t_start, self.t_end)
    }

    pub fn parse_meta(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Malformed(format!("bad segment entry `{s}`")))?;
        match v[..] {
            [freq_hz, t_start, t_end] if freq_hz > 0.0 && t_end > t_start => Ok(SweepSegment { freq_hz, t_start, t_end }),
            _ => Err(Error::Malformed(format!("bad segment entry `{s}`"))),
        }
    }
}

/// Segment table carried in a sweep log header (`# segment: f,t0,t1`).
pub fn sweep_segments(log: &TimeSeriesLog) -> Result<Vec<SweepSegment>> {
    log.meta.iter().filter(|(k, _)| k == "segment").map(|(_, v)| SweepSegment::parse_meta(v)).collect()
}

/// Frequencies listed in the log's segment table, in sweep order.
pub fn sweep_freqs(log: &TimeSeriesLog) -> Result<Vec<f64>> {
    Ok(sweep_segments(log)?.iter().map(|s| s.freq_hz).collect())
}

/// Least-squares fit of `a·cos + b·sin + c` at one frequency; returns the
/// complex amplitude `a − j·b` as (re, im).
fn sine_fit(t: &[f64], x: &[f64], freq: f64, t_ref: f64) -> (f64, f64) {
    let w = 2.0 * PI * freq;
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for (&ti, &xi) in t.iter().zip(x) {
        let (s, c) = (w * (ti - t_ref)).sin_cos();
        let row = Vector3::new(c, s, 1.0);
        ata += row * row.transpose();
        atb += row * xi;
    }
    let sol = ata.lu().solve(&atb).unwrap_or_else(Vector3::zeros);
    (sol[0], -sol[1])
}

/// Per-frequency correlation of actual against commanded torque. With a
/// segment table, each frequency uses its own dwell; otherwise the whole
/// record. The first 20% of each dwell (at least one cycle) is discarded as
/// transient and an integer number of cycles is kept.
pub fn compute_frf(log: &TimeSeriesLog, freqs: &[f64]) -> Result<Vec<FrfPoint>> {
    let segments = sweep_segments(log)?;
    let mut out = Vec::with_capacity(freqs.len());
    for &f in freqs {
        if !(f > 0.0) {
            return Err(Error::InvalidParameter { name: "freq_hz".into(), value: f, rule: "must be positive".into() });
        }
        if !(log.sample_rate > 10.0 * f) {
            return Err(Error::AliasedFrequency { freq_hz: f, sample_rate_hz: log.sample_rate });
        }
        let (t0, t1) = match segments.iter().find(|s| (s.freq_hz - f).abs() <= 1e-9 * f) {
            Some(s) => (s.t_start, s.t_end),
            None if segments.is_empty() => (log.t[0], log.t[log.len() - 1] + 1.0 / log.sample_rate),
            None => return Err(Error::Malformed(format!("no sweep segment at {f} Hz"))),
        };
        let cycles = (t1 - t0) * f;
        if cycles < MIN_CYCLES {
            return Err(Error::InsufficientCycles { freq_hz: f, cycles });
        }
        let skip = (0.2 * cycles).floor().max(1.0);
        let keep = (cycles - skip).floor();
        let start = t0 + skip / f;
        let (i0, i1) = log.index_range(start, start + keep / f);
        let t = &log.t[i0..i1];
        let cmd = sine_fit(t, &log.torque_cmd[i0..i1], f, start);
        let act = sine_fit(t, &log.torque[i0..i1], f, start);
        let denom = cmd.0 * cmd.0 + cmd.1 * cmd.1;
        if !(denom > 0.0) {
            return Err(Error::InsufficientExcitation(format!("no command excitation at {f} Hz")));
        }
        let re = (act.0 * cmd.0 + act.1 * cmd.1) / denom;
        let im = (act.1 * cmd.0 - act.0 * cmd.1) / denom;
        out.push(FrfPoint { freq: f, magnitude: re.hypot(im), phase: im.atan2(re).to_degrees() });
    }
    unwrap_phase(&mut out);
    Ok(out)
}

fn unwrap_phase(points: &mut [FrfPoint]) {
    for k in 1..points.len() {
        let prev = points[k - 1].phase;
        let mut p = points[k].phase;
        while p - prev > 180.0 {
            p -= 360.0;
        }
        while p - prev < -180.0 {
            p += 360.0;
        }
        points[k].phase = p;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossoverKind {
    Crossed,
    /// Magnitude never fell below 1/√2; `freq_hz` is the range maximum.
    AboveRange,
    /// Magnitude already below 1/√2 at the first probe.
    BelowRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub freq_hz: f64,
    pub phase_margin_deg: Option<f64>,
    pub kind: CrossoverKind,
    /// Every downward crossing found; more than one means a non-monotone response.
    pub crossings: Vec<f64>,
}

impl Crossover {
    pub fn non_monotone(&self) -> bool {
        self.crossings.len() > 1
    }
}

impl fmt::Display for Crossover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CrossoverKind::Crossed => write!(f, "f_c = {:.1} Hz", self.freq_hz)?,
            CrossoverKind::AboveRange => write!(f, "f_c ≥ {} Hz", self.freq_hz)?,
            CrossoverKind::BelowRange => write!(f, "f_c ≤ {} Hz", self.freq_hz)?,
        }
        if let Some(pm) = self.phase_margin_deg {
            write!(f, ", phase margin {pm:.1} deg")?;
        }
        if self.non_monotone() {
            let all: Vec<String> = self.crossings.iter().map(|c| format!("{c:.2}")).collect();
            write!(f, " (non-monotone: crossings at {} Hz)", all.join(", "))?;
        }
        Ok(())
    }
}

/// Locates the first downward crossing of 1/√2 by interpolating in dB
/// against log-frequency.
pub fn find_crossover(frf: &[FrfPoint]) -> Result<Crossover> {
    if frf.is_empty() {
        return Err(Error::Malformed("empty FRF".into()));
    }
    if frf.windows(2).any(|w| !(w[1].freq > w[0].freq)) {
        return Err(Error::Malformed("FRF must be sorted by strictly increasing frequency".into()));
    }
    if frf.iter().any(|p| !(p.freq > 0.0) || !(p.magnitude >= 0.0)) {
        return Err(Error::Malformed("FRF points need positive frequency and nonnegative magnitude".into()));
    }
    if frf[0].magnitude < FRAC_1_SQRT_2 {
        return Ok(Crossover { freq_hz: frf[0].freq, phase_margin_deg: None, kind: CrossoverKind::BelowRange, crossings: vec![] });
    }
    let target = 20.0 * FRAC_1_SQRT_2.log10();
    let db = |m: f64| 20.0 * m.max(f64::MIN_POSITIVE).log10();
    let mut crossings = Vec::new();
    let mut first_phase = None;
    for w in frf.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.magnitude >= FRAC_1_SQRT_2 && b.magnitude < FRAC_1_SQRT_2 {
            let (ya, yb) = (db(a.magnitude), db(b.magnitude));
            let frac = (target - ya) / (yb - ya);
            let (xa, xb) = (a.freq.ln(), b.freq.ln());
            crossings.push((xa + frac * (xb - xa)).exp());
            if first_phase.is_none() {
                first_phase = Some(a.phase + frac * (b.phase - a.phase));
            }
        }
    }
    match first_phase {
        Some(phase) => {
            Ok(Crossover { freq_hz: crossings[0], phase_margin_deg: Some(180.0 + phase), kind: CrossoverKind::Crossed, crossings })
        }
        None => Ok(Crossover { freq_hz: frf[frf.len() - 1].freq, phase_margin_deg: None, kind: CrossoverKind::AboveRange, crossings }),
    }
}

pub const FRF_COLUMNS: [&str; 3] = ["freq_hz", "magnitude", "phase_deg"];

/// FRF table with the crossover summary as a header line.
pub fn frf_table(frf: &[FrfPoint], crossover: Option<&Crossover>) -> Table {
    let mut t = Table::new(&FRF_COLUMNS);
    if let Some(c) = crossover {
        t.push_meta("crossover", c.to_string());
    }
    for p in frf {
        t.push_row(vec![format!("{}", p.freq), format!("{}", p.magnitude), format!("{}", p.phase)]);
    }
    t
}

pub fn parse_frf_table(text: &str) -> Result<Vec<FrfPoint>> {
    let t = Table::parse(text)?;
    t.expect_columns(&FRF_COLUMNS)?;
    t.rows
        .iter()
        .map(|r| Ok(FrfPoint { freq: r.f64(0, "freq_hz")?, magnitude: r.f64(1, "magnitude")?, phase: r.f64(2, "phase_deg")? }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pole(f: f64, fc: f64) -> FrfPoint {
        let x = f / fc;
        FrfPoint { freq: f, magnitude: 1.0 / (1.0 + x * x).sqrt(), phase: -x.atan().to_degrees() }
    }

    fn sine_log(freqs: &[f64], dwell: f64, gain_phase: impl Fn(f64) -> (f64, f64)) -> TimeSeriesLog {
        let fs = 2000.0;
        let mut log = TimeSeriesLog::with_capacity(0, fs);
        let mut t0 = 0.0;
        let mut k = 0usize;
        for &f in freqs {
            let (g, ph) = gain_phase(f);
            let seg = SweepSegment { freq_hz: f, t_start: t0, t_end: t0 + dwell };
            log.meta.push(("segment".into(), seg.to_meta()));
            while (k as f64) / fs < t0 + dwell {
                let t = k as f64 / fs;
                let arg = 2.0 * PI * f * (t - t0);
                log.push(t, 0.0, 0.0, 3.0 * g * (arg + ph.to_radians()).sin(), 3.0 * arg.sin(), 48.0, 1.0, 25.0, 25.0);
                k += 1;
            }
            t0 += dwell;
        }
        log
    }

    #[test]
    fn identity_plant() {
        let freqs = [2.0, 5.0, 10.0, 40.0];
        let log = sine_log(&freqs, 3.0, |_| (1.0, 0.0));
        let frf = compute_frf(&log, &freqs).unwrap();
        for p in &frf {
            assert!((p.magnitude - 1.0).abs() < 1e-9, "{p:?}");
            assert!(p.phase.abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn steady_state_single_pole_at_corner() {
        let freqs = [10.0];
        let log = sine_log(&freqs, 2.0, |f| {
            let p = pole(f, 10.0);
            (p.magnitude, p.phase)
        });
        let frf = compute_frf(&log, &freqs).unwrap();
        assert!((frf[0].magnitude - FRAC_1_SQRT_2).abs() < 0.01 * FRAC_1_SQRT_2);
        assert!((frf[0].phase + 45.0).abs() < 1e-6);
    }

    #[test]
    fn frf_errors() {
        let log = sine_log(&[2.0], 2.0, |_| (1.0, 0.0));
        assert!(matches!(compute_frf(&log, &[2.0]), Err(Error::InsufficientCycles { .. })));
        let log = sine_log(&[150.0], 1.0, |_| (1.0, 0.0));
        assert!(matches!(compute_frf(&log, &[250.0]), Err(Error::AliasedFrequency { .. })));
        assert!(compute_frf(&log, &[100.0]).is_err());
    }

    #[test]
    fn crossover_single_pole_samples() {
        let frf: Vec<_> = [5.0, 8.0, 10.0, 12.0, 20.0].iter().map(|&f| pole(f, 10.0)).collect();
        let c = find_crossover(&frf).unwrap();
        assert_eq!(c.kind, CrossoverKind::Crossed);
        assert!((c.freq_hz - 10.0).abs() < 0.2);
        assert!((c.phase_margin_deg.unwrap() - 135.0).abs() < 1.0);
        assert!(!c.non_monotone());
    }

    #[test]
    fn flat_response_reports_lower_bound() {
        let frf: Vec<_> = [1.0, 10.0, 60.0].iter().map(|&f| FrfPoint { freq: f, magnitude: 1.0, phase: 0.0 }).collect();
        let c = find_crossover(&frf).unwrap();
        assert_eq!(c.kind, CrossoverKind::AboveRange);
        assert_eq!(c.to_string(), "f_c ≥ 60 Hz");
    }

    #[test]
    fn multiple_crossings_reported() {
        let mags = [1.0, 0.5, 0.9, 0.3];
        let frf: Vec<_> = mags.iter().enumerate().map(|(k, &m)| FrfPoint { freq: 2f64.powi(k as i32), magnitude: m, phase: 0.0 }).collect();
        let c = find_crossover(&frf).unwrap();
        assert_eq!(c.crossings.len(), 2);
        assert!(c.non_monotone());
        assert_eq!(c.freq_hz, c.crossings[0]);
        assert!(c.freq_hz > 1.0 && c.freq_hz < 2.0);
        let below = [FrfPoint { freq: 1.0, magnitude: 0.1, phase: 0.0 }];
        assert_eq!(find_crossover(&below).unwrap().kind, CrossoverKind::BelowRange);
    }

    #[test]
    fn crossover_invariant_to_common_scaling() {
        let freqs = [4.0, 8.0, 12.0, 16.0];
        let mk = |amp: f64| {
            let mut log = sine_log(&freqs, 2.0, |f| {
                let p = pole(f, 9.0);
                (p.magnitude, p.phase)
            });
            for k in 0..log.len() {
                log.torque[k] *= amp;
                log.torque_cmd[k] *= amp;
            }
            find_crossover(&compute_frf(&log, &freqs).unwrap()).unwrap()
        };
        let (a, b) = (mk(1.0), mk(7.5));
        assert!((a.freq_hz - b.freq_hz).abs() < 1e-9 * a.freq_hz);
    }

    #[test]
    fn table_round_trip() {
        let frf: Vec<_> = [5.0, 8.0, 10.0, 12.0, 20.0].iter().map(|&f| pole(f, 10.0)).collect();
        let c = find_crossover(&frf).unwrap();
        let text = frf_table(&frf, Some(&c)).to_text();
        assert_eq!(parse_frf_table(&text).unwrap(), frf);
        assert!(text.starts_with("# crossover: f_c = "));
    }
}
