//! Backdrive friction and reflected-inertia identification.

use nalgebra::{Matrix3, Vector3};

use super::log::TimeSeriesLog;
use crate::error::{Error, Result};
use crate::numeric::{quantile, sign};

const MAX_IRLS_ITERATIONS: usize = 10;
const HUBER_MAD_MULTIPLE: f64 = 3.0;
const MIN_USABLE_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionFit {
    /// kg·m²
    pub j_ref: f64,
    /// Nm·s/rad
    pub b_visc: f64,
    /// Nm
    pub f_coulomb: f64,
    /// 95th percentile of |τ| on the slow segment, Nm.
    pub backdrive_p95: f64,
    /// Unweighted RMS residual of the final fit, Nm.
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Five-point central difference `(x[i−2] − 8x[i−1] + 8x[i+1] − x[i+2]) / 12h`.
/// The two samples at each end have no estimate.
pub fn derivative_5pt(t: &[f64], x: &[f64]) -> Vec<Option<f64>> {
    let n = x.len();
    (0..n)
        .map(|i| {
            if i < 2 || i + 2 >= n {
                return None;
            }
            let h = (t[i + 2] - t[i - 2]) / 4.0;
            Some((x[i - 2] - 8.0 * x[i - 1] + 8.0 * x[i + 1] - x[i + 2]) / (12.0 * h))
        })
        .collect()
}

/// Slow-sinusoid segment from the `slow_segment_s: t0,t1` header, if present.
pub fn slow_segment(log: &TimeSeriesLog) -> Result<Option<(f64, f64)>> {
    let Some(s) = log.meta("slow_segment_s") else { return Ok(None) };
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Malformed(format!("bad slow_segment_s `{s}`")))?;
    match v[..] {
        [a, b] if b > a => Ok(Some((a, b))),
        _ => Err(Error::Malformed(format!("bad slow_segment_s `{s}`"))),
    }
}

fn weighted_solve(rows: &[[f64; 3]], y: &[f64], w: &[f64], scale: &[f64; 3]) -> Result<Vector3<f64>> {
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for ((r, &yi), &wi) in rows.iter().zip(y).zip(w) {
        let v = Vector3::new(r[0] / scale[0], r[1] / scale[1], r[2] / scale[2]);
        ata += wi * v * v.transpose();
        atb += wi * yi * v;
    }
    let svd = ata.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::RankDeficient(format!("normal matrix condition {:.3e}", smax / smin.max(f64::MIN_POSITIVE))));
    }
    let sol = svd.solve(&atb, 0.0).map_err(|e| Error::RankDeficient(e.to_string()))?;
    Ok(Vector3::new(sol[0] / scale[0], sol[1] / scale[1], sol[2] / scale[2]))
}

/// Fits `τ ≈ J·ω̇ + b·ω + f_c·sign(ω)` by Huber IRLS. Gravity must already be
/// compensated in the torque channel.
pub fn fit_friction(log: &TimeSeriesLog) -> Result<FrictionFit> {
    log.validate()?;
    let accel = derivative_5pt(&log.t, &log.omega);
    let mut rows = Vec::with_capacity(log.len());
    let mut y = Vec::with_capacity(log.len());
    for (i, a) in accel.iter().enumerate() {
        if let Some(a) = a {
            rows.push([*a, log.omega[i], sign(log.omega[i])]);
            y.push(log.torque[i]);
        }
    }
    if rows.len() < MIN_USABLE_SAMPLES {
        return Err(Error::InsufficientExcitation(format!("{} usable samples, need {MIN_USABLE_SAMPLES}", rows.len())));
    }
    let has_pos = rows.iter().any(|r| r[1] > 0.0);
    let has_neg = rows.iter().any(|r| r[1] < 0.0);
    if !(has_pos && has_neg) {
        return Err(Error::RankDeficient("omega never changes sign".into()));
    }
    let mut scale = [0.0; 3];
    for k in 0..3 {
        scale[k] = (rows.iter().map(|r| r[k] * r[k]).sum::<f64>() / rows.len() as f64).sqrt();
    }
    if !(scale[0] > 0.0) {
        return Err(Error::InsufficientExcitation("no acceleration in the record".into()));
    }
    let mut w = vec![1.0; rows.len()];
    let mut beta = weighted_solve(&rows, &y, &w, &scale)?;
    let residuals = |beta: &Vector3<f64>| -> Vec<f64> {
        rows.iter().zip(&y).map(|(r, &yi)| yi - (beta[0] * r[0] + beta[1] * r[1] + beta[2] * r[2])).collect()
    };
    let mut iterations = 0;
    for _ in 0..MAX_IRLS_ITERATIONS {
        let r = residuals(&beta);
        let abs: Vec<f64> = r.iter().map(|x| x.abs()).collect();
        let c = HUBER_MAD_MULTIPLE * quantile(&abs, 0.5).expect("nonempty");
        if !(c > 0.0) {
            break;
        }
        for (wi, ri) in w.iter_mut().zip(&abs) {
            *wi = if *ri <= c { 1.0 } else { c / ri };
        }
        let next = weighted_solve(&rows, &y, &w, &scale)?;
        iterations += 1;
        let change = (next - beta).abs().max();
        let size = next.abs().max().max(f64::MIN_POSITIVE);
        beta = next;
        if change <= 1e-13 * size {
            break;
        }
    }
    let r = residuals(&beta);
    let residual_rms = (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt();
    let (j_ref, b_visc, f_coulomb) = (beta[0], beta[1], beta[2]);
    if j_ref < 0.0 || f_coulomb < 0.0 {
        return Err(Error::InsufficientExcitation(format!(
            "fit is not physical (J = {j_ref:.4e}, f_c = {f_coulomb:.4e}); check excitation and gravity compensation"
        )));
    }
    let (i0, i1) = match slow_segment(log)? {
        Some((a, b)) => log.index_range(a, b),
        None => (0, log.len()),
    };
    let abs_tau: Vec<f64> = log.torque[i0..i1].iter().map(|x| x.abs()).collect();
    let backdrive_p95 = quantile(&abs_tau, 0.95).unwrap_or(0.0);
    Ok(FrictionFit { j_ref, b_visc, f_coulomb, backdrive_p95, residual_rms, iterations })
}
