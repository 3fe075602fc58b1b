//! Bins a phase-indexed joint trajectory into an operating band.

use hlas::human_ref::{build_band_grid, phase_to_grid, scale_to_absolute, BinAssignment, PhaseTrajectory, ReferenceBody};

fn main() -> hlas::Result<()> {
    // One stride of a stylized ankle: angle, rate, and normalized power.
    let body = ReferenceBody::new(75.0, 1.75)?;
    let n = 200;
    let mut traj = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for k in 0..n {
        let phase = k as f64 / n as f64;
        let s = (2.0 * std::f64::consts::PI * phase).sin();
        let q = 10.0 + 15.0 * s;
        let omega = 2.0 + 8.0 * s.abs();
        // Push-off carries most of the positive power.
        let p_norm = 3.5 * (-((phase - 0.55) / 0.06).powi(2)).exp() - 0.3;
        let (_, power) = scale_to_absolute(&body, 0.0, p_norm);
        traj.0.push(phase);
        traj.1.push(q);
        traj.2.push(omega);
        traj.3.push(power);
    }
    let traj = PhaseTrajectory::new(traj.0, traj.1, traj.2, traj.3)?;
    let grid = build_band_grid((-5.0, 25.0), (2.0, 10.0), 4, 5)?;
    for assignment in [BinAssignment::Nearest, BinAssignment::Bilinear] {
        let band = phase_to_grid(&traj, &grid, "Walk", "ankle", assignment)?;
        println!("{assignment:?}: trajectory power {:.1} W, band power {:.1} W", traj.total_positive_power(), band.total_positive_power());
        for s in band.samples.iter().filter(|s| s.weight > 0.05) {
            println!("  q {:>5.1} deg  omega {:>4.1} rad/s  T {:>6.1} Nm  weight {:.3}", s.q, s.omega, s.torque_hum, s.weight);
        }
    }
    Ok(())
}
