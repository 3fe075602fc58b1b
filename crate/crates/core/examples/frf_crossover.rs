//! Stepped-sine sweep of a synthetic actuator and its torque crossover.

use hlas::signals::frf::{compute_frf, find_crossover, sweep_freqs};
use hlas::synthetic::{generate_sweep_log, log_spaced, NoiseSpec, SweepOptions, SyntheticActuator};

fn main() -> hlas::Result<()> {
    let act = SyntheticActuator { crossover_true: 12.0, ..Default::default() };
    let opts = SweepOptions { noise: Some(NoiseSpec { std: 0.05, seed: 7 }), ..Default::default() };
    let log = generate_sweep_log(&act, &log_spaced(2.0, 50.0, 21), 5.0, opts)?;
    let frf = compute_frf(&log, &sweep_freqs(&log)?)?;
    for p in frf.iter().step_by(4) {
        println!("{:>6.2} Hz  |T| {:.3}  phase {:>7.2} deg", p.freq, p.magnitude, p.phase);
    }
    let c = find_crossover(&frf)?;
    println!("{c} (true {:.1} Hz)", act.crossover_true);
    Ok(())
}
