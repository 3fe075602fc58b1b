//! Recovers reflected inertia, viscous and Coulomb friction from a
//! backdrive log.

use hlas::signals::friction::fit_friction;
use hlas::synthetic::{generate_backdrive_log, BackdriveOptions, NoiseSpec, SyntheticActuator};

fn main() -> hlas::Result<()> {
    let act = SyntheticActuator::default();
    for std in [0.0, 0.02, 0.1] {
        let noise = (std > 0.0).then_some(NoiseSpec { std, seed: 11 });
        let log = generate_backdrive_log(&act, BackdriveOptions { noise, ..Default::default() })?;
        let fit = fit_friction(&log)?;
        println!(
            "noise {std:.2} Nm: J {:.4} (true {}), b {:.3} (true {}), f_c {:.3} (true {}), p95 backdrive {:.2} Nm",
            fit.j_ref, act.j_ref, fit.b_visc, act.b_visc, fit.f_coulomb, act.f_coulomb, fit.backdrive_p95
        );
    }
    Ok(())
}
