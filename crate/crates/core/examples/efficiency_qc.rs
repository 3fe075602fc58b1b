//! Electrical-to-mechanical efficiency and log quality checks.

use hlas::signals::efficiency::log_efficiency;
use hlas::signals::qc::{loaded_bandwidth_check, power_balance_check};
use hlas::synthetic::{generate_thermal_duty_log, DutyProfile, SyntheticActuator, ThermalOptions};

fn main() -> hlas::Result<()> {
    let act = SyntheticActuator::default();
    for omega in [1.0, 3.0, 6.0] {
        let opts = ThermalOptions { duration: 10.0, omega, ..Default::default() };
        let log = generate_thermal_duty_log(&act, DutyProfile::Continuous, 25.0, opts)?;
        let e = log_efficiency(&log, Some((1.0, 9.0)))?;
        let closed_form = 25.0 * omega / act.electrical_power(25.0, omega);
        println!(
            "omega {omega}: mech {:.1} W, elec {:.1} W, eta {:.3} (closed form {closed_form:.3})",
            e.p_mech,
            e.p_elec,
            e.efficiency.value().unwrap_or(f64::NAN)
        );
        let pb = power_balance_check(&log);
        println!("  power balance {} ({:.0} J out, {:.0} J in)", if pb.pass { "PASS" } else { "FAIL" }, pb.mechanical_j, pb.electrical_j);
    }
    println!("loaded 9 Hz vs unloaded 12 Hz: {}", if loaded_bandwidth_check(9.0, 12.0) { "PASS" } else { "FAIL" });
    Ok(())
}
