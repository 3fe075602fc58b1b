//! Continuous torque from sustained duty, with and without a winding limit.

use hlas::signals::thermal::detect_plateau;
use hlas::synthetic::{generate_thermal_duty_log, DutyProfile, SyntheticActuator, ThermalOptions};

fn main() -> hlas::Result<()> {
    let act = SyntheticActuator::default();
    let limit = 90.0;
    println!(
        "steady rise at 30 Nm {:.1} C, sustainable torque at {limit} C {:.2} Nm",
        act.steady_rise(30.0),
        act.sustainable_torque(limit)
    );
    let cases = [
        ("continuous 30 Nm", DutyProfile::Continuous, 30.0, None),
        ("bursts 60 Nm, 2 s on / 2 s off", DutyProfile::Bursts { on_s: 2.0, off_s: 2.0 }, 60.0, None),
        ("continuous 80 Nm, limited", DutyProfile::Continuous, 80.0, Some(limit)),
    ];
    for (name, profile, torque, temp_limit_c) in cases {
        let opts = ThermalOptions { duration: 600.0, omega: 1.0, temp_limit_c, ..Default::default() };
        let log = generate_thermal_duty_log(&act, profile, torque, opts)?;
        let p = detect_plateau(&log, 0.5, 60.0)?;
        let derate = p.time_to_derate.map_or("none".to_string(), |t| format!("{t:.1} s"));
        println!("{name}: plateau {:.2} Nm, winding {:.1} C, derate {derate}", p.torque_cont, p.final_temp_motor);
    }
    Ok(())
}
