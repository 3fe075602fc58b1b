//! Joint inventory lookup and the two workspace factors.

use std::collections::{BTreeMap, BTreeSet};

use hlas::atlas::{dof_sufficiency, rom_coverage, Atlas, AxisActuationReport, RomCategory, RomInterval, DEFAULT_COUPLING_THRESHOLD};

fn main() -> hlas::Result<()> {
    let atlas = Atlas::builtin();
    let (rot, trans) = atlas.dof_totals();
    println!("{} joints, {rot} rotational and {trans} translational axes", atlas.joints.len());
    print!("{}", atlas.show("knee").expect("knee is in the inventory"));

    let knee = atlas.joint("knee").unwrap();
    let required: BTreeSet<String> = knee.axes.iter().map(|a| a.axis.clone()).collect();
    let functional: BTreeMap<String, RomInterval> = required
        .iter()
        .filter_map(|a| {
            atlas.functional("knee", a).or_else(|| atlas.norm("knee", a).and_then(|n| n.get(RomCategory::Active))).map(|i| (a.clone(), i))
        })
        .collect();
    let required: BTreeSet<String> = functional.keys().cloned().collect();
    // A robot knee that reaches 80% of each interval.
    let robot: BTreeMap<String, RomInterval> = functional
        .iter()
        .map(|(a, f)| (a.clone(), RomInterval::new(f.lo, f.lo + 0.8 * f.length(), RomCategory::Active).unwrap()))
        .collect();
    println!("ROM coverage {:.3}", rom_coverage(&robot, &functional, &required)?);

    let reports: Vec<_> = knee
        .axes
        .iter()
        .enumerate()
        .map(|(k, a)| AxisActuationReport { axis: a.clone(), implemented: k == 0, coupling_rms_fraction: 0.04 })
        .collect();
    println!("DoF sufficiency {:.3}", dof_sufficiency(&reports, &required, DEFAULT_COUPLING_THRESHOLD)?);
    Ok(())
}
