//! Score sensitivity to headroom, feature emphasis, and critical-task gating.

use hlas::cli::{worked_example, ALPHA_ALT};
use hlas::scoring::{gated_hlas, hlas, sensitivity_weights, FeatureWeights};

fn main() -> hlas::Result<()> {
    let ds = worked_example()?;
    let base = ds.prereg.scheme.clone();
    let mut schemes = vec![("baseline".to_string(), base.clone())];
    for delta in [0.05, 0.10, 0.20] {
        schemes.push((format!("delta {delta:.2}"), hlas::scoring::WeightScheme { headroom_delta: delta, ..base.clone() }));
    }
    schemes.push((
        "efficiency emphasis".to_string(),
        hlas::scoring::WeightScheme { feature_weights: FeatureWeights::new(ALPHA_ALT)?, ..base.clone() },
    ));
    for (name, h) in sensitivity_weights(&ds.inputs, &schemes)? {
        println!("{name:<20} HLAS {h:.3}");
    }
    let b = hlas(&ds.inputs, &base)?;
    for crit in [vec!["Stairs"], vec!["Walk", "Reach"]] {
        let crit: Vec<String> = crit.into_iter().map(String::from).collect();
        println!("gated on {crit:?}: {:.3}", gated_hlas(&b, &crit)?);
    }
    Ok(())
}
