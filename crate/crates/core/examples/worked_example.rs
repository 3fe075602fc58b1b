//! Scores the bundled three-task, three-joint example and checks it
//! against the stored reference tables.

use hlas::cli::{run_example, ExampleArgs};
use hlas::scoring::FEATURE_NAMES;

fn main() -> hlas::Result<()> {
    let (_, run) = run_example(&ExampleArgs::default())?;
    println!("{:<15} {}", "pair", FEATURE_NAMES.map(|n| format!("{n:>9}")).join(" "));
    for p in &run.baseline.pairs {
        let x = p.features.as_array().map(|v| format!("{v:>9.3}")).join(" ");
        println!("{:<15} {x}   s = {:.3}", p.key.to_string(), p.score);
    }
    for (task, s) in &run.baseline.task_scores {
        println!("{task:<6} {s:.3}");
    }
    println!("HLAS {:.3}, with 10% headroom {:.3}", run.baseline.hlas, run.headroom.hlas);
    println!("{} reference cells checked, {} mismatches", run.checked, run.mismatches.len());
    Ok(())
}
