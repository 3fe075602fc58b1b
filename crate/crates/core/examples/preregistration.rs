//! Loads a preregistration, prints its canonical form and digest, and checks
//! that measurement files were produced after it and bound to it.

use hlas::config_io::{load_preregistration, verify_prereg_binding, MeasurementStamp};

fn main() -> hlas::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/worked_example");
    let read = |f: &str| std::fs::read_to_string(dir.join(f)).map_err(|e| hlas::Error::Io(format!("{f}: {e}")));
    let prereg = load_preregistration(&read("prereg.toml")?)?;
    println!("created {}, digest {}", prereg.created, prereg.digest);
    println!("{}", prereg.canonical().lines().take(12).collect::<Vec<_>>().join("\n"));

    let mut stamps = Vec::new();
    // Bands are pinned by the digest inside the plan; these carry stamps.
    for f in ["measurements.toml", "capability.csv", "efficiency.csv"] {
        stamps.push(MeasurementStamp::read(f, &read(f)?)?);
    }
    println!("{}", verify_prereg_binding(&prereg, &stamps));

    // A file stamped before the plan was fixed does not bind.
    let early = MeasurementStamp { created: Some(prereg.created - chrono::Duration::days(1)), ..stamps[0].clone() };
    println!("{}", verify_prereg_binding(&prereg, &[early]));
    Ok(())
}
