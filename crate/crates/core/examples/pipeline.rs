//! Run every stage from the bundled synthetic config into a scratch
//! directory and print the manifest.

use std::path::Path;

use drawres::pipeline::{run, Manifest, RunConfig, Subcommand};

fn main() -> drawres::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/synth.toml");
    let mut cfg = RunConfig::load(&path)?;
    cfg.out_dir = std::env::temp_dir().join("drawres-example");
    cfg.train.ga.max_iters = 50;

    let outcome = run(Subcommand::Pipeline, &cfg)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    let m = Manifest::read(&cfg.out_dir.join("manifest.toml"))?;
    println!("\nconfig {} seed {}", &m.config_sha256[..12], m.seed);
    for (name, hash) in &m.artifacts {
        println!("  {name:<40} {}", &hash[..12]);
    }
    Ok(())
}
