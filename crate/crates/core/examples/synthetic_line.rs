//! Generate a synthetic making line with planted dependencies and inspect
//! the ground truth that comes with it.

use drawres::ingest::group_records;
use drawres::synth::{generate, SynthConfig};

fn main() -> drawres::Result<()> {
    let cfg = SynthConfig {
        seed: 3,
        ..SynthConfig::default()
    };
    let out = generate(&cfg)?;
    let t = &out.truth;
    println!("{} change records over {} grid points", out.records.len(), t.grid.length);
    println!("nominal target variance {:.1} Pa^2", cfg.nominal_variance());
    println!("planted direct: {} indicators, e.g. {:?}", t.direct.len(), &t.direct[..4]);
    println!("planted potential: {:?}", t.potential);
    for (w, &(s, e)) in t.shifts.iter().zip(&t.shift_ranges) {
        let rejects = (s..e).filter(|&i| t.reject_mask[i]).count();
        println!("shift {} .. {}: {} points, {rejects} substandard", w.start, w.end, e - s);
    }
    println!("injected faults: {}", t.faults.len());

    let series = group_records(out.records)?;
    let a1 = &series["A1"];
    println!("A1 stored {} of {} grid values", a1.len(), t.grid.length);
    Ok(())
}
