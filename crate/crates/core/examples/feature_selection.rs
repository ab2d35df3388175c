//! Score every candidate indicator by |Spearman rho| and random-forest
//! importance, then keep the top linear and nonlinear shares.

use drawres::ingest::group_records;
use drawres::pipeline::{ingest_series, score_and_select, FeatureConfig, IngestConfig};
use drawres::synth::{generate, SynthConfig};

fn main() -> drawres::Result<()> {
    let out = generate(&SynthConfig::default())?;
    let ic = IngestConfig::default();
    let ing = ingest_series(&group_records(out.records)?, &ic)?;
    let (scores, sel) = score_and_select(&ing, &ic, &FeatureConfig::default(), 0)?;

    let mut top: Vec<_> = scores.iter().collect();
    top.sort_by(|a, b| b.spearman_abs.total_cmp(&a.spearman_abs));
    println!("{:<6} {:>8} {:>10}", "id", "|rho|", "rf");
    for s in top.iter().take(8) {
        println!("{:<6} {:>8.3} {:>10.4}", s.indicator, s.spearman_abs, s.rf_importance);
    }

    let t = &out.truth;
    let hit = |ids: &[String]| ids.iter().filter(|i| t.direct.contains(i) || t.potential.contains(i)).count();
    println!("{} scored; direct {} ({} planted), potential {} ({} planted)",
        scores.len(), sel.direct.len(), hit(&sel.direct), sel.potential.len(), hit(&sel.potential));
    Ok(())
}
