//! Compare random and distribution-targeted sampling for one shift, then
//! check the closed form against simulation.

use drawres::sampling::{
    monte_carlo_p, p_sampled_approx, p_sampled_exact, sampling_report, CoverageMode, NormalFit, SamplingPlan,
};

fn main() -> drawres::Result<()> {
    let fit = NormalFit { mu: 50.5, sigma: 1.16 };
    for mode in [CoverageMode::PaperExample, CoverageMode::Eq19] {
        let plan = SamplingPlan { mode, ..SamplingPlan::default() };
        println!("{}\n", sampling_report(&plan, 1055.0, fit)?);
    }

    println!("{:>8} {:>5} {:>5} {:>9} {:>9} {:>17}", "Y", "Z", "m", "exact", "approx", "monte carlo");
    for &(y, z, m) in &[(1000u64, 10u64, 5u64), (4_320_000, 200, 1055), (259_200, 200, 1055)] {
        let (mc, se) = monte_carlo_p(y, z, m, 100_000, 1)?;
        println!(
            "{y:>8} {z:>5} {m:>5} {:>9.5} {:>9.5} {mc:>9.5} ± {se:.5}",
            p_sampled_exact(y, z, m)?,
            p_sampled_approx(y as f64, z as f64, m as f64)?
        );
    }
    Ok(())
}
