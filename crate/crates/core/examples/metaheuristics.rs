//! Box-bounded GA and PSO on test functions, then metaheuristic refinement
//! of an ANFIS model.

use drawres::metaheur::{anfis_metaheuristic_train, ga_minimize, pso_minimize, GaParams, Method, PsoParams};
use drawres::predictors::{anfis_init, fcm_clusters, FcmParams};
use drawres::Matrix;
use rand::Rng;

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos()).sum::<f64>()
}

fn main() -> drawres::Result<()> {
    let bounds = vec![(-5.12, 5.12); 5];
    let ga = GaParams { seed: 1, ..GaParams::default() };
    let pso = PsoParams { seed: 1, ..PsoParams::default() };
    for (name, f) in [("sphere", sphere as fn(&[f64]) -> f64), ("rastrigin", rastrigin)] {
        let g = ga_minimize(f, &bounds, &ga, &[])?;
        let p = pso_minimize(f, &bounds, &pso, &[])?;
        println!("{name:<10} GA best {:.3e} after {} iters, PSO best {:.3e}", g.best_value, g.history.len(), p.best_value);
    }

    let mut rng = drawres::rng::seeded(4);
    let rows: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    let y: Vec<f64> = rows.iter().map(|r| (3.0 * r[0]).tanh() + r[0] * r[1]).collect();
    let x = Matrix::from_rows(&rows)?;
    let centres = fcm_clusters(&x, &FcmParams { clusters: 2, ..FcmParams::default() })?.centers;
    let init = anfis_init(&centres, &x, &y)?;
    for method in [
        Method::Ga(GaParams { max_iters: 300, ..ga }),
        Method::Pso(PsoParams { max_iters: 300, ..pso }),
    ] {
        let (_, report) = anfis_metaheuristic_train(&x, &y, &init, &method)?;
        println!("ANFIS {method:?}\n  RMSE {:.4} -> {:.4}", report.init_rmse, report.final_rmse);
    }
    Ok(())
}
