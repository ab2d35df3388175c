//! Fit each predictor family to a small nonlinear surface, compare test
//! metrics and round-trip one model through its text format.

use drawres::predictors::{
    anfis_init, anfis_train_hybrid, evaluate, fcm_clusters, gmdh_train, mlffnn_train, FcmParams, GmdhConfig,
    MlffnnConfig, ModelBody, Standardizer, TrainVariant, TrainedModel,
};
use drawres::Matrix;
use rand::Rng;

fn surface(x: &[f64]) -> f64 {
    (1.5 * x[0]).sin() + 0.5 * x[1] * x[1] + 0.3 * x[2]
}

fn data(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
    let mut g = drawres::rng::seeded(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| g.gen_range(-2.0..2.0)).collect()).collect();
    let y = rows.iter().map(|r| surface(r)).collect();
    (Matrix::from_rows(&rows).unwrap(), y)
}

fn main() -> drawres::Result<()> {
    let (x, y) = data(400, 1);
    let (xt, yt) = data(200, 2);
    let scaler = Standardizer::fit(&x);
    let (xz, xtz) = (scaler.transform(&x), scaler.transform(&xt));

    let centres = fcm_clusters(&xz, &FcmParams { clusters: 4, ..FcmParams::default() })?.centers;
    let init = anfis_init(&centres, &xz, &y)?;
    let (fis, _) = anfis_train_hybrid(&init, &xz, &y, 30, 0.01)?;
    let m = evaluate(&fis.predict(&xtz)?, &yt)?;
    println!("ANFIS(FCM)  rules {:>2}   test RMSE {:.4} R {:.4}", fis.rules.len(), m.rmse, m.r);

    let net = gmdh_train(&xz, &y, &GmdhConfig::default())?;
    let m = evaluate(&net.predict(&xtz), &yt)?;
    println!("GMDH        layers {:>2}  test RMSE {:.4} R {:.4}", net.depth(), m.rmse, m.r);

    for variant in [TrainVariant::GradientDescent, TrainVariant::LevenbergMarquardt] {
        let cfg = MlffnnConfig { hidden: 10, variant, max_epochs: 100, ..MlffnnConfig::default() };
        let (nn, report) = mlffnn_train(&xz, &y, &cfg)?;
        let m = evaluate(&nn.predict(&xtz), &yt)?;
        println!("MLFFNN {variant:?}: {} epochs, test RMSE {:.4} R {:.4}", report.epochs, m.rmse, m.r);
    }

    let model = TrainedModel {
        method: "ANFIS(FCM)".into(),
        features: vec!["A1".into(), "B1".into(), "C1".into()],
        x_scaler: scaler,
        body: ModelBody::Anfis(fis),
    };
    let text = model.to_text();
    let back = TrainedModel::parse(&text)?;
    assert_eq!(back.predict(&xt)?, model.predict(&xt)?);
    println!("\nmodel file, first lines:");
    for line in text.lines().take(6) {
        println!("  {line}");
    }
    Ok(())
}
