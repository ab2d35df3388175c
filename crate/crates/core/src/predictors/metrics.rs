use std::io::Write;

use crate::error::{Error, Result};
use crate::stats::{mse, pearson};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mse: f64,
    pub rmse: f64,
    /// Pearson correlation of predictions and targets.
    pub r: f64,
}

/// MSE and RMSE alone; defined even when R is not.
pub fn error_metrics(predictions: &[f64], targets: &[f64]) -> Result<(f64, f64)> {
    if predictions.len() != targets.len() || predictions.is_empty() {
        return Err(Error::invalid(format!(
            "need equal non-zero lengths, got {} and {}",
            predictions.len(),
            targets.len()
        )));
    }
    let mse = mse(predictions, targets);
    Ok((mse, mse.sqrt()))
}

pub fn evaluate(predictions: &[f64], targets: &[f64]) -> Result<Metrics> {
    let (mse, rmse) = error_metrics(predictions, targets)?;
    let r = pearson(predictions, targets)
        .ok_or(Error::UndefinedCorrelation("constant predictions or targets"))?;
    Ok(Metrics { mse, rmse, r })
}

/// One row of the evaluation table: method, parameters, train and test metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub method: String,
    pub params: String,
    pub train: Metrics,
    pub test: Metrics,
}

pub fn write_metrics_table<W: Write>(writer: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "method", "params", "train_mse", "train_rmse", "train_r", "test_mse", "test_rmse", "test_r",
    ])?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.params.clone(),
            r.train.mse.to_string(),
            r.train.rmse.to_string(),
            r.train.r.to_string(),
            r.test.mse.to_string(),
            r.test.rmse.to_string(),
            r.test.r.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let t = [1.0, 3.0, 2.0, 5.0];
        let m = evaluate(&t, &t).unwrap();
        assert_eq!(m.mse, 0.0);
        assert!((m.r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_arithmetic() {
        let (mse, rmse) = error_metrics(&[1.0, 2.0], &[2.0, 2.0]).unwrap();
        assert_eq!(mse, 0.5);
        assert!((rmse - 0.7071).abs() < 1e-4);
        // the same pair has a constant target, so R is undefined
        assert!(matches!(evaluate(&[1.0, 2.0], &[2.0, 2.0]), Err(Error::UndefinedCorrelation(_))));
        let m = evaluate(&[1.0, 2.0, 3.0], &[2.0, 2.0, 3.0]).unwrap();
        assert!((m.mse - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn best_table_row_is_root_consistent() {
        // 1.4357 -> 1.1982 at the table's four-decimal precision
        assert!((1.4357f64.sqrt() - 1.1982).abs() < 5e-5);
    }

    #[test]
    fn r_affine_invariant_mse_not() {
        let t = [1.0, 2.5, 2.0, 4.0, 3.3];
        let p = [1.2, 2.1, 2.2, 3.7, 3.0];
        let q: Vec<f64> = p.iter().map(|v| 3.0 * v + 10.0).collect();
        let a = evaluate(&p, &t).unwrap();
        let b = evaluate(&q, &t).unwrap();
        assert!((a.r - b.r).abs() < 1e-12);
        assert!((a.mse - b.mse).abs() > 1.0);
        assert_eq!(a.rmse, a.mse.sqrt());
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(evaluate(&[], &[]).is_err());
        assert!(evaluate(&[1.0], &[1.0, 2.0]).is_err());
    }
}
