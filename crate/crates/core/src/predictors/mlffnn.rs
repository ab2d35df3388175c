//! Three-layer feed-forward network: sigmoid hidden layer, linear output.
//! Trained on z-scored inputs and target with batch gradient descent or
//! Levenberg-Marquardt.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scaler::{Standardizer, TargetScaler};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainVariant {
    GradientDescent,
    LevenbergMarquardt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlffnnConfig {
    pub hidden: usize,
    pub variant: TrainVariant,
    pub max_epochs: usize,
    /// Step size for gradient descent (ignored by Levenberg-Marquardt).
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlffnnConfig {
    fn default() -> Self {
        Self {
            hidden: 40,
            variant: TrainVariant::LevenbergMarquardt,
            max_epochs: 200,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlffnnModel {
    pub inputs: usize,
    pub hidden: usize,
    /// hidden x inputs, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub x_scaler: Standardizer,
    pub y_scaler: TargetScaler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: usize,
    /// Training MSE on normalised data after each epoch.
    pub mse_history: Vec<f64>,
}

#[inline]
fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl MlffnnModel {
    pub fn random(inputs: usize, hidden: usize, seed: u64, x_scaler: Standardizer, y_scaler: TargetScaler) -> Self {
        let mut rng = rng::seeded(seed);
        let a = 1.0 / (inputs.max(1) as f64).sqrt();
        let b = 1.0 / (hidden.max(1) as f64).sqrt();
        Self {
            inputs,
            hidden,
            w1: (0..hidden * inputs).map(|_| rng.gen_range(-a..a)).collect(),
            b1: (0..hidden).map(|_| rng.gen_range(-a..a)).collect(),
            w2: (0..hidden).map(|_| rng.gen_range(-b..b)).collect(),
            b2: 0.0,
            x_scaler,
            y_scaler,
        }
    }

    pub fn param_count(&self) -> usize {
        self.hidden * (self.inputs + 2) + 1
    }

    /// Flat parameters: w1, b1, w2, b2.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let (h, d) = (self.hidden, self.inputs);
        self.w1.copy_from_slice(&p[..h * d]);
        self.b1.copy_from_slice(&p[h * d..h * d + h]);
        self.w2.copy_from_slice(&p[h * d + h..h * d + 2 * h]);
        self.b2 = p[h * d + 2 * h];
    }

    fn hidden_activations(&self, xz: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let w = &self.w1[k * self.inputs..(k + 1) * self.inputs];
            let z: f64 = w.iter().zip(xz).map(|(a, b)| a * b).sum::<f64>() + self.b1[k];
            *o = sigmoid(z);
        }
    }

    /// Output in normalised target units for a normalised input row.
    pub fn forward_normalized(&self, xz: &[f64]) -> f64 {
        let mut h = vec![0.0; self.hidden];
        self.hidden_activations(xz, &mut h);
        h.iter().zip(&self.w2).map(|(a, b)| a * b).sum::<f64>() + self.b2
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut xz = vec![0.0; self.inputs];
        self.x_scaler.transform_row(row, &mut xz);
        self.y_scaler.inverse(self.forward_normalized(&xz))
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.row_iter().map(|r| self.predict_row(r)).collect()
    }

    /// Mean squared error on normalised data and its gradient in `params()` order.
    pub fn loss_and_gradient(&self, xz: &Matrix, yz: &[f64]) -> (f64, Vec<f64>) {
        let (h, d) = (self.hidden, self.inputs);
        let n = yz.len() as f64;
        let mut grad = vec![0.0; self.param_count()];
        let mut act = vec![0.0; h];
        let mut loss = 0.0;
        for (i, row) in xz.row_iter().enumerate() {
            self.hidden_activations(row, &mut act);
            let out: f64 = act.iter().zip(&self.w2).map(|(a, b)| a * b).sum::<f64>() + self.b2;
            let e = out - yz[i];
            loss += e * e;
            let g = 2.0 * e / n;
            for k in 0..h {
                let delta = g * self.w2[k] * act[k] * (1.0 - act[k]);
                let w = &mut grad[k * d..(k + 1) * d];
                for (gw, &xv) in w.iter_mut().zip(row) {
                    *gw += delta * xv;
                }
                grad[h * d + k] += delta;
                grad[h * d + h + k] += g * act[k];
            }
            grad[h * d + 2 * h] += g;
        }
        (loss / n, grad)
    }

    /// Residuals (prediction - target) and their Jacobian, rows = samples.
    fn residuals_and_jacobian(&self, xz: &Matrix, yz: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let (h, d) = (self.hidden, self.inputs);
        let p = self.param_count();
        let mut res = DVector::zeros(yz.len());
        let mut jac = DMatrix::zeros(yz.len(), p);
        let mut act = vec![0.0; h];
        for (i, row) in xz.row_iter().enumerate() {
            self.hidden_activations(row, &mut act);
            let out: f64 = act.iter().zip(&self.w2).map(|(a, b)| a * b).sum::<f64>() + self.b2;
            res[i] = out - yz[i];
            for k in 0..h {
                let delta = self.w2[k] * act[k] * (1.0 - act[k]);
                for j in 0..d {
                    jac[(i, k * d + j)] = delta * row[j];
                }
                jac[(i, h * d + k)] = delta;
                jac[(i, h * d + h + k)] = act[k];
            }
            jac[(i, h * d + 2 * h)] = 1.0;
        }
        (res, jac)
    }

    fn normalized_mse(&self, xz: &Matrix, yz: &[f64]) -> f64 {
        xz.row_iter()
            .zip(yz)
            .map(|(r, t)| {
                let e = self.forward_normalized(r) - t;
                e * e
            })
            .sum::<f64>()
            / yz.len() as f64
    }
}

const PLATEAU_TOL: f64 = 1e-8;
const PLATEAU_EPOCHS: usize = 10;

pub fn mlffnn_train(x: &Matrix, y: &[f64], cfg: &MlffnnConfig) -> Result<(MlffnnModel, TrainReport)> {
    if cfg.hidden == 0 {
        return Err(Error::invalid("hidden layer needs at least one node"));
    }
    if x.rows() != y.len() {
        return Err(Error::invalid("row count differs from target length"));
    }
    if x.rows() < cfg.hidden {
        return Err(Error::invalid(format!(
            "need at least {} rows (hidden width), got {}",
            cfg.hidden,
            x.rows()
        )));
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data contains non-finite values"));
    }
    let xs = Standardizer::fit(x);
    let ys = TargetScaler::fit(y);
    let xz = xs.transform(x);
    let yz: Vec<f64> = y.iter().map(|&v| ys.forward(v)).collect();
    let mut model = MlffnnModel::random(x.cols(), cfg.hidden, cfg.seed, xs, ys);

    let mut history = Vec::new();
    let mut last = model.normalized_mse(&xz, &yz);
    let mut stale = 0;
    let mut mu = 1e-3;
    for epoch in 1..=cfg.max_epochs {
        let loss = match cfg.variant {
            TrainVariant::GradientDescent => {
                let (_, g) = model.loss_and_gradient(&xz, &yz);
                let p: Vec<f64> = model
                    .params()
                    .iter()
                    .zip(&g)
                    .map(|(w, gi)| w - cfg.learning_rate * gi)
                    .collect();
                model.set_params(&p);
                model.normalized_mse(&xz, &yz)
            }
            TrainVariant::LevenbergMarquardt => {
                match lm_step(&mut model, &xz, &yz, last, &mut mu) {
                    Some(l) => l,
                    // damping saturated: no further progress possible
                    None => break,
                }
            }
        };
        if !loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                last_finite_epoch: epoch - 1,
                last_finite_mse: last,
            });
        }
        history.push(loss);
        if last - loss < PLATEAU_TOL {
            stale += 1;
            if stale >= PLATEAU_EPOCHS {
                break;
            }
        } else {
            stale = 0;
        }
        last = loss;
    }
    Ok((
        model,
        TrainReport {
            epochs: history.len(),
            mse_history: history,
        },
    ))
}

/// One damped Gauss-Newton step; returns the new loss, or `None` when the
/// damping factor grows past 1e10 without finding a descent step.
fn lm_step(model: &mut MlffnnModel, xz: &Matrix, yz: &[f64], current: f64, mu: &mut f64) -> Option<f64> {
    let (res, jac) = model.residuals_and_jacobian(xz, yz);
    let jt = jac.transpose();
    let jtj = &jt * &jac;
    let g = &jt * &res;
    let base = model.params();
    let p = base.len();
    while *mu <= 1e10 {
        let mut a = jtj.clone();
        for k in 0..p {
            a[(k, k)] += *mu;
        }
        if let Some(ch) = a.cholesky() {
            let step = ch.solve(&g);
            let trial: Vec<f64> = base.iter().zip(step.iter()).map(|(w, s)| w - s).collect();
            model.set_params(&trial);
            let loss = model.normalized_mse(xz, yz);
            if loss.is_finite() && loss < current {
                *mu = (*mu / 10.0).max(1e-12);
                return Some(loss);
            }
        }
        *mu *= 10.0;
    }
    model.set_params(&base);
    None
}
