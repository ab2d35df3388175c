use crate::matrix::Matrix;
use crate::stats::{mean, std_dev};

/// Per-column z-score transform fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; constant columns store 1.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let (mut m, mut s) = (Vec::with_capacity(x.cols()), Vec::with_capacity(x.cols()));
        for j in 0..x.cols() {
            let col = x.column(j);
            m.push(mean(&col));
            let sd = std_dev(&col);
            s.push(if sd > 1e-12 { sd } else { 1.0 });
        }
        Self { mean: m, scale: s }
    }

    pub fn identity(cols: usize) -> Self {
        Self {
            mean: vec![0.0; cols],
            scale: vec![1.0; cols],
        }
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for j in 0..row.len() {
            out[j] = (row[j] - self.mean[j]) / self.scale[j];
        }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..x.rows() {
            let src = x.row(i);
            let dst = out.row_mut(i);
            for j in 0..src.len() {
                dst[j] = (src[j] - self.mean[j]) / self.scale[j];
            }
        }
        out
    }
}

/// Scalar z-score for a target vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetScaler {
    pub mean: f64,
    pub scale: f64,
}

impl TargetScaler {
    pub fn fit(y: &[f64]) -> Self {
        let sd = std_dev(y);
        Self {
            mean: mean(y),
            scale: if sd > 1e-12 { sd } else { 1.0 },
        }
    }

    pub fn forward(&self, v: f64) -> f64 {
        (v - self.mean) / self.scale
    }

    pub fn inverse(&self, v: f64) -> f64 {
        v * self.scale + self.mean
    }
}
