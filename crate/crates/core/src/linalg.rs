//! Least-squares solves used by ANFIS consequents and GMDH neurons.

use nalgebra::{DMatrix, DVector};

/// Singular values below `RANK_TOL * sigma_max` are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub coefficients: Vec<f64>,
    pub rank: usize,
    /// True when the design matrix had fewer independent columns than unknowns.
    pub rank_deficient: bool,
}

/// Minimum-norm least-squares solution of `a * x = b` via SVD.
///
/// `a` is row-major with `cols` columns.
pub fn lstsq(a: &[f64], cols: usize, b: &[f64]) -> LstsqSolution {
    let rows = b.len();
    debug_assert_eq!(a.len(), rows * cols);
    if rows == 0 || cols == 0 {
        return LstsqSolution {
            coefficients: vec![0.0; cols],
            rank: 0,
            rank_deficient: cols > 0,
        };
    }
    let m = DMatrix::from_row_slice(rows, cols, a);
    let rhs = DVector::from_column_slice(b);
    let svd = m.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = RANK_TOL * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    // x = V * diag(1/s) * U^T * b over the retained singular values
    let utb = u.transpose() * &rhs;
    let mut x = DVector::zeros(cols);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            let scale = utb[k] / s;
            x += v_t.row(k).transpose() * scale;
        }
    }
    LstsqSolution {
        coefficients: x.iter().copied().collect(),
        rank,
        rank_deficient: rank < cols,
    }
}
