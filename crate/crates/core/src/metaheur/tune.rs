//! ANFIS parameter tuning by GA or PSO on training RMSE.

use rand::Rng;

use super::layout::{flatten, unflatten_values, ColumnStats, Segment};
use super::{ga_minimize, pso_minimize, GaParams, OptimResult, PsoParams};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::predictors::anfis::{FuzzyRuleBase, MIN_WIDTH};
use crate::rng;
use crate::stats::std_dev;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Ga(GaParams),
    Pso(PsoParams),
}

impl Method {
    fn budget(&self) -> usize {
        match self {
            Method::Ga(p) => p.max_iters,
            Method::Pso(p) => p.max_iters,
        }
    }

    fn population(&self) -> usize {
        match self {
            Method::Ga(p) => p.population,
            Method::Pso(p) => p.population,
        }
    }

    fn seed(&self) -> u64 {
        match self {
            Method::Ga(p) => p.seed,
            Method::Pso(p) => p.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneReport {
    pub init_rmse: f64,
    pub final_rmse: f64,
    pub history: Vec<f64>,
}

/// Share of the search half-width used for the perturbed starting population.
const START_SPREAD: f64 = 0.1;

/// Search box around the starting values: premises may move by half their
/// current width (or exponent), centres by half a column deviation,
/// consequents by a quarter of their magnitude plus a twentieth of the
/// target deviation. Intersected with the validity bounds of the layout.
fn search_box(seg: Segment, v: f64, valid: (f64, f64), stats: &[ColumnStats], y_sd: f64) -> (f64, f64) {
    let half = match seg {
        Segment::Width { .. } | Segment::Exponent { .. } => 0.5 * v.abs(),
        Segment::Centre { input, .. } => 0.5 * stats[input].sd,
        Segment::Coefficient { .. } | Segment::Bias { .. } => 0.25 * v.abs() + 0.05 * y_sd,
    };
    let lo = (v - half).max(valid.0);
    let hi = (v + half).min(valid.1);
    match seg {
        Segment::Width { .. } => (lo.max(MIN_WIDTH), hi.max(MIN_WIDTH)),
        _ => (lo, hi),
    }
}

fn rmse(fis: &FuzzyRuleBase, x: &Matrix, y: &[f64]) -> f64 {
    match fis.training_mse(x, y) {
        Ok(m) => m.sqrt(),
        Err(_) => f64::INFINITY,
    }
}

/// Refine `init` (normally a hybrid-trained rule base) with a global
/// optimiser. The starting population holds `init` itself plus bounded
/// perturbations of it, and the single elite guarantees the result is never
/// worse than `init` on the training data. A zero iteration budget returns
/// `init` unchanged.
pub fn anfis_metaheuristic_train(
    x: &Matrix,
    y: &[f64],
    init: &FuzzyRuleBase,
    method: &Method,
) -> Result<(FuzzyRuleBase, TuneReport)> {
    let init_rmse = rmse(init, x, y);
    if method.budget() == 0 {
        return Ok((
            init.clone(),
            TuneReport {
                init_rmse,
                final_rmse: init_rmse,
                history: Vec::new(),
            },
        ));
    }
    let stats = ColumnStats::of(x);
    let pv = flatten(init, &stats)?;
    let y_sd = std_dev(y);
    let bounds: Vec<(f64, f64)> = pv
        .layout
        .iter()
        .zip(&pv.values)
        .zip(&pv.bounds)
        .map(|((&seg, &v), &valid)| search_box(seg, v, valid, &stats, y_sd))
        .collect();

    let mut g = rng::derived(method.seed(), 0x5eed);
    let mut initial = vec![pv.values.clone()];
    while initial.len() < method.population() {
        initial.push(
            pv.values
                .iter()
                .zip(&bounds)
                .map(|(&v, &(lo, hi))| {
                    let half = 0.5 * (hi - lo) * START_SPREAD;
                    if half > 0.0 {
                        (v + g.gen_range(-half..=half)).clamp(lo, hi)
                    } else {
                        v
                    }
                })
                .collect(),
        );
    }
    let objective = |p: &[f64]| match unflatten_values(&pv, p) {
        Ok(u) => rmse(&u.fis, x, y),
        Err(_) => f64::INFINITY,
    };
    let OptimResult { best, best_value, history } = match method {
        Method::Ga(p) => ga_minimize(objective, &bounds, p, &initial)?,
        Method::Pso(p) => pso_minimize(objective, &bounds, p, &initial)?,
    };
    let fis = unflatten_values(&pv, &best)?.fis;
    Ok((
        fis,
        TuneReport {
            init_rmse,
            final_rmse: best_value,
            history,
        },
    ))
}
