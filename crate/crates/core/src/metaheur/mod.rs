//! Box-bounded global optimisers (GA, PSO) and their use for tuning ANFIS
//! parameters.

pub mod ga;
pub mod layout;
pub mod pso;
pub mod tune;

use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use ga::{ga_minimize, GaParams};
pub use layout::{flatten, unflatten, unflatten_values, ColumnStats, ParamVector, Segment, Unflattened};
pub use pso::{pso_minimize, PsoParams};
pub use tune::{anfis_metaheuristic_train, Method, TuneReport};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub best: Vec<f64>,
    pub best_value: f64,
    /// Best value after each iteration; non-increasing.
    pub history: Vec<f64>,
}

/// Objective values for a population, in order. Non-finite values map to
/// +infinity so they always rank worst.
pub(crate) fn evaluate<F>(objective: &F, pop: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pop.par_iter()
        .map(|p| {
            let v = objective(p);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Index of the smallest value; the lowest index wins ties.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.total_cmp(&values[best]).is_lt() {
            best = i;
        }
    }
    best
}

pub(crate) fn check_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::invalid("optimiser needs at least one dimension"));
    }
    for (k, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("bad bounds for dimension {k}: [{lo}, {hi}]")));
        }
    }
    Ok(())
}

pub fn write_history(path: &Path, history: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "iter,best_value")?;
    for (i, v) in history.iter().enumerate() {
        writeln!(f, "{},{}", i + 1, v)?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum()
    }

    fn rastrigin(v: &[f64]) -> f64 {
        10.0 * v.len() as f64
            + v.iter()
                .map(|x| x * x - 10.0 * (2.0 * std::f64::consts::PI * x).cos())
                .sum::<f64>()
    }

    fn monotone(h: &[f64]) -> bool {
        h.windows(2).all(|w| w[1] <= w[0])
    }

    #[test]
    fn ga_sphere_over_seeds() {
        for seed in 0..5 {
            for pop in [10, 20, 25, 50] {
                let p = GaParams { population: pop, seed, ..Default::default() };
                let r = ga_minimize(sphere, &[(-5.0, 5.0); 5], &p, &[]).unwrap();
                assert!(r.best_value < 1e-3, "seed {seed} pop {pop}: {}", r.best_value);
                assert!(monotone(&r.history));
                assert_eq!(r.best_value, sphere(&r.best));
            }
        }
    }

    #[test]
    fn pso_sphere_over_seeds() {
        for seed in 0..5 {
            for pop in [10, 20, 25, 50] {
                let p = PsoParams { population: pop, seed, ..Default::default() };
                let r = pso_minimize(sphere, &[(-5.0, 5.0); 5], &p, &[]).unwrap();
                assert!(r.best_value < 1e-3, "seed {seed} pop {pop}: {}", r.best_value);
                assert!(monotone(&r.history));
                assert_eq!(r.best_value, sphere(&r.best));
            }
        }
    }

    #[test]
    fn pso_rastrigin_over_seeds() {
        for seed in 0..10 {
            let p = PsoParams { population: 20, seed, ..Default::default() };
            let r = pso_minimize(rastrigin, &[(-5.12, 5.12); 2], &p, &[]).unwrap();
            assert!(r.best_value < 0.1, "seed {seed}: {}", r.best_value);
        }
    }

    #[test]
    fn constant_objective() {
        let b = [(-1.0, 1.0); 3];
        let g = ga_minimize(|_| 7.5, &b, &GaParams { max_iters: 20, ..Default::default() }, &[]).unwrap();
        let p = pso_minimize(|_| 7.5, &b, &PsoParams { max_iters: 20, ..Default::default() }, &[]).unwrap();
        assert_eq!((g.best_value, p.best_value), (7.5, 7.5));
    }

    #[test]
    fn lone_particle_at_optimum_stays() {
        let p = PsoParams { population: 1, max_iters: 50, ..Default::default() };
        let r = pso_minimize(sphere, &[(-5.0, 5.0); 4], &p, &[vec![0.0; 4]]).unwrap();
        assert_eq!(r.best, vec![0.0; 4]);
        assert!(r.history.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn seeded_runs_repeat() {
        let b = [(-3.0, 3.0); 4];
        let g = GaParams { max_iters: 100, seed: 11, ..Default::default() };
        let p = PsoParams { max_iters: 100, seed: 11, ..Default::default() };
        assert_eq!(ga_minimize(rastrigin, &b, &g, &[]).unwrap(), ga_minimize(rastrigin, &b, &g, &[]).unwrap());
        assert_eq!(pso_minimize(rastrigin, &b, &p, &[]).unwrap(), pso_minimize(rastrigin, &b, &p, &[]).unwrap());
    }

    #[test]
    fn non_finite_objective_ranks_worst() {
        let f = |v: &[f64]| if v[0] > 0.0 { f64::NAN } else { v[0] * v[0] };
        let r = ga_minimize(f, &[(-1.0, 1.0)], &GaParams { max_iters: 50, ..Default::default() }, &[]).unwrap();
        assert!(r.best_value.is_finite() && r.best[0] <= 0.0);
    }

    #[test]
    fn history_bounded_by_budget() {
        let r = ga_minimize(sphere, &[(-1.0, 1.0)], &GaParams { max_iters: 0, ..Default::default() }, &[]).unwrap();
        assert!(r.history.is_empty());
        let r = pso_minimize(sphere, &[(-1.0, 1.0)], &PsoParams { max_iters: 7, ..Default::default() }, &[]).unwrap();
        assert_eq!(r.history.len(), 7);
    }
}
