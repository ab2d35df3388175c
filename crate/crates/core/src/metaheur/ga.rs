//! Real-coded genetic algorithm: tournament selection, blend crossover,
//! per-gene Gaussian mutation, single elite.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{argmin, check_bounds, evaluate, OptimResult};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population: usize,
    pub max_iters: usize,
    /// Share of each new generation produced by crossover.
    pub crossover_fraction: f64,
    /// Share of non-elite individuals that undergo mutation.
    pub mutation_fraction: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 10,
            max_iters: 2000,
            crossover_fraction: 0.3,
            mutation_fraction: 0.6,
            mutation_rate: 0.1,
            seed: 0,
        }
    }
}

const TOURNAMENT: usize = 3;
const BLEND_ALPHA: f64 = 0.5;
/// Mutation step as a share of the bound width, annealed linearly to a floor.
const MUTATION_SCALE: f64 = 0.1;
const MUTATION_FLOOR: f64 = 1e-3;

/// Minimise `objective` over the box `bounds`. `initial` candidates (clipped
/// to the box) fill the first population slots; the rest are uniform draws.
pub fn ga_minimize<F>(objective: F, bounds: &[(f64, f64)], params: &GaParams, initial: &[Vec<f64>]) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_bounds(bounds)?;
    let n = params.population;
    if n < 2 {
        return Err(Error::invalid("GA population must be at least 2"));
    }
    for f in [params.crossover_fraction, params.mutation_fraction, params.mutation_rate] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::invalid("GA fractions and rates must lie in [0, 1]"));
        }
    }
    let dims = bounds.len();
    let mut g = rng::seeded(params.seed);
    let mut pop = super::pso::initial_positions(&mut g, bounds, n, initial)?;
    let mut fit = evaluate(&objective, &pop);
    let mut history = Vec::with_capacity(params.max_iters);
    let n_cross = ((params.crossover_fraction * n as f64).round() as usize).min(n - 1);
    let n_mut = (params.mutation_fraction * (n - 1) as f64).round() as usize;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    for it in 0..params.max_iters {
        let elite = argmin(&fit);
        let mut next = Vec::with_capacity(n);
        next.push(pop[elite].clone());
        let tournament = |g: &mut rand_chacha::ChaCha8Rng| {
            let mut best = g.gen_range(0..n);
            for _ in 1..TOURNAMENT {
                let c = g.gen_range(0..n);
                if fit[c].total_cmp(&fit[best]).then(c.cmp(&best)).is_lt() {
                    best = c;
                }
            }
            best
        };
        for _ in 0..n_cross {
            let (p1, p2) = (tournament(&mut g), tournament(&mut g));
            let child: Vec<f64> = (0..dims)
                .map(|k| {
                    let (a, b) = (pop[p1][k], pop[p2][k]);
                    let (lo, hi) = (a.min(b), a.max(b));
                    let ext = BLEND_ALPHA * (hi - lo);
                    let v = if ext > 0.0 { g.gen_range(lo - ext..=hi + ext) } else { lo };
                    v.clamp(bounds[k].0, bounds[k].1)
                })
                .collect();
            next.push(child);
        }
        while next.len() < n {
            let p = tournament(&mut g);
            next.push(pop[p].clone());
        }
        let scale = MUTATION_SCALE * (1.0 - it as f64 / params.max_iters as f64).max(MUTATION_FLOOR);
        for idx in sample(&mut g, n - 1, n_mut.min(n - 1)).into_iter() {
            let ind = &mut next[idx + 1];
            for (k, v) in ind.iter_mut().enumerate() {
                if g.gen::<f64>() < params.mutation_rate {
                    let (lo, hi) = bounds[k];
                    *v = (*v + scale * (hi - lo) * unit.sample(&mut g)).clamp(lo, hi);
                }
            }
        }
        let mut next_fit = evaluate(&objective, &next[1..]);
        next_fit.insert(0, fit[elite]);
        pop = next;
        fit = next_fit;
        history.push(fit[argmin(&fit)]);
    }
    let b = argmin(&fit);
    Ok(OptimResult {
        best: pop[b].clone(),
        best_value: fit[b],
        history,
    })
}
