//! Global-best particle swarm with constant inertia and a velocity clamp.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmin, check_bounds, evaluate, OptimResult};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoParams {
    pub population: usize,
    pub max_iters: usize,
    pub inertia: f64,
    /// Pull towards each particle's own best.
    pub personal: f64,
    /// Pull towards the swarm best.
    pub global: f64,
    /// Velocity limit as a share of the bound width.
    pub velocity_clamp: f64,
    pub seed: u64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            population: 10,
            max_iters: 2000,
            inertia: 0.9,
            personal: 0.9,
            global: 1.8,
            velocity_clamp: 0.2,
            seed: 0,
        }
    }
}

pub(crate) fn initial_positions(
    g: &mut ChaCha8Rng,
    bounds: &[(f64, f64)],
    n: usize,
    initial: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let mut pop = Vec::with_capacity(n);
    for cand in initial.iter().take(n) {
        if cand.len() != bounds.len() {
            return Err(Error::LayoutMismatch {
                expected: bounds.len(),
                actual: cand.len(),
            });
        }
        pop.push(cand.iter().zip(bounds).map(|(v, &(lo, hi))| v.clamp(lo, hi)).collect());
    }
    while pop.len() < n {
        pop.push(
            bounds
                .iter()
                .map(|&(lo, hi)| if hi > lo { g.gen_range(lo..=hi) } else { lo })
                .collect(),
        );
    }
    Ok(pop)
}

/// Minimise `objective` over `bounds`. Particles start at rest; `initial`
/// candidates occupy the first slots, the rest are uniform draws.
pub fn pso_minimize<F>(objective: F, bounds: &[(f64, f64)], params: &PsoParams, initial: &[Vec<f64>]) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_bounds(bounds)?;
    let n = params.population;
    if n == 0 {
        return Err(Error::invalid("PSO needs at least one particle"));
    }
    let mut g = rng::seeded(params.seed);
    let mut pos = initial_positions(&mut g, bounds, n, initial)?;
    let mut vel = vec![vec![0.0; bounds.len()]; n];
    let vmax: Vec<f64> = bounds.iter().map(|(lo, hi)| params.velocity_clamp * (hi - lo)).collect();
    let mut pbest = pos.clone();
    let mut pbest_val = evaluate(&objective, &pos);
    let mut gi = argmin(&pbest_val);
    let (mut gbest, mut gbest_val) = (pbest[gi].clone(), pbest_val[gi]);
    let mut history = Vec::with_capacity(params.max_iters);

    for _ in 0..params.max_iters {
        for i in 0..n {
            for k in 0..bounds.len() {
                let (r1, r2): (f64, f64) = (g.gen(), g.gen());
                let v = params.inertia * vel[i][k]
                    + params.personal * r1 * (pbest[i][k] - pos[i][k])
                    + params.global * r2 * (gbest[k] - pos[i][k]);
                let v = v.clamp(-vmax[k], vmax[k]);
                let x = pos[i][k] + v;
                let (lo, hi) = bounds[k];
                if x < lo || x > hi {
                    pos[i][k] = x.clamp(lo, hi);
                    vel[i][k] = 0.0;
                } else {
                    pos[i][k] = x;
                    vel[i][k] = v;
                }
            }
        }
        let vals = evaluate(&objective, &pos);
        for i in 0..n {
            if vals[i] < pbest_val[i] {
                pbest_val[i] = vals[i];
                pbest[i].clone_from(&pos[i]);
            }
        }
        gi = argmin(&pbest_val);
        if pbest_val[gi] < gbest_val {
            gbest_val = pbest_val[gi];
            gbest.clone_from(&pbest[gi]);
        }
        history.push(gbest_val);
    }
    Ok(OptimResult {
        best: gbest,
        best_value: gbest_val,
        history,
    })
}
