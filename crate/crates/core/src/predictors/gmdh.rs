//! GMDH polynomial network: layers of pairwise quadratic neurons grown while
//! an external (held-out) criterion keeps improving.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmdhConfig {
    /// Maximum neurons kept per layer (N).
    pub max_neurons: usize,
    /// Maximum number of layers (L).
    pub max_layers: usize,
    /// Selection pressure P in [0, 1].
    pub pressure: f64,
    /// Share of training rows used for fitting; the rest score candidates.
    pub fit_fraction: f64,
    pub seed: u64,
}

impl Default for GmdhConfig {
    fn default() -> Self {
        Self {
            max_neurons: 50,
            max_layers: 7,
            pressure: 0.6,
            fit_fraction: 0.7,
            seed: 0,
        }
    }
}

/// `y = c0 + c1 u + c2 v + c3 u^2 + c4 v^2 + c5 u v`, where `u` and `v` are
/// outputs of the previous layer (raw inputs for the first layer).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub inputs: (usize, usize),
    pub coeffs: [f64; 6],
    /// Selection-part RMSE.
    pub criterion: f64,
}

impl Neuron {
    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let c = &self.coeffs;
        c[0] + c[1] * u + c[2] * v + c[3] * u * u + c[4] * v * v + c[5] * u * v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmdhNetwork {
    pub inputs: usize,
    pub layers: Vec<Vec<Neuron>>,
    pub config: GmdhConfig,
}

impl GmdhNetwork {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Best external criterion of each layer as it was grown.
    pub fn layer_criteria(&self) -> Vec<f64> {
        self.layers
            .iter()
            .map(|l| l.iter().map(|n| n.criterion).fold(f64::INFINITY, f64::min))
            .collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut prev: Vec<f64> = row.to_vec();
        for layer in &self.layers {
            prev = layer.iter().map(|n| n.eval(prev[n.inputs.0], prev[n.inputs.1])).collect();
        }
        prev[0]
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.row_iter().map(|r| self.predict_row(r)).collect()
    }
}

fn design_row(u: f64, v: f64, out: &mut [f64]) {
    out.copy_from_slice(&[1.0, u, v, u * u, v * v, u * v]);
}

/// Least-squares fit of one quadratic neuron.
pub fn fit_neuron(u: &[f64], v: &[f64], y: &[f64]) -> [f64; 6] {
    let mut a = vec![0.0; y.len() * 6];
    for i in 0..y.len() {
        design_row(u[i], v[i], &mut a[i * 6..(i + 1) * 6]);
    }
    let sol = lstsq(&a, 6, y);
    let mut c = [0.0; 6];
    c.copy_from_slice(&sol.coefficients);
    c
}

fn rmse_on(neuron: &Neuron, u: &[f64], v: &[f64], y: &[f64]) -> f64 {
    let s: f64 = (0..y.len())
        .map(|i| {
            let e = neuron.eval(u[i], v[i]) - y[i];
            e * e
        })
        .sum();
    (s / y.len() as f64).sqrt()
}

/// Values of one candidate feature split into fit and selection parts.
struct Column {
    fit: Vec<f64>,
    sel: Vec<f64>,
}

pub fn gmdh_train(x: &Matrix, y: &[f64], cfg: &GmdhConfig) -> Result<GmdhNetwork> {
    let (n, d) = (x.rows(), x.cols());
    if d < 2 {
        return Err(Error::invalid("GMDH needs at least two features to form pairs"));
    }
    if n != y.len() {
        return Err(Error::invalid("row count differs from target length"));
    }
    if !(0.0..=1.0).contains(&cfg.pressure) {
        return Err(Error::invalid("selection pressure must lie in [0, 1]"));
    }
    if cfg.max_neurons == 0 || cfg.max_layers == 0 {
        return Err(Error::invalid("max_neurons and max_layers must be positive"));
    }
    if n < 7 {
        return Err(Error::invalid(format!("GMDH needs at least 7 rows, got {n}")));
    }
    let n_fit = ((cfg.fit_fraction * n as f64).round() as usize).clamp(6, n.saturating_sub(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(cfg.seed));
    let (fit_idx, sel_idx) = order.split_at(n_fit);
    let y_fit: Vec<f64> = fit_idx.iter().map(|&i| y[i]).collect();
    let y_sel: Vec<f64> = sel_idx.iter().map(|&i| y[i]).collect();

    let mut current: Vec<Column> = (0..d)
        .map(|j| Column {
            fit: fit_idx.iter().map(|&i| x.get(i, j)).collect(),
            sel: sel_idx.iter().map(|&i| x.get(i, j)).collect(),
        })
        .collect();
    let mut layers: Vec<Vec<Neuron>> = Vec::new();
    let mut prev_best = f64::INFINITY;

    while layers.len() < cfg.max_layers && current.len() >= 2 {
        let pairs: Vec<(usize, usize)> = (0..current.len())
            .flat_map(|i| (i + 1..current.len()).map(move |j| (i, j)))
            .collect();
        let mut cands: Vec<Neuron> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let coeffs = fit_neuron(&current[i].fit, &current[j].fit, &y_fit);
                let mut nr = Neuron {
                    inputs: (i, j),
                    coeffs,
                    criterion: 0.0,
                };
                let c = rmse_on(&nr, &current[i].sel, &current[j].sel, &y_sel);
                nr.criterion = if c.is_finite() { c } else { f64::INFINITY };
                nr
            })
            .collect();
        cands.sort_by(|a, b| a.criterion.total_cmp(&b.criterion).then(a.inputs.cmp(&b.inputs)));
        let best = cands[0].criterion;
        if !layers.is_empty() && !(best < prev_best) {
            break;
        }
        let worst = cands.iter().rev().map(|c| c.criterion).find(|c| c.is_finite()).unwrap_or(best);
        let threshold = best + cfg.pressure * (worst - best);
        let kept: Vec<Neuron> = cands
            .into_iter()
            .filter(|c| c.criterion <= threshold)
            .take(cfg.max_neurons)
            .collect();
        current = kept
            .iter()
            .map(|nr| {
                let (i, j) = nr.inputs;
                Column {
                    fit: (0..y_fit.len()).map(|k| nr.eval(current[i].fit[k], current[j].fit[k])).collect(),
                    sel: (0..y_sel.len()).map(|k| nr.eval(current[i].sel[k], current[j].sel[k])).collect(),
                }
            })
            .collect();
        prev_best = best;
        layers.push(kept);
    }
    Ok(GmdhNetwork {
        inputs: d,
        layers: prune(layers),
        config: *cfg,
    })
}

/// Keep only the best final neuron and its ancestors, re-indexing inputs.
fn prune(layers: Vec<Vec<Neuron>>) -> Vec<Vec<Neuron>> {
    let depth = layers.len();
    // kept[l] = sorted original indices retained in layer l
    let mut kept: Vec<Vec<usize>> = vec![Vec::new(); depth];
    kept[depth - 1] = vec![0];
    for l in (1..depth).rev() {
        let mut need: Vec<usize> = kept[l]
            .iter()
            .flat_map(|&k| [layers[l][k].inputs.0, layers[l][k].inputs.1])
            .collect();
        need.sort_unstable();
        need.dedup();
        kept[l - 1] = need;
    }
    let mut out = Vec::with_capacity(depth);
    for l in 0..depth {
        let layer: Vec<Neuron> = kept[l]
            .iter()
            .map(|&k| {
                let mut nr = layers[l][k];
                if l > 0 {
                    let pos = |orig: usize| kept[l - 1].binary_search(&orig).expect("ancestor kept");
                    nr.inputs = (pos(nr.inputs.0), pos(nr.inputs.1));
                }
                nr
            })
            .collect();
        out.push(layer);
    }
    out
}
