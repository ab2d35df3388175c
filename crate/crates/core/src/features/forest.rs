//! Regression forest: bootstrap-sampled variance-reduction trees with
//! random feature subsets at every split.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Minimum number of bootstrap rows in every leaf.
    pub min_leaf: usize,
    /// Candidate features per split; `None` means floor(sqrt(d)).
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 20,
            min_leaf: 5,
            features_per_split: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    /// Impurity (variance) decrease attributed to each feature.
    importance: Vec<f64>,
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn split_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<RegressionTree>,
    n_features: usize,
    /// Every tree is a single leaf (e.g. a constant target).
    pub degenerate: bool,
}

impl Forest {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.row_iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }
}

pub fn fit_random_forest(x: &Matrix, y: &[f64], params: &ForestParams) -> Result<Forest> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::invalid(format!("forest needs at least 2 rows, got {n}")));
    }
    if d == 0 {
        return Err(Error::invalid("forest needs at least one feature"));
    }
    if y.len() != n {
        return Err(Error::invalid("target length differs from row count"));
    }
    if params.n_trees == 0 || params.min_leaf == 0 {
        return Err(Error::invalid("n_trees and min_leaf must be positive"));
    }
    let mtry = params
        .features_per_split
        .unwrap_or_else(|| (d as f64).sqrt().floor() as usize)
        .clamp(1, d);
    let trees: Vec<RegressionTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::derived(params.seed, t as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            TreeBuilder {
                x,
                y,
                min_leaf: params.min_leaf,
                mtry,
                rng,
            }
            .build(rows)
        })
        .collect();
    let degenerate = trees.iter().all(|t| t.split_count() == 0);
    Ok(Forest {
        trees,
        n_features: d,
        degenerate,
    })
}

/// Mean per-tree impurity decrease per feature, normalised to sum to 1
/// (all zeros when no tree ever split).
pub fn rf_importances(forest: &Forest) -> Vec<f64> {
    let mut total = vec![0.0; forest.n_features];
    for t in &forest.trees {
        for (acc, v) in total.iter_mut().zip(&t.importance) {
            *acc += v;
        }
    }
    let sum: f64 = total.iter().sum();
    if sum > 0.0 {
        total.iter_mut().for_each(|v| *v /= sum);
    }
    total
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    min_leaf: usize,
    mtry: usize,
    rng: ChaCha8Rng,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl TreeBuilder<'_> {
    fn build(mut self, rows: Vec<usize>) -> RegressionTree {
        let n_boot = rows.len() as f64;
        let mut nodes = vec![Node::Leaf(0.0)];
        let mut importance = vec![0.0; self.x.cols()];
        let mut stack = vec![(0usize, rows)];
        while let Some((slot, rows)) = stack.pop() {
            let mean = rows.iter().map(|&i| self.y[i]).sum::<f64>() / rows.len() as f64;
            match self.best_split(&rows) {
                Some(c) => {
                    importance[c.feature] += c.gain / n_boot;
                    let left = nodes.len();
                    nodes.push(Node::Leaf(0.0));
                    nodes.push(Node::Leaf(0.0));
                    nodes[slot] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right: left + 1,
                    };
                    stack.push((left + 1, c.right));
                    stack.push((left, c.left));
                }
                None => nodes[slot] = Node::Leaf(mean),
            }
        }
        RegressionTree { nodes, importance }
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<Candidate> {
        let n = rows.len();
        if n < 2 * self.min_leaf {
            return None;
        }
        let (s, s2) = rows.iter().fold((0.0, 0.0), |(a, b), &i| {
            let v = self.y[i];
            (a + v, b + v * v)
        });
        let sse = s2 - s * s / n as f64;
        if sse <= 1e-12 * (1.0 + s2) {
            return None;
        }
        let mut features: Vec<usize> = (0..self.x.cols()).collect();
        features.shuffle(&mut self.rng);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted: Vec<(f64, f64)> = Vec::with_capacity(n);
        // keep drawing past `mtry` until some valid split is seen
        for (visited, &f) in features.iter().enumerate() {
            if visited >= self.mtry && best.is_some() {
                break;
            }
            sorted.clear();
            sorted.extend(rows.iter().map(|&i| (self.x.get(i, f), self.y[i])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut ls, mut ls2) = (0.0, 0.0);
            for k in 0..n - self.min_leaf {
                ls += sorted[k].1;
                ls2 += sorted[k].1 * sorted[k].1;
                let nl = k + 1;
                if nl < self.min_leaf || sorted[k].0 == sorted[k + 1].0 {
                    continue;
                }
                let nr = n - nl;
                let (rs, rs2) = (s - ls, s2 - ls2);
                let child = (ls2 - ls * ls / nl as f64) + (rs2 - rs * rs / nr as f64);
                let gain = sse - child;
                if best.map_or(true, |b| gain > b.2) {
                    best = Some((f, 0.5 * (sorted[k].0 + sorted[k + 1].0), gain));
                }
            }
        }
        let (feature, threshold, gain) = best?;
        if gain <= 1e-12 * sse {
            return None;
        }
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| self.x.get(i, feature) <= threshold);
        Some(Candidate {
            feature,
            threshold,
            gain,
            left,
            right,
        })
    }
}
