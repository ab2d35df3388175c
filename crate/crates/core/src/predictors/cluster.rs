//! Rule-base initialisation by clustering: subtractive (potential-based)
//! clustering and fuzzy c-means.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::stats::min_max;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubtractiveParams {
    /// Influence radius in the unit hypercube.
    pub radius: f64,
    /// Penalty radius as a multiple of `radius`.
    pub squash: f64,
    pub accept_ratio: f64,
    pub reject_ratio: f64,
}

impl Default for SubtractiveParams {
    fn default() -> Self {
        Self {
            radius: 0.5,
            squash: 1.25,
            accept_ratio: 0.5,
            reject_ratio: 0.15,
        }
    }
}

/// Cluster centres in the original coordinates of `x`.
///
/// Data are scaled to the unit hypercube; the highest-potential point becomes
/// a centre, its neighbourhood potential is subtracted, and selection stops
/// once the best remaining potential falls below `reject_ratio` of the first.
/// Potentials in the grey band between the two ratios are accepted only when
/// the point is far enough from existing centres.
pub fn subtractive_clusters(x: &Matrix, params: &SubtractiveParams) -> Result<Vec<Vec<f64>>> {
    let (n, d) = (x.rows(), x.cols());
    if n == 0 {
        return Err(Error::invalid("subtractive clustering needs at least one row"));
    }
    if params.radius <= 0.0 {
        return Err(Error::invalid("radius must be positive"));
    }
    let ranges: Vec<(f64, f64)> = (0..d).map(|j| min_max(&x.column(j))).collect();
    let unit: Vec<Vec<f64>> = x
        .row_iter()
        .map(|r| {
            r.iter()
                .zip(&ranges)
                .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
                .collect()
        })
        .collect();
    let alpha = 4.0 / (params.radius * params.radius);
    let rb = params.squash * params.radius;
    let beta = 4.0 / (rb * rb);
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();

    let mut potential: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| (-alpha * dist2(&unit[i], &unit[j])).exp()).sum())
        .collect();
    let argmax = |p: &[f64]| {
        p.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
    };
    let (first_idx, first_pot) = argmax(&potential);
    let mut centres = vec![first_idx];
    subtract(&mut potential, &unit, first_idx, first_pot, beta);

    loop {
        let (k, pk) = argmax(&potential);
        if pk <= 0.0 {
            break;
        }
        if pk > params.accept_ratio * first_pot {
            // accepted outright
        } else if pk < params.reject_ratio * first_pot {
            break;
        } else {
            let dmin = centres
                .iter()
                .map(|&c| dist2(&unit[k], &unit[c]).sqrt())
                .fold(f64::INFINITY, f64::min);
            if dmin / params.radius + pk / first_pot < 1.0 {
                potential[k] = 0.0;
                continue;
            }
        }
        centres.push(k);
        subtract(&mut potential, &unit, k, pk, beta);
        if centres.len() == n {
            break;
        }
    }
    Ok(centres.into_iter().map(|i| x.row(i).to_vec()).collect())
}

fn subtract(potential: &mut [f64], unit: &[Vec<f64>], centre: usize, pc: f64, beta: f64) {
    for (i, p) in potential.iter_mut().enumerate() {
        let d2: f64 = unit[i].iter().zip(&unit[centre]).map(|(a, b)| (a - b) * (a - b)).sum();
        *p -= pc * (-beta * d2).exp();
    }
    potential[centre] = 0.0;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FcmParams {
    pub clusters: usize,
    /// Partition matrix exponent, > 1.
    pub exponent: f64,
    pub max_iter: usize,
    /// Stop when no centre moves further than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for FcmParams {
    fn default() -> Self {
        Self {
            clusters: 2,
            exponent: 2.0,
            max_iter: 300,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmResult {
    pub centers: Vec<Vec<f64>>,
    /// rows x clusters; each row sums to 1.
    pub membership: Matrix,
    pub iterations: usize,
}

pub fn fcm_clusters(x: &Matrix, params: &FcmParams) -> Result<FcmResult> {
    let (n, d, c) = (x.rows(), x.cols(), params.clusters);
    if n == 0 {
        return Err(Error::invalid("fuzzy c-means needs data"));
    }
    if c == 0 {
        return Err(Error::invalid("need at least one cluster"));
    }
    if params.exponent <= 1.0 {
        return Err(Error::invalid("partition exponent must exceed 1"));
    }
    let m = params.exponent;
    let mut rng = rng::seeded(params.seed);
    let mut u = Matrix::zeros(n, c);
    for i in 0..n {
        let row = u.row_mut(i);
        row.iter_mut().for_each(|v| *v = rng.gen_range(0.0..1.0) + 1e-3);
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    let mut centers = update_centers(x, &u, m, c, d);
    let mut iterations = 0;
    for _ in 0..params.max_iter {
        iterations += 1;
        update_membership(x, &centers, m, &mut u);
        let next = update_centers(x, &u, m, c, d);
        let shift = centers
            .iter()
            .zip(&next)
            .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        centers = next;
        if shift < params.tol {
            break;
        }
    }
    update_membership(x, &centers, m, &mut u);
    Ok(FcmResult {
        centers,
        membership: u,
        iterations,
    })
}

fn update_centers(x: &Matrix, u: &Matrix, m: f64, c: usize, d: usize) -> Vec<Vec<f64>> {
    let mut num = vec![vec![0.0; d]; c];
    let mut den = vec![0.0; c];
    for (i, row) in x.row_iter().enumerate() {
        for k in 0..c {
            let w = u.get(i, k).powf(m);
            den[k] += w;
            for (acc, v) in num[k].iter_mut().zip(row) {
                *acc += w * v;
            }
        }
    }
    num.into_iter()
        .zip(den)
        .map(|(v, s)| v.into_iter().map(|a| if s > 0.0 { a / s } else { 0.0 }).collect())
        .collect()
}

fn update_membership(x: &Matrix, centers: &[Vec<f64>], m: f64, u: &mut Matrix) {
    let p = 2.0 / (m - 1.0);
    let c = centers.len();
    let mut dist = vec![0.0; c];
    for i in 0..x.rows() {
        let row = x.row(i);
        for (k, ctr) in centers.iter().enumerate() {
            dist[k] = row.iter().zip(ctr).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        }
        let out = u.row_mut(i);
        let zeros = dist.iter().filter(|&&v| v == 0.0).count();
        if zeros > 0 {
            for k in 0..c {
                out[k] = if dist[k] == 0.0 { 1.0 / zeros as f64 } else { 0.0 };
            }
            continue;
        }
        for k in 0..c {
            let s: f64 = dist.iter().map(|&dj| (dist[k] / dj).powf(p)).sum();
            out[k] = 1.0 / s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64, per: usize, centres: &[[f64; 2]], sd: f64) -> Matrix {
        let mut rng = rng::seeded(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let mut rows = Vec::new();
        for c in centres {
            for _ in 0..per {
                rows.push(vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]);
            }
        }
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn identical_points_one_centre() {
        let x = Matrix::from_rows(&vec![vec![2.0, -1.0, 4.0]; 25]).unwrap();
        let c = subtractive_clusters(&x, &SubtractiveParams::default()).unwrap();
        assert_eq!(c, vec![vec![2.0, -1.0, 4.0]]);
    }

    #[test]
    fn two_far_blobs_two_centres() {
        let x = blobs(1, 80, &[[0.0, 0.0], [10.0, 10.0]], 0.3);
        let c = subtractive_clusters(&x, &SubtractiveParams::default()).unwrap();
        assert_eq!(c.len(), 2);
        let near = |p: &Vec<f64>, q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() < 1.5;
        assert!(c.iter().any(|p| near(p, [0.0, 0.0])));
        assert!(c.iter().any(|p| near(p, [10.0, 10.0])));
    }

    #[test]
    fn default_radii_monotone_over_seeds() {
        for seed in 0..20 {
            let x = blobs(seed, 30, &[[0.0, 0.0], [3.0, 1.0], [1.0, 4.0], [5.0, 5.0]], 0.8);
            let count = |r| {
                subtractive_clusters(&x, &SubtractiveParams { radius: r, ..Default::default() })
                    .unwrap()
                    .len()
            };
            assert!(count(0.6) <= count(0.5), "seed {seed}");
        }
    }

    #[test]
    fn separated_blobs_monotone_in_radius() {
        for seed in 0..20 {
            let x = blobs(seed, 40, &[[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]], 0.3);
            let counts: Vec<usize> = [0.2, 0.3, 0.4, 0.5, 0.6, 0.8]
                .iter()
                .map(|&r| {
                    subtractive_clusters(&x, &SubtractiveParams { radius: r, ..Default::default() })
                        .unwrap()
                        .len()
                })
                .collect();
            for w in counts.windows(2) {
                assert!(w[1] <= w[0], "seed {seed}: {counts:?}");
            }
        }
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let x = blobs(2, 50, &[[1.0, 2.0], [4.0, -3.0]], 1.0);
        let r = fcm_clusters(&x, &FcmParams { clusters: 1, ..Default::default() }).unwrap();
        for j in 0..2 {
            let m = crate::stats::mean(&x.column(j));
            assert!((r.centers[0][j] - m).abs() < 1e-12);
        }
    }

    #[test]
    fn two_blobs_recovered() {
        let x = blobs(3, 100, &[[0.0, 0.0], [6.0, 6.0]], 0.2);
        let r = fcm_clusters(&x, &FcmParams::default()).unwrap();
        let mut c = r.centers.clone();
        c.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let m0 = [crate::stats::mean(&x.column(0)[..100]), crate::stats::mean(&x.column(1)[..100])];
        let m1 = [crate::stats::mean(&x.column(0)[100..]), crate::stats::mean(&x.column(1)[100..])];
        for j in 0..2 {
            assert!((c[0][j] - m0[j]).abs() < 0.05);
            assert!((c[1][j] - m1[j]).abs() < 0.05);
        }
    }

    #[test]
    fn memberships_sum_to_one() {
        let x = blobs(4, 40, &[[0.0, 0.0], [2.0, 1.0], [0.0, 3.0]], 0.7);
        let r = fcm_clusters(&x, &FcmParams { clusters: 3, ..Default::default() }).unwrap();
        for i in 0..x.rows() {
            assert!((r.membership.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fcm_rejects_bad_input() {
        assert!(fcm_clusters(&Matrix::zeros(0, 2), &FcmParams::default()).is_err());
        let x = blobs(5, 5, &[[0.0, 0.0]], 1.0);
        assert!(fcm_clusters(&x, &FcmParams { exponent: 1.0, ..Default::default() }).is_err());
    }
}
