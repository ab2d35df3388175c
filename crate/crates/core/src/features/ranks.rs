use crate::error::{Error, Result};
use crate::stats::pearson;

/// 1-based ranks; tied values share the mean of the positions they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j share their mean
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Spearman's rho as the Pearson correlation of average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("need at least 2 observations"));
    }
    pearson(&average_ranks(x), &average_ranks(y))
        .ok_or(Error::UndefinedCorrelation("constant input has no rank spread"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distinct_values() {
        assert_eq!(average_ranks(&[10.0, 20.0, 30.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(average_ranks(&[30.0, 10.0, 20.0]), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn ties_share_mean_rank() {
        assert_eq!(average_ranks(&[5.0, 5.0, 7.0]), vec![1.5, 1.5, 3.0]);
        assert_eq!(average_ranks(&[2.0, 2.0, 2.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn perfect_and_reversed() {
        assert!((spearman_rho(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman_rho(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_classic_formula() {
        // 1 - 6*sum(d^2)/(n(n^2-1)) with d = (-2, 1, 1), sum 6, n 3
        let expected = 1.0 - 6.0 * 6.0 / (3.0 * 8.0);
        assert!((spearman_rho(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap() - expected).abs() < 1e-12);
        assert!((expected + 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_input_is_undefined() {
        assert!(matches!(
            spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    proptest! {
        #[test]
        fn rank_sum_identity(v in proptest::collection::vec(0i32..20, 1..300)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let n = v.len() as f64;
            let r = average_ranks(&v);
            prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
            prop_assert!(r.iter().all(|&x| (1.0..=n).contains(&x)));
        }

        #[test]
        fn invariant_under_increasing_transforms(
            pairs in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 3..100)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            if let Ok(base) = spearman_rho(&x, &y) {
                let ex: Vec<f64> = x.iter().map(|v| v.exp()).collect();
                let cy: Vec<f64> = y.iter().map(|v| v * v * v).collect();
                prop_assert!((spearman_rho(&ex, &y).unwrap() - base).abs() < 1e-12);
                prop_assert!((spearman_rho(&x, &cy).unwrap() - base).abs() < 1e-12);
                prop_assert!((spearman_rho(&y, &x).unwrap() - base).abs() < 1e-12);
            }
        }
    }
}
