//! The synthetic generator's ground truth is what the pipeline must recover.

use drawres::features::spearman_rho;
use drawres::ingest::{group_records, Split};
use drawres::pipeline::{ingest_series, shift_samples, IngestConfig};
use drawres::sampling::{fit_normal, period_histogram};
use drawres::synth::{generate, GroupSizes, RejectCluster, ShiftSpan, SynthConfig, TARGET};

#[test]
fn planted_direct_indicators_outrank_noise() {
    for seed in 0..5 {
        let out = generate(&SynthConfig {
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let t = &out.truth;
        let ic = IngestConfig::default();
        let ing = ingest_series(&group_records(out.records).unwrap(), &ic).unwrap();
        let ids = GroupSizes::default().indicator_ids();
        let (s, _) = shift_samples(&ing, &ids, &ic, seed).unwrap();
        let train = s.subset(Split::Train);
        let rho = |j: usize| spearman_rho(&train.x.column(j), &train.y).unwrap_or(0.0).abs();
        let planted: Vec<f64> = (0..ids.len()).filter(|&j| t.direct.contains(&ids[j])).map(rho).collect();
        let noise: Vec<f64> = (0..ids.len())
            .filter(|&j| !t.direct.contains(&ids[j]) && !t.potential.contains(&ids[j]))
            .map(rho)
            .collect();
        let weakest_planted = planted.iter().copied().fold(f64::INFINITY, f64::min);
        let strongest_noise = noise.iter().copied().fold(0.0, f64::max);
        assert!(
            weakest_planted > strongest_noise,
            "seed {seed}: planted min {weakest_planted:.3} vs noise max {strongest_noise:.3}"
        );
    }
}

#[test]
fn reject_mask_matches_target_and_limits() {
    let cfg = SynthConfig::default();
    let out = generate(&cfg).unwrap();
    let t = &out.truth;
    let mut m1 = 0;
    for &(s, e) in &t.shift_ranges {
        let mask = &t.reject_mask[s..e];
        m1 += period_histogram(mask, 100, 6000).unwrap().m1;
        for (k, &r) in mask.iter().enumerate() {
            assert_eq!(r, cfg.limits.is_substandard(t.draw_resistance[s + k]));
        }
    }
    assert_eq!(m1 as usize, t.reject_mask.iter().filter(|&&r| r).count());
    assert!(t.planted_rejects.iter().all(|&i| t.reject_mask[i]));
    assert!(t.observed.contains_key(TARGET));
}

#[test]
fn planted_cluster_spread_is_recovered() {
    let cfg = SynthConfig {
        seed: 11,
        shift_schedule: vec![ShiftSpan {
            start: "07:00:00".into(),
            end: "13:00:00".into(),
        }],
        reject_cluster: Some(RejectCluster {
            count: 300,
            ..RejectCluster::default()
        }),
        ..SynthConfig::default()
    };
    let t = generate(&cfg).unwrap().truth;
    let &(s, e) = &t.shift_ranges[0];
    let all = period_histogram(&t.reject_mask[s..e], 100, 43200).unwrap();
    assert!(all.m1 >= 300);
    let mut planted = vec![false; e - s];
    for &k in &t.planted_rejects {
        planted[k - s] = true;
    }
    let dist = period_histogram(&planted, 100, 43200).unwrap();
    assert_eq!(dist.m1, 300);
    let fit = fit_normal(&dist).unwrap();
    assert!((fit.sigma - 1.16).abs() < 0.15, "sigma {} (all rejects {} at sigma {})", fit.sigma, all.m1, fit_normal(&all).unwrap().sigma);
    assert!((fit.mu - 50.0).abs() < 0.3, "mu {}", fit.mu);
}
