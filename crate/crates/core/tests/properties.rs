use drawres::ingest::{group_records, read_change_log, Record};
use drawres::predictors::{anfis_eval, evaluate, Bell, FuzzyRuleBase, Rule};
use drawres::sampling::{p_sampled_approx, p_sampled_exact};
use drawres::Timestamp;
use proptest::prelude::*;

fn bell() -> impl Strategy<Value = Bell> {
    (0.2f64..3.0, 0.1f64..3.0, -3.0f64..3.0).prop_map(|(a, b, c)| Bell { a, b, c })
}

fn fis_and_input() -> impl Strategy<Value = (FuzzyRuleBase, Vec<f64>)> {
    (1usize..5, 1usize..6).prop_flat_map(|(d, r)| {
        let rule = (
            prop::collection::vec(bell(), d),
            prop::collection::vec(-2.0f64..2.0, d),
            -2.0f64..2.0,
        )
            .prop_map(|(premises, coeffs, bias)| Rule { premises, coeffs, bias });
        (
            prop::collection::vec(rule, r).prop_map(move |rules| FuzzyRuleBase::new(d, rules).unwrap()),
            prop::collection::vec(-4.0f64..4.0, d),
        )
    })
}

proptest! {
    #[test]
    fn normalised_strengths_sum_to_one((fis, x) in fis_and_input()) {
        let (out, tr) = anfis_eval(&fis, &x).unwrap();
        prop_assert!((tr.normalized.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!((tr.rule_outputs.iter().sum::<f64>() - out).abs() <= 1e-9 * (1.0 + out.abs()));
        let lo = tr.normalized.iter().zip(&fis.rules).map(|(_, r)| r.coeffs.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>() + r.bias);
        let (min, max) = lo.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        prop_assert!(out >= min - 1e-9 && out <= max + 1e-9);
    }

    #[test]
    fn rmse_is_root_mse(pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..60)) {
        let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Ok(m) = evaluate(&p, &t) {
            prop_assert!((m.rmse - m.mse.sqrt()).abs() <= 1e-9);
            prop_assert!(m.r.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn detection_probability_grows_with_sample_and_rejects(y in 100u64..100_000, z in 1u64..99, m in 1u64..99) {
        let p = p_sampled_exact(y, z, m).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(p_sampled_exact(y, z + 1, m).unwrap() >= p);
        prop_assert!(p_sampled_exact(y, z, m + 1).unwrap() >= p);
        prop_assert!(p_sampled_approx(y as f64, z as f64, m as f64).unwrap() <= p + 1e-12);
    }

    #[test]
    fn interleaving_does_not_change_grouping(
        a in prop::collection::vec(0i64..1000, 1..30),
        b in prop::collection::vec(0i64..1000, 1..30),
        seed in any::<u64>(),
    ) {
        let recs = |id: &str, vals: &[i64]| -> Vec<Record> {
            let mut out = Vec::new();
            let mut last = None;
            for (k, &v) in vals.iter().enumerate() {
                if last != Some(v) {
                    out.push(Record::new(Timestamp::from_millis(k as i64 * 2000), id, v as f64));
                    last = Some(v);
                }
            }
            out
        };
        let (ra, rb) = (recs("A", &a), recs("B", &b));
        let sorted: Vec<Record> = ra.iter().chain(&rb).cloned().collect();
        // Merge the two streams in a seeded order that keeps each one ordered.
        let mut rng = drawres::rng::seeded(seed);
        let (mut i, mut j) = (0, 0);
        let mut mixed = Vec::new();
        while i < ra.len() || j < rb.len() {
            use rand::Rng;
            if j == rb.len() || (i < ra.len() && rng.gen_bool(0.5)) {
                mixed.push(ra[i].clone());
                i += 1;
            } else {
                mixed.push(rb[j].clone());
                j += 1;
            }
        }
        let mut csv = String::from("timestamp,indicator,value\n");
        for r in &mixed {
            csv.push_str(&format!("{},{},{}\n", r.timestamp, r.indicator, r.value));
        }
        let expected = group_records(sorted).unwrap();
        prop_assert_eq!(&group_records(mixed).unwrap(), &expected);
        prop_assert_eq!(&read_change_log(csv.as_bytes()).unwrap(), &expected);
    }
}
