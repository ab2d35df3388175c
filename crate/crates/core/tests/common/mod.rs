#![allow(dead_code)]

use std::collections::BTreeMap;

use drawres::ingest::{group_records, Split};
use drawres::pipeline::{
    feature_list, ingest_series, score_and_select, shift_samples, train_model, FeatureConfig, FeatureSet,
    IngestConfig, MethodKind, TrainConfig,
};
use drawres::predictors::evaluate;
use drawres::synth::{generate, SynthConfig};

/// Test R for each requested (method, feature set) on one synthetic seed.
pub fn seed_test_r(seed: u64, models: &[(MethodKind, FeatureSet)]) -> BTreeMap<(MethodKind, FeatureSet), f64> {
    let out = generate(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })
    .expect("synth");
    let ic = IngestConfig::default();
    let ing = ingest_series(&group_records(out.records).expect("group"), &ic).expect("ingest");
    let (_, sel) = score_and_select(&ing, &ic, &FeatureConfig::default(), seed).expect("select");
    let mut tc = TrainConfig::default();
    tc.fcm.seed = seed;
    tc.gmdh.seed = seed;
    tc.ga.seed = seed;
    tc.pso.seed = seed;
    let mut r = BTreeMap::new();
    for &(m, set) in models {
        let (s, _) = shift_samples(&ing, &feature_list(&sel, set), &ic, seed).expect("samples");
        let (train, test) = (s.subset(Split::Train), s.subset(Split::Test));
        let t = train_model(m, set, &train, &tc).expect("train");
        let p = t.model.predict(&test.x).expect("predict");
        r.insert((m, set), evaluate(&p, &test.y).expect("metrics").r);
    }
    r
}
