//! Whether GA refinement improves on its ANFIS(FCM) starting point.

mod common;

use drawres::pipeline::{FeatureSet, MethodKind};

#[test]
#[ignore = "GA refinement does not improve the hybrid-trained 39-input model on this data"]
fn anfis_ga_beats_anfis_fcm_in_most_seeds() {
    let models = [
        (MethodKind::AnfisFcm, FeatureSet::Combined),
        (MethodKind::AnfisGa, FeatureSet::Combined),
    ];
    let seeds = 10;
    let wins = (0..seeds)
        .filter(|&s| {
            let r = common::seed_test_r(s, &models);
            r[&models[1]] > r[&models[0]]
        })
        .count();
    assert!(wins * 10 >= seeds as usize * 7, "ANFIS-GA won {wins} of {seeds} seeds");
}
