use super::config::{FeatureSet, MethodKind, TrainConfig};
use crate::error::Result;
use crate::ingest::SampleSet;
use crate::matrix::Matrix;
use crate::metaheur::{anfis_metaheuristic_train, Method};
use crate::predictors::{
    anfis_init, anfis_train_hybrid, fcm_clusters, gmdh_train, mlffnn_train, subtractive_clusters, FuzzyRuleBase,
    MlffnnConfig, ModelBody, Standardizer, TrainedModel,
};

/// A fitted model and, for metaheuristic methods, the optimiser history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: TrainedModel,
    pub params: String,
    pub history: Option<Vec<f64>>,
}

fn hybrid(init: FuzzyRuleBase, xz: &Matrix, y: &[f64], cfg: &TrainConfig) -> Result<FuzzyRuleBase> {
    Ok(anfis_train_hybrid(&init, xz, y, cfg.anfis.epochs, cfg.anfis.learning_rate)?.0)
}

/// ANFIS initialised from fuzzy c-means and hybrid trained.
pub fn anfis_fcm(xz: &Matrix, y: &[f64], cfg: &TrainConfig) -> Result<FuzzyRuleBase> {
    let centers = fcm_clusters(xz, &cfg.fcm)?.centers;
    hybrid(anfis_init(&centers, xz, y)?, xz, y, cfg)
}

/// ANFIS initialised from subtractive clustering, keeping the first
/// `max_rules` centres.
pub fn anfis_sc(xz: &Matrix, y: &[f64], cfg: &TrainConfig) -> Result<FuzzyRuleBase> {
    let mut centers = subtractive_clusters(xz, &cfg.subtractive)?;
    centers.truncate(cfg.anfis.max_rules);
    hybrid(anfis_init(&centers, xz, y)?, xz, y, cfg)
}

pub fn train_model(method: MethodKind, set: FeatureSet, train: &SampleSet, cfg: &TrainConfig) -> Result<Trained> {
    let d = train.feature_names.len();
    let y = &train.y;
    let x_scaler = Standardizer::fit(&train.x);
    let xz = x_scaler.transform(&train.x);
    let a = &cfg.anfis;
    let mut history = None;
    let (body, params) = match method {
        MethodKind::MlffnnGd | MethodKind::MlffnnLm => {
            let mc = MlffnnConfig {
                variant: method.mlffnn_variant().expect("mlffnn method"),
                ..cfg.mlffnn.clone()
            };
            let (m, _) = mlffnn_train(&xz, y, &mc)?;
            (ModelBody::Mlffnn(m), format!("hidden={} epochs={}", mc.hidden, mc.max_epochs))
        }
        MethodKind::AnfisFcm => (
            ModelBody::Anfis(anfis_fcm(&xz, y, cfg)?),
            format!("NC={} PME={} epochs={}", cfg.fcm.clusters, cfg.fcm.exponent, a.epochs),
        ),
        MethodKind::AnfisSc => {
            let fis = anfis_sc(&xz, y, cfg)?;
            let p = format!("IR={} rules={} epochs={}", cfg.subtractive.radius, fis.rules.len(), a.epochs);
            (ModelBody::Anfis(fis), p)
        }
        MethodKind::AnfisGa | MethodKind::AnfisPso => {
            let init = anfis_fcm(&xz, y, cfg)?;
            let (m, p) = if method == MethodKind::AnfisGa {
                (Method::Ga(cfg.ga), format!("N={} iters={}", cfg.ga.population, cfg.ga.max_iters))
            } else {
                (Method::Pso(cfg.pso), format!("N={} iters={}", cfg.pso.population, cfg.pso.max_iters))
            };
            let (fis, report) = anfis_metaheuristic_train(&xz, y, &init, &m)?;
            history = Some(report.history);
            (ModelBody::Anfis(fis), p)
        }
        MethodKind::Gmdh => {
            let g = &cfg.gmdh;
            (
                ModelBody::Gmdh(gmdh_train(&xz, y, g)?),
                format!("N={} L={} P={}", g.max_neurons, g.max_layers, g.pressure),
            )
        }
    };
    Ok(Trained {
        model: TrainedModel {
            method: method.label().to_string(),
            features: train.feature_names.clone(),
            x_scaler,
            body,
        },
        params: format!("features={set}({d}) {params}"),
        history,
    })
}
