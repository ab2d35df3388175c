//! Predictor family: MLFFNN, ANFIS, GMDH, plus metrics and reject flagging.

pub mod anfis;
pub mod cluster;
pub mod gmdh;
pub mod limits;
pub mod metrics;
pub mod mlffnn;
pub mod model_io;
pub mod scaler;

pub use cluster::{fcm_clusters, subtractive_clusters, FcmParams, FcmResult, SubtractiveParams};
pub use limits::{flag_substandard, SpecLimits};
pub use metrics::{error_metrics, evaluate, write_metrics_table, Metrics, MetricsRow};
pub use mlffnn::{mlffnn_train, MlffnnConfig, MlffnnModel, TrainReport, TrainVariant};
pub use scaler::{Standardizer, TargetScaler};
pub use anfis::{
    anfis_eval, anfis_init, anfis_ls_consequents, consequent_design, anfis_train_hybrid, premise_gradient, Bell, EvalTrace,
    FuzzyRuleBase, HybridReport, LsStep, Rule,
};
pub use gmdh::{gmdh_train, GmdhConfig, GmdhNetwork, Neuron};
pub use model_io::{ModelBody, TrainedModel};
