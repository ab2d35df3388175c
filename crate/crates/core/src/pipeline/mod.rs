//! End-to-end runs driven by a TOML configuration.

mod config;
mod data;
mod run;
pub mod svg;
mod train;

pub use config::{
    AnfisConfig, FeatureConfig, FeatureSet, FlagConfig, IngestConfig, InputConfig, MethodKind, RunConfig,
    SamplingConfig, TrainConfig,
};
pub use data::{
    candidate_indicators, feature_list, ingest_series, score_and_select, shift_samples, shifts_of, Ingested,
};
pub use train::{anfis_fcm, anfis_sc, train_model, Trained};
pub use run::{run, Manifest, RunOutcome, Subcommand};
