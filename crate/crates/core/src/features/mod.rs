//! Linear (Spearman) and nonlinear (forest importance) indicator scoring and
//! the two-stage direct/potential selection.

mod forest;
mod ranks;
mod select;

pub use forest::{fit_random_forest, rf_importances, Forest, ForestParams, RegressionTree};
pub use ranks::{average_ranks, spearman_rho};
pub use select::{
    score_features, select, write_scores, FeatureScore, FeatureScores, FeatureSelection,
    DEFAULT_F_LIN, DEFAULT_F_NONLIN,
};
