//! Draw-resistance prediction toolkit for cigarette making lines.

pub mod error;
pub mod ingest;
pub mod linalg;
pub mod matrix;
pub mod metaheur;
pub mod pipeline;
pub mod predictors;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod synth;
pub mod time;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use time::Timestamp;
pub mod features;
