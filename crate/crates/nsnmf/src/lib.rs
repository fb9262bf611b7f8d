//! Multilayer nonlinear semi-nonnegative matrix factorization for learning
//! incomplete explicit ratings, together with classical collaborative
//! filtering baselines, RMSE evaluation, and k-means/WCSS clustering of the
//! learned item representations.
//!
//! Everything stochastic is driven by the pinned generator in [`rng`], so
//! datasets, splits, models, and metrics are pure functions of
//! (input bytes, config, seed).

pub mod activation;
pub mod baselines;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod report;
pub mod rng;
pub mod synth;

pub use activation::ActivationKind;
pub use data::{DatasetView, FormatTag, LoadOptions, RatingDataset, RatingTriple};
pub use error::{Error, Result};
pub use model::{NsnmfModel, Predictor, TrainConfig, TrainReport};
