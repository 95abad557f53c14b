//! Sentence-level quality estimation: hypothesis features and an ARD
//! Gaussian-process regressor whose lengthscales rank feature relevance.

mod features;
mod gp;
pub mod optim;

pub use features::{hypothesis_from_sentence, FeatureExtractor, FeatureTable, FEATURE_NAMES};
pub use gp::{
    kernel_matrix, log_marginal_likelihood, FeatureRanking, GpConfig, GpModel, Hyperparameters, Standardizer,
    MAX_TRAINING_ROWS, MODEL_FORMAT_VERSION,
};
