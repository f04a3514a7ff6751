//! PCA features, a randomized decision forest and the repeated hold-out
//! comparison between training conditions.

pub mod experiment;
pub mod forest;
pub mod pca;

pub use experiment::{
    accuracy_rating, run_experiment, Condition, ExperimentConfig, ExperimentOutcome, ExperimentReport, RunTrace,
};
pub use forest::{forest_predict, forest_train, DecisionTree, ForestConfig, ForestModel, Node};
pub use pca::{covariance_spectrum, pca_fit, pca_inverse, pca_transform, select_k, PcaModel};
