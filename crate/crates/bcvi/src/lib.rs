//! Bayesian cluster validity: how many clusters does the data have, as a
//! posterior distribution rather than a single point estimate.
//!
//! The pipeline clusters a dataset for every candidate count k, scores each
//! clustering with a validity index (Davies-Bouldin, STR, WI for hard
//! partitions; Xie-Beni, KWON2, WP for fuzzy ones), normalizes the score
//! series into a ratio vector, and feeds it through a conjugate
//! Dirichlet or generalized-Dirichlet update. The result is a mean, a
//! variance, and a ranking for every k — an uncertainty-aware replacement
//! for "pick the argmax of the index".

pub mod bayes;
pub mod clustering;
pub mod config;
pub mod cvi;
pub mod cvi_hard;
pub mod cvi_soft;
pub mod dataset;
pub mod error;
pub mod matrix;
pub mod paircorr;
pub mod pipeline;

pub use bayes::{
    bcvi_rank, compute_ratios, dirichlet_posterior, gd_last_moment, gd_moment, gd_posterior,
    BcviResult, DirichletPrior, GdPrior, PosteriorParams, PriorProfile, Ranking, RatioVector,
};
pub use clustering::{
    fcm_best_of_restarts, kmeans_best_of_restarts, HardClustering, RunOptions, SoftClustering,
};
pub use cvi::{CviSeries, Direction, IndexKind};
pub use dataset::{clustering_accuracy, generate_mixture, Dataset, MixtureSpec};
pub use error::{Error, ErrorClass, Result};
pub use config::{build_config, Algorithm, DataSource, Overrides, PipelineConfig, PriorConfig};
pub use matrix::Matrix;
pub use pipeline::{run_pipeline, run_pipeline_on, ReportBundle};
