//! Screening pipeline for intracranial hemorrhage detection from ultrasound
//! tissue-pulsatility waveforms.
//!
//! The crate is organised the way the workflow runs:
//!
//! - [`cohort`], [`metrics`], [`rng`], [`error`]: shared types.
//! - [`ingest`]: the cohort CSV format and a synthetic cohort generator.
//! - [`preprocess`]: z-score scaling, correlation analysis, Jacobi PCA and
//!   the three feature representations (original, reduced, pca).
//! - [`classifiers`]: Gaussian naive Bayes, AdaBoost, LogitBoost, RUSBoost,
//!   a one-hidden-layer network and an SMO-trained SVM.
//! - [`evaluation`]: stratified splitting, k-fold CV, grid search and the
//!   benchmark harness that produces per-model, per-space reports.

pub mod classifiers;
pub mod cohort;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod metrics;
pub mod preprocess;
pub mod rng;
pub mod stats;

pub use cohort::{Cohort, Label};
pub use error::{Error, ErrorClass, Result};
pub use metrics::{compute_confusion, compute_macro_metrics, compute_metrics, ConfusionCounts, MetricsRecord};
pub use rng::RngStream;
