//! Standardization, correlation analysis, PCA and the feature
//! representations built from them.

mod correlation;
mod eigen;
mod features;
mod pca;
mod scaler;

pub use correlation::correlation_matrix;
pub use eigen::{jacobi_eigen, SymmetricEigen, MAX_SWEEPS, OFF_DIAGONAL_RTOL};
pub use features::{
    build_feature_space, FeatureConfig, FeaturePipeline, FeatureSpace, ReducedSelection, DEFAULT_REDUCED_FRAMES,
};
pub use pca::{fit_pca, retained_rank_for, PcaModel, DEFAULT_VARIANCE_THRESHOLD};
pub use scaler::{fit_scaler, FittedScaler, CONSTANT_COLUMN_EPS};
