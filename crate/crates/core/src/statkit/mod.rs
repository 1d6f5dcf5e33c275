//! Statistical primitives used by the screening pipeline.
//!
//! Everything here is a pure function over `f64` slices. Tail probabilities
//! come from a local regularized incomplete beta implementation, so the
//! crate has no dependency on an external distributions library.

mod bootstrap;
mod correlation;
mod descriptive;
mod eigen;
mod error;
mod regression;
mod reliability;
pub mod special;
mod ttest;

pub use bootstrap::{
    bootstrap, bootstrap_two_sample, percentile_sorted, replicate_rng, resample, BootstrapConfig, BootstrapResult,
    ReplicateRng, Resampling,
};
pub use correlation::{pearson, point_biserial, CorrelationResult};
pub use descriptive::{mean, sample_stats, variance, SampleStats};
pub use eigen::{symmetric_eigen, SymmetricEigen, MAX_EIGEN_DIM};
pub use error::{Result, StatError};
pub use regression::{delta_r2_f_test, ols, FTest, RegressionResult};
pub use reliability::{cronbach_alpha, spearman_brown};
pub use ttest::{cohens_d, pooled_t_test, t_test, welch_t_test, TTest, VarianceModel};
