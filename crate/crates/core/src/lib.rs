//! Exact hyperplane α-quantile functionals on finitely represented càdlàg paths.
//!
//! The crate is organised bottom-up:
//!
//! * [`paths`]: step and piecewise-linear càdlàg paths, projections, running extrema.
//! * [`quantile`]: the exact occupation-time CDF and its left-continuous inverse.
//! * [`hitting_time`]: first time the projected path reaches its α-quantile.
//! * [`skorokhod`]: computable upper bounds on the J1 metric.
//! * [`brownian_law`]: closed-form and quadrature reference laws for Brownian motion.
//! * [`generators`]: seeded random walks, Brownian grids and compound Poisson paths.
//! * [`stats`]: empirical CDFs and Kolmogorov–Smirnov statistics.
//! * [`experiments`]: Monte Carlo convergence experiments and their reports.

pub mod brownian_law;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod hitting_time;
pub mod linalg;
pub mod paths;
pub mod quadrature;
pub mod quantile;
pub mod rng;
pub mod skorokhod;
pub mod special;
pub mod stats;
#[cfg(test)]
pub(crate) mod testing;

pub use error::{Error, Result};
pub use hitting_time::{hitting_time, hitting_time_continuous, HitCase, HittingTime};
pub use linalg::Matrix;
pub use paths::{CadlagPath, Interpolation, Projection, ScalarPath};
pub use quantile::{
    discontinuity_set, occupation_cdf, quantile, quantile_curve, DiscontinuitySet, OccupationCdf,
    QuantileCurve, QuantileResult,
};
pub use rng::RngConfig;
pub use skorokhod::{j1_distance, J1Distance, SearchParams, TimeChange};

/// Version tag written into every JSON and CSV artifact.
pub const SCHEMA_VERSION: u32 = 1;
