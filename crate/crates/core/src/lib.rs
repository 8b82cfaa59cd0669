//! Gaussian Haar-based multifractional processes.
//!
//! The process is the random Haar-wavelet series
//!
//! ```text
//! X(t) = Σ_j Σ_k ( ∫_0^1 (t - s)_+^{H_j(k/2^j) - 1/2} h_{j,k}(s) ds ) ε_{j,k}
//! ```
//!
//! driven by a sequence of Hurst functions `H_j`. This crate evaluates the
//! series coefficients in closed form, synthesizes reproducible paths,
//! computes exact covariances of the truncated series, and estimates the
//! Hurst function back from sampled paths.

pub mod error;
pub mod estimator;
pub mod experiment;
pub mod hurst;
pub mod kernel;
pub mod loess;
pub mod noise;
pub mod quadrature;
pub mod selftest;
pub mod simulator;

pub use error::{Error, Result};
pub use estimator::{estimate_hurst, EstimateSeries, EstimatorConfig, Interval, PathSource};
pub use hurst::{FamilySpec, HurstFamily};
pub use kernel::{kernel, HaarIndex, KernelParam};
pub use simulator::{simulate_path, PathPlan, PathSample, SimConfig};
