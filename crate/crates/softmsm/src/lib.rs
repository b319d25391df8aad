//! Elastic time series distances with a differentiable Move-Split-Merge
//! relaxation.
//!
//! The crate provides:
//!
//! - hard DTW and MSM distances with alignment-path backtracking
//!   ([`elastic`]);
//! - the smooth MSM relaxation (forward recursion, soft alignment matrix,
//!   closed-form gradient, divergence) and a Soft-DTW baseline ([`soft`]);
//! - barycentre averaging under both geometries: alignment-based refinement,
//!   stochastic subgradient descent and gradient-based optimisation
//!   ([`averaging`]);
//! - k-means clustering with elastic centroids and nearest-centroid
//!   classification with evaluation metrics ([`learning`]);
//! - UCR-style dataset loading, synthetic data generation and CSV result
//!   persistence ([`data`]);
//! - brute-force oracles for testing ([`verify`]) and a self-test harness
//!   ([`selftest`]).
//!
//! Batch operations run data-parallel when the default `parallel` feature is
//! enabled and fall back to sequential loops without it; results are
//! identical either way.

pub mod averaging;
pub mod data;
pub mod elastic;
pub mod error;
mod lbfgs;
pub mod learning;
pub mod parallel;
pub mod selftest;
pub mod series;
pub mod soft;
pub mod verify;

pub use elastic::Geometry;
pub use error::{Error, Result};
pub use series::{AlignmentPath, SoftParams, TimeSeries, TimeSeriesSet};
pub use soft::{AlignmentMatrix, CostMatrix};
