//! Nonnegative matrix factorization for data whose columns live in a few
//! well-separated circular cones.
//!
//! The core algorithm clusters the columns exactly (greedy maximin centroid
//! selection on the normalized data), then fits the best rank-one
//! nonnegative factorization inside each cluster; the two steps compose
//! into a full factorization with closed-form relative-error bounds. Around
//! it the crate provides:
//!
//! - [`matrix`]: dense column-major matrices and the product/Gram kernels;
//! - [`svd`]: power-iteration rank-one SVD, dense symmetric spectra,
//!   Householder reflections;
//! - [`cones`]: circular-cone geometry, the pairwise separation check,
//!   orthant containment, and the optimal enclosing cone;
//! - [`synth`]: a seeded generator for labeled cone datasets and the
//!   additive-noise model used in robustness experiments;
//! - [`cluster`]: the greedy clustering pass;
//! - [`cr1nmf`]: the clustered rank-one factorization and its error bounds;
//! - [`rank`]: cone-count estimation from adjacent singular-value ratios;
//! - [`baselines`]: multiplicative-update and HALS solvers plus the
//!   standard initializers, for comparison and for seeding;
//! - [`metrics`]: relative error and clustering-agreement scores;
//! - [`io`]: dense CSV, MatrixMarket, label, and key-value config formats.

pub mod baselines;
pub mod cluster;
pub mod cones;
pub mod cr1nmf;
pub mod error;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod rank;
pub mod svd;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::Matrix;
