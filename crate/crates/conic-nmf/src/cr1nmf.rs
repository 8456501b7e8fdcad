//! Clustered rank-one factorization.
//!
//! `factorize` groups the columns with [`crate::cluster::greedy_cluster`]
//! and fits the best rank-one nonnegative approximation inside each
//! cluster: column `k` of W is the cluster's leading left singular vector
//! (entrywise absolute value, unit norm), and row `k` of H carries
//! `sigma * |v|` scattered over the cluster's column indices. Every column
//! of H therefore has at most one nonzero entry, and
//! `||V - WH||_F^2 = sum_k (||V_k||_F^2 - sigma_1(V_k)^2)`.
//!
//! When the generating cones satisfy the separation condition, the relative
//! error is at most `max_k sin(alpha_k)`; under the sampling model it
//! concentrates at `sqrt(sum_k f(alpha_k)/lambda_k / sum_k 1/lambda_k)`
//! with `f(a) = 1/2 - sin(2a)/(4a)`, the mean squared sine of a uniform
//! angle in `[0, a]`.

use crate::cluster::{greedy_cluster, Partition};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::svd::{rank_one_svd_with, StopRule, DEFAULT_MAX_ITER, DEFAULT_TOL};
use rayon::prelude::*;

/// Nonnegative factors and the relative error they achieve.
#[derive(Debug, Clone)]
pub struct FactorPair {
    /// F x K, entrywise nonnegative.
    pub w: Matrix,
    /// K x N, entrywise nonnegative.
    pub h: Matrix,
    /// `||V - WH||_F / ||V||_F`.
    pub relative_error: f64,
}

/// Clustered rank-one factorization with default power-iteration settings.
pub fn factorize(v: &Matrix, k: usize) -> Result<(FactorPair, Partition)> {
    factorize_with(v, k, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Clustered rank-one factorization. Each cluster's singular pair is
/// iterated to an eigenpair-residual tolerance, which makes the factors a
/// fixed point of multiplicative updates to well below 1e-8.
pub fn factorize_with(
    v: &Matrix,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(FactorPair, Partition)> {
    let partition = greedy_cluster(v, k)?;
    let f = v.rows();
    let n = v.cols();

    struct ClusterFit {
        w: Vec<f64>,
        h: Vec<f64>,
        norm_sq: f64,
        sigma_sq: f64,
    }

    let fit_cluster = |idx: &Vec<usize>| -> Result<Option<ClusterFit>> {
        if idx.is_empty() {
            return Ok(None);
        }
        let block = v.select_columns(idx);
        let t = rank_one_svd_with(&block, tol, max_iter, StopRule::Residual)?;
        let w = t.u.iter().map(|x| x.abs()).collect();
        let h = t.v.iter().map(|x| t.sigma * x.abs()).collect();
        Ok(Some(ClusterFit {
            w,
            h,
            norm_sq: block.frobenius_norm_sq(),
            sigma_sq: t.sigma * t.sigma,
        }))
    };

    let fits: Vec<Option<ClusterFit>> = if f * n >= 1 << 16 {
        partition
            .sets()
            .par_iter()
            .map(fit_cluster)
            .collect::<Result<Vec<_>>>()?
    } else {
        partition
            .sets()
            .iter()
            .map(fit_cluster)
            .collect::<Result<Vec<_>>>()?
    };

    let mut w = Matrix::zeros(f, k);
    let mut h = Matrix::zeros(k, n);
    let mut err_sq = 0.0;
    let mut total_sq = 0.0;
    for (c, fit) in fits.into_iter().enumerate() {
        // Empty clusters keep their zero column/row so K stays fixed.
        let Some(fit) = fit else { continue };
        w.column_mut(c).copy_from_slice(&fit.w);
        for (&j, &hv) in partition.set(c).iter().zip(&fit.h) {
            h.set(c, j, hv);
        }
        err_sq += (fit.norm_sq - fit.sigma_sq).max(0.0);
        total_sq += fit.norm_sq;
    }
    // The cheap identity ||V - WH||^2 = sum(||V_k||^2 - sigma_k^2) cancels
    // catastrophically near exact fits; fall back to the direct residual
    // there.
    if err_sq <= 1e-14 * total_sq {
        err_sq = crate::matrix::residual_fro_sq(v, &w, &h)?;
    }
    let relative_error = if total_sq > 0.0 { (err_sq / total_sq).sqrt() } else { 0.0 };
    Ok((FactorPair { w, h, relative_error }, partition))
}

/// `f(a) = 1/2 - sin(2a)/(4a)`: the mean of `sin^2(B)` for `B` uniform on
/// `[0, a]`, extended continuously by `f(0) = 0`.
pub fn f_alpha(alpha: f64) -> f64 {
    assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&alpha));
    if alpha < 1e-2 {
        // Series around 0; the closed form loses all precision there.
        let a2 = alpha * alpha;
        return a2 / 3.0 - a2 * a2 / 15.0 + 2.0 * a2 * a2 * a2 / 315.0;
    }
    0.5 - (2.0 * alpha).sin() / (4.0 * alpha)
}

/// `g(a) = 1 - f(a)`: the matching mean of `cos^2(B)`.
pub fn g_alpha(alpha: f64) -> f64 {
    1.0 - f_alpha(alpha)
}

/// Worst-case relative error of the clustered rank-one factorization when
/// the data lies in cones with the given size angles: `max_k sin(alpha_k)`.
pub fn deterministic_bound(alphas: &[f64]) -> f64 {
    alphas.iter().map(|a| a.sin()).fold(0.0, f64::max)
}

/// Concentration value of the relative error under the sampling model:
/// `sqrt(sum_k f(alpha_k)/lambda_k / sum_k 1/lambda_k)`.
pub fn probabilistic_bound(alphas: &[f64], lambdas: &[f64]) -> f64 {
    assert_eq!(alphas.len(), lambdas.len(), "one rate per size angle");
    assert!(lambdas.iter().all(|&l| l > 0.0), "rates must be positive");
    let num: f64 = alphas.iter().zip(lambdas).map(|(&a, &l)| f_alpha(a) / l).sum();
    let den: f64 = lambdas.iter().map(|&l| 1.0 / l).sum();
    (num / den).sqrt()
}
