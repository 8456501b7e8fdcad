//! Classical NMF solvers and initializers used for comparison and seeding:
//! multiplicative updates, HALS, and the rand / spkm / nndsvd / cr1
//! initializer family (selected by those string identifiers).

use crate::cluster::greedy_cluster_from;
use crate::cr1nmf::factorize;
use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, norm2, normalize_in_place, residual_fro_sq, Matrix};
use crate::svd::top_singular_triples;
use rand::{Rng, RngExt};
use std::str::FromStr;
use std::time::Instant;

/// Divide guard for the multiplicative updates. `Epsilon` adds a constant
/// to every denominator; `Mask` leaves entries with a zero denominator
/// untouched, which keeps genuine fixed points exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroGuard {
    Epsilon(f64),
    Mask,
}

pub const MULT_EPSILON: f64 = 1e-16;

/// Per-run diagnostics: relative error at initialization and after every
/// sweep, plus wall-clock seconds per sweep.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub errors: Vec<f64>,
    pub iter_seconds: Vec<f64>,
    pub iterations: usize,
}

/// Iterative solver identifiers accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Cr1,
    Mult,
    Hals,
}

impl FromStr for Solver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cr1" => Ok(Self::Cr1),
            "mult" => Ok(Self::Mult),
            "hals" => Ok(Self::Hals),
            other => Err(Error::InvalidConfig(format!("unknown solver '{other}'"))),
        }
    }
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Cr1 => "cr1",
            Self::Mult => "mult",
            Self::Hals => "hals",
        })
    }
}

/// Initializer identifiers accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Rand,
    Spkm,
    Nndsvd,
    Cr1,
}

impl FromStr for Init {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rand" => Ok(Self::Rand),
            "spkm" => Ok(Self::Spkm),
            "nndsvd" => Ok(Self::Nndsvd),
            "cr1" => Ok(Self::Cr1),
            other => Err(Error::InvalidConfig(format!("unknown initializer '{other}'"))),
        }
    }
}

impl std::fmt::Display for Init {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Rand => "rand",
            Self::Spkm => "spkm",
            Self::Nndsvd => "nndsvd",
            Self::Cr1 => "cr1",
        })
    }
}

fn check_factor_shapes(v: &Matrix, w: &Matrix, h: &Matrix) -> Result<()> {
    if w.rows() != v.rows() || h.cols() != v.cols() || w.cols() != h.rows() {
        return Err(Error::ShapeMismatch(format!(
            "V {}x{} with W {}x{}, H {}x{}",
            v.rows(),
            v.cols(),
            w.rows(),
            w.cols(),
            h.rows(),
            h.cols()
        )));
    }
    if !w.is_nonnegative() || !h.is_nonnegative() {
        return Err(Error::InvalidConfig("initial factors must be nonnegative".into()));
    }
    Ok(())
}

fn multiplicative_scale(base: &mut Matrix, numer: &Matrix, denom: &Matrix, guard: ZeroGuard) {
    match guard {
        ZeroGuard::Epsilon(eps) => {
            for ((b, &n), &d) in base
                .data_mut()
                .iter_mut()
                .zip(numer.data())
                .zip(denom.data())
            {
                *b *= n / (d + eps);
            }
        }
        ZeroGuard::Mask => {
            for ((b, &n), &d) in base
                .data_mut()
                .iter_mut()
                .zip(numer.data())
                .zip(denom.data())
            {
                if d > 0.0 {
                    *b *= n / d;
                }
            }
        }
    }
}

/// One multiplicative-update sweep (H first, then W against the updated H).
pub fn mult_sweep(v: &Matrix, w: &Matrix, h: &Matrix, guard: ZeroGuard) -> Result<(Matrix, Matrix)> {
    check_factor_shapes(v, w, h)?;
    // H <- H .* (W^T V) ./ (W^T W H)
    let wt_v = w.at_mul_b(v)?;
    let wt_w = w.gram_cols();
    let wt_w_h = wt_w.mul(h)?;
    let mut h2 = h.clone();
    multiplicative_scale(&mut h2, &wt_v, &wt_w_h, guard);
    // W <- W .* (V H^T) ./ (W H H^T)
    let v_ht = v.mul_bt(&h2)?;
    let h_ht = h2.gram_rows();
    let w_hht = w.mul(&h_ht)?;
    let mut w2 = w.clone();
    multiplicative_scale(&mut w2, &v_ht, &w_hht, guard);
    Ok((w2, h2))
}

/// Multiplicative updates with the epsilon divide guard. The trace records
/// the relative error at initialization and after each sweep; the error
/// sequence is nonincreasing.
pub fn mult_run(
    v: &Matrix,
    w0: &Matrix,
    h0: &Matrix,
    iters: usize,
) -> Result<(crate::cr1nmf::FactorPair, SolverTrace)> {
    run_iterative(v, w0, h0, iters, |v, w, h| {
        mult_sweep(v, w, h, ZeroGuard::Epsilon(MULT_EPSILON))
    })
}

/// Hierarchical alternating least squares: cycles closed-form nonnegative
/// updates over the rows of H and the columns of W. Zero denominators
/// (a vanished component) zero out that component.
pub fn hals_run(
    v: &Matrix,
    w0: &Matrix,
    h0: &Matrix,
    iters: usize,
) -> Result<(crate::cr1nmf::FactorPair, SolverTrace)> {
    run_iterative(v, w0, h0, iters, hals_sweep)
}

/// One HALS sweep (all H rows, then all W columns).
pub fn hals_sweep(v: &Matrix, w: &Matrix, h: &Matrix) -> Result<(Matrix, Matrix)> {
    check_factor_shapes(v, w, h)?;
    let k = w.cols();
    let n = v.cols();
    let f = v.rows();
    let tiny = 1e-16;

    // Row updates of H with fresh W: Gauss-Seidel over components.
    let wt_v = w.at_mul_b(v)?;
    let wt_w = w.gram_cols();
    let mut h2 = h.clone();
    for c in 0..k {
        let d = wt_w.get(c, c);
        if d <= tiny {
            for j in 0..n {
                h2.set(c, j, 0.0);
            }
            continue;
        }
        for j in 0..n {
            let col = h2.column(j);
            let mut s = wt_v.get(c, j) + d * col[c];
            for l in 0..k {
                s -= wt_w.get(c, l) * col[l];
            }
            h2.set(c, j, (s / d).max(0.0));
        }
    }

    // Column updates of W with the new H.
    let v_ht = v.mul_bt(&h2)?;
    let h_ht = h2.gram_rows();
    let mut w2 = w.clone();
    let mut acc = vec![0.0; f];
    for c in 0..k {
        let d = h_ht.get(c, c);
        if d <= tiny {
            for x in w2.column_mut(c) {
                *x = 0.0;
            }
            continue;
        }
        acc.copy_from_slice(v_ht.column(c));
        for l in 0..k {
            let coeff = h_ht.get(l, c);
            if l != c && coeff != 0.0 {
                axpy(-coeff, w2.column(l), &mut acc);
            }
        }
        for (x, &a) in w2.column_mut(c).iter_mut().zip(&acc) {
            *x = (a / d).max(0.0);
        }
    }
    Ok((w2, h2))
}

fn run_iterative(
    v: &Matrix,
    w0: &Matrix,
    h0: &Matrix,
    iters: usize,
    sweep: impl Fn(&Matrix, &Matrix, &Matrix) -> Result<(Matrix, Matrix)>,
) -> Result<(crate::cr1nmf::FactorPair, SolverTrace)> {
    check_factor_shapes(v, w0, h0)?;
    let norm = v.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let mut w = w0.clone();
    let mut h = h0.clone();
    let mut errors = Vec::with_capacity(iters + 1);
    let mut iter_seconds = Vec::with_capacity(iters);
    errors.push(residual_fro_sq(v, &w, &h)?.max(0.0).sqrt() / norm);
    for _ in 0..iters {
        let t0 = Instant::now();
        let (w2, h2) = sweep(v, &w, &h)?;
        w = w2;
        h = h2;
        iter_seconds.push(t0.elapsed().as_secs_f64());
        errors.push(residual_fro_sq(v, &w, &h)?.max(0.0).sqrt() / norm);
    }
    let relative_error = *errors.last().unwrap();
    Ok((
        crate::cr1nmf::FactorPair { w, h, relative_error },
        SolverTrace { errors, iter_seconds, iterations: iters },
    ))
}

/// Uniform(0,1) factors of the given shapes.
pub fn random_init<R: Rng>(f: usize, n: usize, k: usize, rng: &mut R) -> (Matrix, Matrix) {
    let w = Matrix::new(f, k, (0..f * k).map(|_| rng.random::<f64>()).collect()).unwrap();
    let h = Matrix::new(k, n, (0..k * n).map(|_| rng.random::<f64>()).collect()).unwrap();
    (w, h)
}

/// Spherical k-means on the normalized columns: centroids start at `k`
/// distinct random columns, then alternate cosine assignment and normalized
/// mean updates for `iters` sweeps. Returns the centroid matrix (the usual
/// left-factor initialization) and the final assignment.
pub fn spkm_init<R: Rng>(
    v: &Matrix,
    k: usize,
    iters: usize,
    rng: &mut R,
) -> Result<(Matrix, Vec<usize>)> {
    let n = v.cols();
    if k == 0 {
        return Err(Error::InvalidConfig("cluster count must be at least 1".into()));
    }
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    let (unit, _) = v.normalize_columns()?;
    // k distinct start columns by partial Fisher-Yates.
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.random_range(0..(n - i));
        pool.swap(i, j);
    }
    let mut centroids = unit.select_columns(&pool[..k]);
    let mut assign = vec![0usize; n];
    for _ in 0..iters {
        // Assignment by maximum cosine similarity, lowest index on ties.
        for j in 0..n {
            let col = unit.column(j);
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for c in 0..k {
                let s = dot(centroids.column(c), col);
                if s > best {
                    best = s;
                    arg = c;
                }
            }
            assign[j] = arg;
        }
        // Normalized means; empty clusters keep their centroid.
        let mut sums = Matrix::zeros(v.rows(), k);
        let mut counts = vec![0usize; k];
        for (j, &c) in assign.iter().enumerate() {
            axpy(1.0, unit.column(j), sums.column_mut(c));
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 && normalize_in_place(sums.column_mut(c)) > 0.0 {
                centroids.column_mut(c).copy_from_slice(sums.column(c));
            }
        }
    }
    Ok((centroids, assign))
}

/// SVD-based deterministic initialization: the leading pair seeds the first
/// component directly, and each later singular pair contributes whichever
/// of its positive or negative parts carries more mass. Zeros stay zeros.
pub fn nndsvd_init(v: &Matrix, k: usize) -> Result<(Matrix, Matrix)> {
    let p = v.rows().min(v.cols());
    if k > p {
        return Err(Error::KTooLarge { k, max: p });
    }
    let triples = top_singular_triples(v, k)?;
    let mut w = Matrix::zeros(v.rows(), k);
    let mut h = Matrix::zeros(k, v.cols());
    for (c, (sigma, u, vv)) in triples.into_iter().enumerate() {
        if sigma <= 0.0 {
            continue;
        }
        if c == 0 {
            // Leading pair is nonnegative for nonnegative data.
            let s = sigma.sqrt();
            for (dst, x) in w.column_mut(0).iter_mut().zip(&u) {
                *dst = s * x.abs();
            }
            for (j, x) in vv.iter().enumerate() {
                h.set(0, j, s * x.abs());
            }
            continue;
        }
        let up: Vec<f64> = u.iter().map(|&x| x.max(0.0)).collect();
        let un: Vec<f64> = u.iter().map(|&x| (-x).max(0.0)).collect();
        let vp: Vec<f64> = vv.iter().map(|&x| x.max(0.0)).collect();
        let vn: Vec<f64> = vv.iter().map(|&x| (-x).max(0.0)).collect();
        let (up_n, vp_n) = (norm2(&up), norm2(&vp));
        let (un_n, vn_n) = (norm2(&un), norm2(&vn));
        let m_plus = up_n * vp_n;
        let m_minus = un_n * vn_n;
        let (uu, nu, vvv, nv, m) = if m_plus >= m_minus {
            (up, up_n, vp, vp_n, m_plus)
        } else {
            (un, un_n, vn, vn_n, m_minus)
        };
        if m <= 0.0 {
            continue;
        }
        let s = (sigma * m).sqrt();
        for (dst, x) in w.column_mut(c).iter_mut().zip(&uu) {
            *dst = s * x / nu;
        }
        for (j, x) in vvv.iter().enumerate() {
            h.set(c, j, s * x / nv);
        }
    }
    Ok((w, h))
}

/// Default right-factor perturbation for [`cr1nmf_init`].
pub const CR1_INIT_ETA: f64 = 0.01;

/// Clustered rank-one factorization as an initializer. The exact factor
/// pair is a fixed point of multiplicative updates, so the right factor is
/// perturbed: `H0 = H* + eta * mean(H*) * U` with `U` uniform in (0,1),
/// which lets iterative solvers move.
pub fn cr1nmf_init<R: Rng>(
    v: &Matrix,
    k: usize,
    eta: f64,
    rng: &mut R,
) -> Result<(Matrix, Matrix)> {
    let (fp, _) = factorize(v, k)?;
    let mut h = fp.h;
    if eta > 0.0 {
        let mean = h.data().iter().sum::<f64>() / h.data().len() as f64;
        for x in h.data_mut() {
            *x += eta * mean * rng.random::<f64>();
        }
    }
    Ok((fp.w, h))
}

/// Greedy-clustering initializer variant that keeps the centroid columns as
/// W and memberships as a binary H; used by robustness experiments.
pub fn centroid_init(v: &Matrix, k: usize, first: usize) -> Result<(Matrix, Matrix)> {
    let p = greedy_cluster_from(v, k, first)?;
    let w = p.centroids().clone();
    let mut h = Matrix::zeros(k, v.cols());
    for (j, &c) in p.assignments().iter().enumerate() {
        h.set(c, j, 1.0);
    }
    Ok((w, h))
}
