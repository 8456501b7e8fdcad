//! Rank-one SVD by power iteration, dense symmetric eigenvalues for the
//! leading part of a spectrum, and Householder reflections.
//!
//! Everything runs on the smaller Gram matrix of the input: `M^T M` when
//! the matrix has no more columns than rows, `M M^T` otherwise. The
//! spectrum code is a classic Householder tridiagonalization followed by
//! implicit-shift QL; no iterative deflation, which keeps it exact (to
//! rounding) at the dense sizes this crate targets.

use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, norm2, normalize_in_place, Matrix};
use rayon::prelude::*;

/// Leading singular triple `sigma * u * v^T`.
#[derive(Debug, Clone)]
pub struct RankOneTriple {
    /// Leading singular value, nonnegative.
    pub sigma: f64,
    /// Left singular vector, unit norm, length = rows.
    pub u: Vec<f64>,
    /// Right singular vector, unit norm, length = cols.
    pub v: Vec<f64>,
}

/// Stopping rule for the power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Relative change of the Rayleigh quotient between sweeps <= tol.
    RayleighChange,
    /// Eigenpair residual `||G y - rho y|| <= tol * rho`. Stricter: bounds
    /// the error of the eigenvector, not only of the eigenvalue.
    Residual,
}

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1000;

/// Power iteration for the dominant eigenpair of a symmetric PSD matrix.
/// `start` must be nonzero; it is normalized internally.
pub fn power_iterate_gram(
    g: &Matrix,
    mut y: Vec<f64>,
    tol: f64,
    max_iter: usize,
    rule: StopRule,
) -> Result<(f64, Vec<f64>)> {
    assert!(tol > 0.0 && max_iter >= 1);
    if normalize_in_place(&mut y) == 0.0 {
        y = vec![1.0; g.rows()];
        normalize_in_place(&mut y);
    }
    let mut rho_prev = f64::INFINITY;
    for _ in 0..max_iter {
        let z = g.matvec(&y);
        let rho = dot(&y, &z);
        let zn = norm2(&z);
        if zn == 0.0 {
            // y is in the kernel; restart from the diagonal-heaviest axis.
            return Err(Error::NoConvergence { max_iter });
        }
        let converged = match rule {
            StopRule::RayleighChange => {
                rho > 0.0 && (rho - rho_prev).abs() <= tol * rho
            }
            StopRule::Residual => {
                let mut r = 0.0;
                for (zi, yi) in z.iter().zip(&y) {
                    let d = zi - rho * yi;
                    r += d * d;
                }
                rho > 0.0 && r.sqrt() <= tol * rho
            }
        };
        if converged {
            // One last normalized step so the returned vector matches rho.
            let mut v = z;
            normalize_in_place(&mut v);
            return Ok((rho, v));
        }
        rho_prev = rho;
        y = z;
        normalize_in_place(&mut y);
    }
    Err(Error::NoConvergence { max_iter })
}

fn gram_start_vector(m: &Matrix, on_columns: bool) -> Vec<f64> {
    if on_columns {
        // Iterating on M^T M: start from the column sums.
        (0..m.cols()).map(|j| m.column(j).iter().sum()).collect()
    } else {
        // Iterating on M M^T: start from the row sums.
        let mut s = vec![0.0; m.rows()];
        for j in 0..m.cols() {
            axpy(1.0, m.column(j), &mut s);
        }
        s
    }
}

/// Leading singular triple of `m` by power iteration on the smaller Gram
/// operator. The start vector is the (deterministic) row- or column-sum
/// vector, which for nonnegative data is never orthogonal to the leading
/// singular vector.
pub fn rank_one_svd(m: &Matrix, tol: f64, max_iter: usize) -> Result<RankOneTriple> {
    rank_one_svd_with(m, tol, max_iter, StopRule::RayleighChange)
}

pub fn rank_one_svd_with(
    m: &Matrix,
    tol: f64,
    max_iter: usize,
    rule: StopRule,
) -> Result<RankOneTriple> {
    if m.frobenius_norm_sq() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let on_columns = m.cols() <= m.rows();
    let gram = if on_columns { m.gram_cols() } else { m.gram_rows() };
    let start = gram_start_vector(m, on_columns);
    let (_, y) = power_iterate_gram(&gram, start, tol, max_iter, rule)?;
    if on_columns {
        let v = y;
        let mut u = m.matvec(&v);
        let sigma = normalize_in_place(&mut u);
        if sigma == 0.0 {
            return Err(Error::NoConvergence { max_iter });
        }
        Ok(RankOneTriple { sigma, u, v })
    } else {
        let u = y;
        let mut v = m.tr_matvec(&u);
        let sigma = normalize_in_place(&mut v);
        if sigma == 0.0 {
            return Err(Error::NoConvergence { max_iter });
        }
        Ok(RankOneTriple { sigma, u, v })
    }
}

/// Best rank-one nonnegative factorization of a nonnegative matrix:
/// `w = sigma * |u|`, `h = |v|`. For nonnegative input, taking entrywise
/// absolute values of the leading singular pair is optimal.
pub fn rank_one_nmf(m: &Matrix, tol: f64, max_iter: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = rank_one_svd(m, tol, max_iter)?;
    let w = t.u.iter().map(|x| t.sigma * x.abs()).collect();
    let h = t.v.iter().map(|x| x.abs()).collect();
    Ok((w, h))
}

/// Top `k` singular values, nonincreasing, from the dense eigendecomposition
/// of the smaller Gram matrix.
pub fn top_singular_values(m: &Matrix, k: usize) -> Result<Vec<f64>> {
    let p = m.rows().min(m.cols());
    if k == 0 {
        return Err(Error::RangeInvalid("k must be at least 1".into()));
    }
    if k > p {
        return Err(Error::KTooLarge { k, max: p });
    }
    let gram = if m.cols() <= m.rows() { m.gram_cols() } else { m.gram_rows() };
    let vals = sym_eigenvalues_desc(&gram)?;
    Ok(vals.iter().take(k).map(|&l| l.max(0.0).sqrt()).collect())
}

/// Top `k` singular triples (value, left vector, right vector), used by
/// SVD-based initialization. Vectors for zero singular values are zero.
pub fn top_singular_triples(m: &Matrix, k: usize) -> Result<Vec<(f64, Vec<f64>, Vec<f64>)>> {
    let p = m.rows().min(m.cols());
    if k == 0 {
        return Err(Error::RangeInvalid("k must be at least 1".into()));
    }
    if k > p {
        return Err(Error::KTooLarge { k, max: p });
    }
    let on_columns = m.cols() <= m.rows();
    let gram = if on_columns { m.gram_cols() } else { m.gram_rows() };
    let (vals, vecs) = sym_eigen_desc(&gram)?;
    let mut out = Vec::with_capacity(k);
    for p_idx in 0..k {
        let sigma = vals[p_idx].max(0.0).sqrt();
        let y: Vec<f64> = (0..gram.rows()).map(|i| vecs.get(i, p_idx)).collect();
        if sigma <= f64::EPSILON * vals[0].max(0.0).sqrt() {
            out.push((0.0, vec![0.0; m.rows()], vec![0.0; m.cols()]));
            continue;
        }
        if on_columns {
            let v = y;
            let mut u = m.matvec(&v);
            let s = normalize_in_place(&mut u);
            out.push((s, u, v));
        } else {
            let u = y;
            let mut v = m.tr_matvec(&u);
            let s = normalize_in_place(&mut v);
            out.push((s, u, v));
        }
    }
    Ok(out)
}

/// The reflection `P = I - 2 z z^T` with `z = (e_f - u) / ||e_f - u||`,
/// which maps the coordinate axis `e_f` onto the unit vector `u`. When
/// `u = e_f` exactly there is nothing to reflect and P is the identity.
pub fn householder_to(u: &[f64], f: usize) -> Matrix {
    let n = u.len();
    assert!(f < n, "axis index out of range");
    match householder_vector(u, f) {
        None => Matrix::identity(n),
        Some(z) => {
            let mut p = Matrix::identity(n);
            for j in 0..n {
                let col = p.column_mut(j);
                let s = -2.0 * z[j];
                axpy(s, &z, col);
            }
            p
        }
    }
}

/// The unit reflection vector `z` for [`householder_to`], or `None` when
/// `u == e_f` exactly (identity case). Lets hot paths apply the reflection
/// as `x - 2 z (z^T x)` without forming the matrix.
pub fn householder_vector(u: &[f64], f: usize) -> Option<Vec<f64>> {
    let mut z: Vec<f64> = u.iter().map(|x| -x).collect();
    z[f] += 1.0;
    if norm2(&z) == 0.0 {
        return None;
    }
    normalize_in_place(&mut z);
    Some(z)
}

/// Applies `x -> x - 2 z (z^T x)` in place.
#[inline]
pub fn reflect_in_place(z: &[f64], x: &mut [f64]) {
    let s = -2.0 * dot(z, x);
    axpy(s, z, x);
}

/// All eigenvalues of a symmetric matrix, sorted nonincreasing.
pub fn sym_eigenvalues_desc(g: &Matrix) -> Result<Vec<f64>> {
    let n = g.rows();
    if n != g.cols() {
        return Err(Error::ShapeMismatch(format!("{}x{} is not square", n, g.cols())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut work = g.clone();
    let (mut d, e) = tridiagonalize(&mut work, None);
    tql(&mut d, &e, None)?;
    d.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(d)
}

/// Full symmetric eigendecomposition; eigenvalues nonincreasing, matching
/// eigenvectors in the columns of the returned matrix.
pub fn sym_eigen_desc(g: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = g.rows();
    if n != g.cols() {
        return Err(Error::ShapeMismatch(format!("{}x{} is not square", n, g.cols())));
    }
    let mut work = g.clone();
    let mut q = Matrix::identity(n);
    let (mut d, e) = tridiagonalize(&mut work, Some(&mut q));
    tql(&mut d, &e, Some(&mut q))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vecs = q.select_columns(&order);
    Ok((vals, vecs))
}

/// Size above which the tridiagonalization kernels go parallel.
const TRIDIAG_PAR: usize = 384;

/// Householder reduction of a symmetric matrix to tridiagonal form.
/// Returns the diagonal and subdiagonal; optionally accumulates the
/// orthogonal transform into `q`.
fn tridiagonalize(a: &mut Matrix, mut q: Option<&mut Matrix>) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    if n == 0 {
        return (d, e);
    }
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1; // trailing block size
        // Householder vector annihilating A[k+2.., k].
        let xnorm = norm2(&a.column(k)[k + 1..]);
        if xnorm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let x0 = a.get(k + 1, k);
        let alpha = if x0 >= 0.0 { -xnorm } else { xnorm };
        {
            let col = a.column(k);
            v[..m].copy_from_slice(&col[k + 1..]);
        }
        v[0] -= alpha;
        normalize_in_place(&mut v[..m]);
        e[k] = alpha;

        // p = 2 * B * v on the trailing block B = A[k+1.., k+1..].
        // B is stored full and symmetric, so its rows are its columns.
        let vv = &v[..m];
        if m >= TRIDIAG_PAR {
            p[..m]
                .par_iter_mut()
                .enumerate()
                .for_each(|(i, pi)| *pi = 2.0 * dot(&a.column(k + 1 + i)[k + 1..], vv));
        } else {
            for i in 0..m {
                p[i] = 2.0 * dot(&a.column(k + 1 + i)[k + 1..], vv);
            }
        }
        let kappa = dot(&p[..m], vv);
        for (w, &x) in p[..m].iter_mut().zip(vv) {
            *w -= kappa * x;
        }
        // Rank-2 symmetric update B -= v w^T + w v^T, column by column.
        let w = &p[..m];
        let rows = a.rows();
        let cols_block = &mut a.data_mut()[(k + 1) * rows..];
        let update_col = |(j, col): (usize, &mut [f64])| {
            let tail = &mut col[k + 1..];
            axpy(-w[j], vv, tail);
            axpy(-vv[j], w, tail);
        };
        if m >= TRIDIAG_PAR {
            cols_block
                .par_chunks_mut(rows)
                .take(m)
                .enumerate()
                .for_each(update_col);
        } else {
            cols_block
                .chunks_mut(rows)
                .take(m)
                .enumerate()
                .for_each(update_col);
        }
        // Accumulate Q <- Q * (I - 2 v v^T) acting on the trailing columns.
        if let Some(qm) = q.as_deref_mut() {
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..m {
                    s += qm.get(i, k + 1 + j) * vv[j];
                }
                s *= 2.0;
                for j in 0..m {
                    let val = qm.get(i, k + 1 + j) - s * vv[j];
                    qm.set(i, k + 1 + j, val);
                }
            }
        }
    }
    for i in 0..n {
        d[i] = a.get(i, i);
    }
    (d, e)
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix.
/// Eigenvalues land in `d` (unordered); if `q` is given, its columns are
/// rotated into the corresponding eigenvectors.
fn tql(d: &mut [f64], e: &[f64], mut q: Option<&mut Matrix>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let mut e = {
        let mut buf = vec![0.0; n];
        buf[..n - 1].copy_from_slice(e);
        buf
    };
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::NoConvergence { max_iter: 50 });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let denom = g + if g >= 0.0 { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / denom;
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(qm) = q.as_deref_mut() {
                    // Rotate eigenvector columns i and i+1.
                    let rows = qm.rows();
                    for row in 0..rows {
                        f = qm.get(row, i + 1);
                        let y = qm.get(row, i);
                        qm.set(row, i + 1, s * y + c * f);
                        qm.set(row, i, c * y - s * f);
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
