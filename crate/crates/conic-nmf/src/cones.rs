//! Circular-cone geometry.
//!
//! A circular cone `C(u, alpha)` is the set of nonzero vectors within angle
//! `alpha` of a nonnegative unit basis vector `u`. A family of such cones
//! supports exact greedy clustering whenever every pairwise basis angle
//! exceeds `3*a1 + a2`, where `a1 >= a2` are the two largest size angles;
//! [`ConeSet::check_geometric_assumption`] evaluates that margin.
//!
//! [`optimal_enclosing_cone`] recovers the tightest cone around a set of
//! columns by solving `min 1/2 ||u||^2  s.t.  x_m^T u >= 1, u >= 0` over the
//! normalized columns; the minimizer `u_hat` yields the basis `u_hat/||u_hat||`
//! and size angle `arccos(1/||u_hat||)`.

use crate::error::{Error, Result};
use crate::matrix::{dot, norm2, normalize_in_place, Matrix};

const UNIT_TOL: f64 = 1e-12;

/// A circular cone: nonnegative unit basis vector plus size angle in
/// (0, pi/2), radians.
#[derive(Debug, Clone)]
pub struct CircularCone {
    basis: Vec<f64>,
    angle: f64,
}

impl CircularCone {
    pub fn new(basis: Vec<f64>, angle: f64) -> Result<Self> {
        if !(angle > 0.0 && angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidConfig(format!(
                "size angle {angle} outside (0, pi/2)"
            )));
        }
        if let Some(i) = basis.iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidConfig(format!("basis entry {i} is negative")));
        }
        let n = norm2(&basis);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidConfig(format!(
                "basis norm {n} is not 1 within {UNIT_TOL:.0e}"
            )));
        }
        Ok(Self { basis, angle })
    }

    #[inline]
    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    #[inline]
    pub fn angle(&self) -> f64 {
        self.angle
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Membership test: `x^T u / ||x|| >= cos(alpha)`. Scale-invariant;
    /// undefined (an error) for the zero vector.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        let nx = norm2(x);
        if nx == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(dot(x, &self.basis) / nx >= self.angle.cos())
    }

    /// Whether every vector of the cone is entrywise nonnegative. Requires a
    /// strictly positive basis; the criterion is
    /// `alpha <= arccos(sqrt(1 - u_min^2))`.
    pub fn contained_in_orthant(&self) -> Result<bool> {
        if let Some(i) = self.basis.iter().position(|&v| v <= 0.0) {
            return Err(Error::NonPositiveBasis(i));
        }
        let u_min = self.basis.iter().cloned().fold(f64::INFINITY, f64::min);
        let limit = (1.0 - u_min * u_min).max(0.0).sqrt().acos();
        Ok(self.angle <= limit)
    }
}

/// A family of cones over one ambient space, with the pairwise basis angles
/// `beta(i, j) = arccos(u_i^T u_j)` precomputed.
#[derive(Debug, Clone)]
pub struct ConeSet {
    cones: Vec<CircularCone>,
    beta: Vec<f64>,
}

impl ConeSet {
    pub fn new(cones: Vec<CircularCone>) -> Result<Self> {
        if cones.is_empty() {
            return Err(Error::InvalidConfig("empty cone set".into()));
        }
        let dim = cones[0].dim();
        if cones.iter().any(|c| c.dim() != dim) {
            return Err(Error::ShapeMismatch(
                "cones live in different ambient dimensions".into(),
            ));
        }
        let k = cones.len();
        let mut beta = vec![0.0; k * k];
        for i in 0..k {
            for j in i + 1..k {
                let c = dot(cones[i].basis(), cones[j].basis()).clamp(-1.0, 1.0);
                let b = c.acos();
                beta[i * k + j] = b;
                beta[j * k + i] = b;
            }
        }
        Ok(Self { cones, beta })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.cones.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.cones[0].dim()
    }

    #[inline]
    pub fn cones(&self) -> &[CircularCone] {
        &self.cones
    }

    #[inline]
    pub fn cone(&self, k: usize) -> &CircularCone {
        &self.cones[k]
    }

    /// Basis angle between cones `i` and `j`, radians.
    #[inline]
    pub fn beta(&self, i: usize, j: usize) -> f64 {
        self.beta[i * self.k() + j]
    }

    /// Checks the pairwise separation condition that makes greedy clustering
    /// exact. Returns `(holds, margin)` where
    /// `margin = min_{i != j} beta_ij - (3*a1 + a2)` with `a1 >= a2` the two
    /// largest size angles; the condition holds iff the margin is strictly
    /// positive.
    pub fn check_geometric_assumption(&self) -> Result<(bool, f64)> {
        let k = self.k();
        if k < 2 {
            return Err(Error::SingleCone);
        }
        let mut min_beta = f64::INFINITY;
        for i in 0..k {
            for j in i + 1..k {
                min_beta = min_beta.min(self.beta(i, j));
            }
        }
        let mut angles: Vec<f64> = self.cones.iter().map(|c| c.angle()).collect();
        angles.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let margin = min_beta - (3.0 * angles[0] + angles[1]);
        Ok((margin > 0.0, margin))
    }
}

const OUTER_MAX: usize = 500;
const INNER_MAX: usize = 50_000;
const VIOLATION_TOL: f64 = 1e-9;
const OBJECTIVE_TOL: f64 = 1e-10;
const STATIONARITY_TOL: f64 = 1e-9;
const RHO_MAX: f64 = 1e4;

/// Tightest circular cone around the columns of `x`: returns the unit basis
/// `u*` and size angle `alpha*` such that every (normalized) column lies
/// within `alpha*` of `u*`.
///
/// Columns are normalized internally; each must be nonzero. The quadratic
/// program is solved by projected gradient on an augmented Lagrangian: the
/// subproblem in `u` takes steps of `1/L` (with `L` one plus the largest
/// eigenvalue of the active-constraint Gram matrix, re-estimated each sweep)
/// projected onto the nonnegative orthant, and the multipliers ratchet up
/// between sweeps.
pub fn optimal_enclosing_cone(x: &Matrix) -> Result<(Vec<f64>, f64)> {
    if x.cols() == 0 {
        return Err(Error::InvalidConfig("no columns to enclose".into()));
    }
    let (a, _) = x.normalize_columns()?;
    let f = a.rows();
    let m = a.cols();

    // Identical columns need no solver.
    if (1..m).all(|j| a.column(j) == a.column(0)) {
        return Ok((a.column(0).to_vec(), 0.0));
    }

    // The all-ones vector is always feasible: a unit nonnegative column has
    // l1 norm >= l2 norm = 1.
    let mut u = vec![1.0; f];
    let mut mu = vec![0.0; m];
    let mut rho = 10.0;
    let mut prev_obj = f64::INFINITY;
    let mut prev_violation = f64::INFINITY;
    let mut slack = vec![0.0; m];

    for _ in 0..OUTER_MAX {
        // Inner solve: min 1/2||u||^2 + rho/2 sum max(0, g_m + mu_m/rho)^2
        // over u >= 0, where g_m = 1 - a_m^T u. Projected gradient with
        // step 1/L plus Nesterov momentum and function restart; the plain
        // step alone crawls once rho * lambda_max gets large. Warm-started
        // across multiplier updates.
        let phi_grad = |point: &[f64], slack: &mut [f64], mu: &[f64]| -> f64 {
            let ap = a.tr_matvec(point);
            let mut phi = 0.5 * dot(point, point);
            for j in 0..m {
                let s = (1.0 - ap[j]) + mu[j] / rho;
                if s > 0.0 {
                    slack[j] = rho * s;
                    phi += 0.5 * rho * s * s;
                } else {
                    slack[j] = 0.0;
                }
            }
            phi
        };
        let mut phi_prev = f64::INFINITY;
        let mut y = u.clone();
        let mut momentum = 1.0f64;
        let mut it = 0;
        while it < INNER_MAX {
            it += 1;
            phi_grad(&y, &mut slack, &mu);
            let pull = a.matvec(&slack);
            let lip = 1.0 + rho * active_gram_lambda_max(&a, &slack) * 1.05;
            let step = 1.0 / lip;
            let mut next = vec![0.0; f];
            for i in 0..f {
                next[i] = (y[i] - step * (y[i] - pull[i])).max(0.0);
            }
            let phi_next = phi_grad(&next, &mut slack, &mu);
            if phi_next > phi_prev {
                // Momentum overshot; restart from the last stable point.
                y = u.clone();
                momentum = 1.0;
                phi_prev = f64::INFINITY;
                continue;
            }
            let m_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let blend = (momentum - 1.0) / m_next;
            for i in 0..f {
                y[i] = next[i] + blend * (next[i] - u[i]);
            }
            momentum = m_next;
            u = next;
            phi_prev = phi_next;
            if it % 32 == 0 {
                // True fixed-point residual of the projected step at u.
                phi_grad(&u, &mut slack, &mu);
                let pull = a.matvec(&slack);
                let mut resid: f64 = 0.0;
                for i in 0..f {
                    resid = resid.max((u[i] - (u[i] - step * (u[i] - pull[i])).max(0.0)).abs());
                }
                if resid / step <= 1e-12 * (1.0 + dot(&u, &u).sqrt()) {
                    break;
                }
            }
        }
        // Multiplier update.
        let au = a.tr_matvec(&u);
        let mut violation: f64 = 0.0;
        let mut complementarity: f64 = 0.0;
        for j in 0..m {
            let g = 1.0 - au[j];
            mu[j] = (mu[j] + rho * g).max(0.0);
            violation = violation.max(g);
            complementarity = complementarity.max((mu[j] * g).abs());
        }
        // KKT residuals for the true Lagrangian: stationarity of u - A mu
        // over the nonnegative orthant, complementary slackness, primal
        // feasibility, and a settled objective.
        let pull = a.matvec(&mu);
        let mut stationarity: f64 = 0.0;
        for i in 0..f {
            let gr = u[i] - pull[i];
            let r = if u[i] > 0.0 { gr.abs() } else { (-gr).max(0.0) };
            stationarity = stationarity.max(r);
        }
        let obj = 0.5 * dot(&u, &u);
        let scale = obj.max(1.0);
        if violation <= VIOLATION_TOL
            && stationarity <= STATIONARITY_TOL * scale
            && complementarity <= STATIONARITY_TOL * scale
            && (prev_obj - obj).abs() <= OBJECTIVE_TOL * scale
        {
            let mut basis = u.clone();
            let nrm = normalize_in_place(&mut basis);
            let alpha = (1.0 / nrm).clamp(-1.0, 1.0).acos();
            return Ok((basis, alpha));
        }
        prev_obj = obj;
        if violation > VIOLATION_TOL && violation > 0.25 * prev_violation {
            rho = (rho * 5.0).min(RHO_MAX);
        }
        prev_violation = violation;
    }
    let au = a.tr_matvec(&u);
    let violation = au.iter().map(|&v| 1.0 - v).fold(0.0f64, f64::max);
    Err(Error::Infeasible { violation })
}

/// Largest eigenvalue of `sum_{m active} a_m a_m^T`, where active means a
/// positive augmented slack, estimated with a few power sweeps.
fn active_gram_lambda_max(a: &Matrix, slack: &[f64]) -> f64 {
    let f = a.rows();
    let mask: Vec<f64> = slack.iter().map(|&s| if s > 0.0 { 1.0 } else { 0.0 }).collect();
    let active: f64 = mask.iter().sum();
    if active == 0.0 {
        return 0.0;
    }
    let mut v = a.matvec(&mask);
    if normalize_in_place(&mut v) == 0.0 {
        v = vec![1.0; f];
        normalize_in_place(&mut v);
    }
    let mut lambda = 0.0;
    for _ in 0..12 {
        let mut coeff = a.tr_matvec(&v);
        for (c, m) in coeff.iter_mut().zip(&mask) {
            *c *= m;
        }
        let w = a.matvec(&coeff);
        lambda = dot(&v, &w);
        v = w;
        if normalize_in_place(&mut v) == 0.0 {
            return active; // fall back to the trace bound
        }
    }
    lambda.max(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::axpy;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(v: &[f64]) -> Vec<f64> {
        let mut u = v.to_vec();
        normalize_in_place(&mut u);
        u
    }

    #[test]
    fn contains_basis_and_scaled_basis() {
        let e1 = CircularCone::new(vec![1.0, 0.0], 0.2).unwrap();
        assert!(e1.contains(&[1.0, 0.0]).unwrap());
        assert!(e1.contains(&[5.0, 0.0]).unwrap());
    }

    #[test]
    fn contains_rejects_vector_outside_angle() {
        let e1 = CircularCone::new(vec![1.0, 0.0], 0.2).unwrap();
        let x = [0.3f64.cos(), 0.3f64.sin()];
        assert!(!e1.contains(&x).unwrap());
        let y = [0.15f64.cos(), 0.15f64.sin()];
        assert!(e1.contains(&y).unwrap());
    }

    #[test]
    fn contains_errors_on_zero_vector() {
        let e1 = CircularCone::new(vec![1.0, 0.0], 0.2).unwrap();
        assert!(matches!(e1.contains(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn contains_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cone = CircularCone::new(unit(&[1.0, 1.0, 0.5, 0.2]), 0.6).unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..4).map(|_| rng.random::<f64>() - 0.2).collect();
            if norm2(&x) == 0.0 {
                continue;
            }
            let c = rng.random::<f64>() * 10.0 + 1e-3;
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            assert_eq!(cone.contains(&x).unwrap(), cone.contains(&scaled).unwrap());
        }
    }

    fn two_cone_set(a1: f64, a2: f64, beta: f64) -> ConeSet {
        let u1 = vec![1.0, 0.0];
        let u2 = vec![beta.cos(), beta.sin()];
        ConeSet::new(vec![
            CircularCone::new(u1, a1).unwrap(),
            CircularCone::new(u2, a2).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn separation_check_holds_with_margin() {
        let set = two_cone_set(0.2, 0.2, 0.9);
        let (holds, margin) = set.check_geometric_assumption().unwrap();
        assert!(holds);
        assert!((margin - 0.1).abs() < 1e-12);
    }

    #[test]
    fn separation_check_strict_at_boundary() {
        let set = two_cone_set(0.2, 0.2, 0.8);
        let (holds, margin) = set.check_geometric_assumption().unwrap();
        assert!(!holds);
        assert!(margin.abs() < 1e-12);
    }

    #[test]
    fn separation_check_three_cones() {
        // Pairwise basis angles all 1.0 rad; the worst pair needs
        // 3*0.3 + 0.2 = 1.1, so the condition fails with margin -0.1.
        let c = 1.0f64.cos();
        let mk = |k: usize| {
            let mut v = vec![0.0; 4];
            v[3] = c.sqrt();
            v[k] = (1.0 - c).sqrt();
            v
        };
        let set = ConeSet::new(vec![
            CircularCone::new(mk(0), 0.1).unwrap(),
            CircularCone::new(mk(1), 0.2).unwrap(),
            CircularCone::new(mk(2), 0.3).unwrap(),
        ])
        .unwrap();
        let (holds, margin) = set.check_geometric_assumption().unwrap();
        assert!(!holds);
        assert!((margin - (1.0 - 1.1)).abs() < 1e-9, "margin = {margin}");
    }

    #[test]
    fn separation_check_permutation_invariant() {
        let mk = |k: usize, a: f64| {
            let mut v = vec![0.05; 5];
            v[k] = 1.0;
            CircularCone::new(unit(&v), a).unwrap()
        };
        let cones = vec![mk(0, 0.1), mk(1, 0.25), mk(2, 0.17)];
        let base = ConeSet::new(cones.clone())
            .unwrap()
            .check_geometric_assumption()
            .unwrap();
        let mut perm = cones;
        perm.rotate_left(1);
        let rotated = ConeSet::new(perm)
            .unwrap()
            .check_geometric_assumption()
            .unwrap();
        assert_eq!(base.0, rotated.0);
        assert!((base.1 - rotated.1).abs() < 1e-12);
    }

    #[test]
    fn separation_check_requires_two_cones() {
        let set = ConeSet::new(vec![CircularCone::new(vec![1.0, 0.0], 0.2).unwrap()]).unwrap();
        assert!(matches!(set.check_geometric_assumption(), Err(Error::SingleCone)));
    }

    #[test]
    fn orthant_containment_boundary_case() {
        let r = 0.5f64.sqrt();
        let cone = CircularCone::new(vec![r, r], std::f64::consts::FRAC_PI_4).unwrap();
        assert!(cone.contained_in_orthant().unwrap());
    }

    #[test]
    fn orthant_containment_threshold() {
        let ok = CircularCone::new(vec![0.6, 0.8], 0.5).unwrap();
        assert!(ok.contained_in_orthant().unwrap());
        let too_wide = CircularCone::new(vec![0.6, 0.8], 0.7).unwrap();
        assert!(!too_wide.contained_in_orthant().unwrap());
    }

    #[test]
    fn orthant_containment_needs_positive_basis() {
        let cone = CircularCone::new(vec![1.0, 0.0], 0.2).unwrap();
        assert!(matches!(cone.contained_in_orthant(), Err(Error::NonPositiveBasis(1))));
    }

    #[test]
    fn orthant_contained_cones_have_nonnegative_boundaries() {
        // Points at angle exactly alpha from the basis must stay inside the
        // orthant whenever the containment test passes.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let basis = unit(&[0.9, 0.8, 0.7, 0.9, 0.6]);
        let u_min: f64 = basis.iter().cloned().fold(f64::INFINITY, f64::min);
        let alpha = (1.0 - u_min * u_min).sqrt().acos(); // largest admissible
        let cone = CircularCone::new(basis.clone(), alpha).unwrap();
        assert!(cone.contained_in_orthant().unwrap());
        for _ in 0..10_000 {
            let mut y: Vec<f64> = (0..5).map(|_| rng.random::<f64>() - 0.5).collect();
            let c = dot(&y, &basis);
            axpy(-c, &basis, &mut y);
            if normalize_in_place(&mut y) == 0.0 {
                continue;
            }
            let x: Vec<f64> = basis
                .iter()
                .zip(&y)
                .map(|(b, yy)| alpha.cos() * b + alpha.sin() * yy)
                .collect();
            assert!(x.iter().all(|&v| v >= -1e-12), "boundary point left the orthant: {x:?}");
        }
    }

    #[test]
    fn enclosing_cone_single_column() {
        let x = Matrix::new(3, 1, unit(&[0.3, 0.5, 0.9])).unwrap();
        let (u, alpha) = optimal_enclosing_cone(&x).unwrap();
        assert_eq!(alpha, 0.0);
        for (a, b) in u.iter().zip(x.column(0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn enclosing_cone_two_axes() {
        let x = Matrix::from_row_major(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let (u, alpha) = optimal_enclosing_cone(&x).unwrap();
        let r = 0.5f64.sqrt();
        assert!((u[0] - r).abs() < 1e-6, "{u:?}");
        assert!((u[1] - r).abs() < 1e-6);
        assert!((alpha - std::f64::consts::FRAC_PI_4).abs() < 1e-6);
    }

    #[test]
    fn enclosing_cone_recovers_planar_arc() {
        // 200 unit vectors spanning angles [pi/4 - 0.2, pi/4 + 0.2]: the
        // tightest cone is the bisector with size angle 0.2.
        let m = 200;
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let t = std::f64::consts::FRAC_PI_4 - 0.2 + 0.4 * i as f64 / (m - 1) as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let x = Matrix::from_columns(&cols).unwrap();
        let (u, alpha) = optimal_enclosing_cone(&x).unwrap();
        assert!(alpha <= 0.2 + 1e-6, "alpha = {alpha}");
        let cone = CircularCone::new(u, alpha + 1e-8).unwrap();
        for j in 0..m {
            assert!(cone.contains(x.column(j)).unwrap(), "column {j} escaped");
        }
    }

    #[test]
    fn enclosing_cone_ignores_duplicate_columns() {
        let cols: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = 0.3 + 0.5 * i as f64 / 39.0;
                unit(&[t.cos(), t.sin(), 0.1])
            })
            .collect();
        let x = Matrix::from_columns(&cols).unwrap();
        let (u1, a1) = optimal_enclosing_cone(&x).unwrap();
        let mut dup = cols.clone();
        dup.push(cols[0].clone());
        dup.push(cols[17].clone());
        let xd = Matrix::from_columns(&dup).unwrap();
        let (u2, a2) = optimal_enclosing_cone(&xd).unwrap();
        assert!((a1 - a2).abs() < 1e-8);
        for (a, b) in u1.iter().zip(&u2) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn enclosing_cone_angle_monotone_under_new_columns() {
        let base: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = 0.5 + 0.3 * i as f64 / 29.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let x = Matrix::from_columns(&base).unwrap();
        let (_, a1) = optimal_enclosing_cone(&x).unwrap();
        let mut wider = base;
        wider.push(vec![0.2f64.cos(), 0.2f64.sin()]);
        let xw = Matrix::from_columns(&wider).unwrap();
        let (_, a2) = optimal_enclosing_cone(&xw).unwrap();
        assert!(a2 >= a1 - 1e-9);
    }
}
