//! Cone-count estimation from the spectrum.
//!
//! The estimate is the `k` in `[k_min, k_max]` maximizing the adjacent
//! singular-value ratio `sigma_k / sigma_{k+1}` - an elbow rule: adding the
//! (K+1)-th component stops paying once the K generating directions are
//! covered, so the spectrum drops sharply right after `k = K`.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::svd::top_singular_values;

/// Adjacent-ratio estimate of the number of cones. Returns the argmax `k`
/// and the ratios for the whole candidate range (diagnostics). A zero
/// `sigma_{k+1}` under a positive `sigma_k` counts as an infinite ratio,
/// claimed by the smallest such `k`; ties break toward smaller `k`.
pub fn estimate_k(v: &Matrix, k_min: usize, k_max: usize) -> Result<(usize, Vec<f64>)> {
    let p = v.rows().min(v.cols());
    if k_min <= 1 || k_min > k_max || k_max >= p {
        return Err(Error::RangeInvalid(format!(
            "need 1 < k_min <= k_max < min(F, N) = {p}, got [{k_min}, {k_max}]"
        )));
    }
    let sv = top_singular_values(v, k_max + 1)?;
    if sv[k_min - 1] == 0.0 {
        return Err(Error::RankDeficient(k_min));
    }
    let mut ratios = Vec::with_capacity(k_max - k_min + 1);
    for k in k_min..=k_max {
        let (hi, lo) = (sv[k - 1], sv[k]);
        let r = if lo > 0.0 {
            hi / lo
        } else if hi > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        ratios.push(r);
    }
    let mut k_hat = k_min;
    let mut best = f64::NEG_INFINITY;
    for (off, &r) in ratios.iter().enumerate() {
        if r > best {
            best = r;
            k_hat = k_min + off;
        }
    }
    Ok((k_hat, ratios))
}

/// Same estimate after rescaling every column to unit norm, which removes
/// the influence of heterogeneous length distributions.
pub fn estimate_k_normalized(v: &Matrix, k_min: usize, k_max: usize) -> Result<(usize, Vec<f64>)> {
    let (unit, _) = v.normalize_columns()?;
    estimate_k(&unit, k_min, k_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{add_noise, generate, GeneratorSpec};

    fn diag(values: &[f64]) -> Matrix {
        let n = values.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    #[test]
    fn picks_largest_adjacent_gap() {
        let m = diag(&[10.0, 9.0, 8.0, 0.1, 0.05]);
        let (k_hat, ratios) = estimate_k(&m, 2, 4).unwrap();
        assert_eq!(k_hat, 3);
        assert!((ratios[1] - 80.0).abs() < 1e-6, "{ratios:?}");
    }

    #[test]
    fn zero_tail_counts_as_infinite_ratio() {
        let m = diag(&[5.0, 4.0, 3.0, 0.0, 0.0]);
        let (k_hat, ratios) = estimate_k(&m, 2, 4).unwrap();
        assert_eq!(k_hat, 3);
        assert!(ratios[1].is_infinite());
        assert_eq!(ratios[2], 0.0); // 0/0 carries no evidence
    }

    #[test]
    fn exact_directions_recover_their_count() {
        // Rank-3 data: three axis directions, several columns each.
        let cols: Vec<Vec<f64>> = (0..9)
            .map(|j| {
                let mut c = vec![0.0; 6];
                c[j % 3] = 1.0 + j as f64;
                c
            })
            .collect();
        let m = Matrix::from_columns(&cols).unwrap();
        let (k_hat, _) = estimate_k(&m, 2, 5).unwrap();
        assert_eq!(k_hat, 3);
    }

    #[test]
    fn rejects_bad_ranges() {
        let m = diag(&[3.0, 2.0, 1.0]);
        assert!(matches!(estimate_k(&m, 1, 2), Err(Error::RangeInvalid(_))));
        assert!(matches!(estimate_k(&m, 2, 3), Err(Error::RangeInvalid(_))));
        assert!(matches!(estimate_k(&m, 2, 1), Err(Error::RangeInvalid(_))));
    }

    #[test]
    fn rank_deficient_range_is_an_error() {
        let m = diag(&[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(estimate_k(&m, 2, 3), Err(Error::RankDeficient(2))));
    }

    #[test]
    fn scale_invariant() {
        let m = diag(&[7.0, 5.0, 1.0, 0.4, 0.3]);
        let (k1, r1) = estimate_k(&m, 2, 4).unwrap();
        let (k2, r2) = estimate_k(&m.scaled(123.0), 2, 4).unwrap();
        assert_eq!(k1, k2);
        for (a, b) in r1.iter().zip(&r2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn recovers_cone_count_under_mild_noise() {
        let spec = GeneratorSpec {
            f: 40,
            n: 2000,
            k: 5,
            alphas: vec![0.2; 5],
            beta: None,
            lambdas: vec![1.0; 5],
            mixing: None,
            project: true,
            seed: 17,
            delta: 0.0,
        };
        let ds = generate(&spec.to_config().unwrap()).unwrap();
        let noisy = add_noise(&ds.matrix, 0.05, 18);
        let (k_hat, _) = estimate_k(&noisy, 2, 12).unwrap();
        assert_eq!(k_hat, 5);
    }

    #[test]
    fn normalized_variant_handles_unbalanced_lengths() {
        let spec = GeneratorSpec {
            f: 30,
            n: 1500,
            k: 4,
            alphas: vec![0.15; 4],
            beta: None,
            lambdas: vec![0.05, 0.5, 5.0, 50.0],
            mixing: None,
            project: true,
            seed: 23,
            delta: 0.0,
        };
        let ds = generate(&spec.to_config().unwrap()).unwrap();
        let (k_hat, _) = estimate_k_normalized(&ds.matrix, 2, 10).unwrap();
        assert_eq!(k_hat, 4);
    }
}
