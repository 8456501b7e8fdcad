//! Seeded generator for labeled cone datasets.
//!
//! Each column is drawn by (1) picking a cone from the mixing weights,
//! (2) drawing a squared length from that cone's exponential distribution,
//! (3) sampling a unit vector at a uniform angle from the cone's basis,
//! (4) optionally clamping negative entries and renormalizing, and
//! (5) scaling the unit vector by the square root of the length.
//!
//! Every column gets its own counter-based RNG stream derived from
//! `(seed, column index)`, so generation is deterministic and byte-identical
//! whether columns are filled serially or in parallel.

use crate::cones::{CircularCone, ConeSet};
use crate::error::{Error, Result};
use crate::matrix::{dot, normalize_in_place, Matrix};
use crate::svd::householder_vector;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Sampling parameters: the cone family, per-cone exponential rates for the
/// squared lengths, mixing weights, the orthant-projection flag, and a seed.
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub cones: ConeSet,
    /// Rate (inverse expectation) of the squared-length distribution, per cone.
    pub lambdas: Vec<f64>,
    /// Cone selection probabilities; must sum to 1.
    pub mixing: Vec<f64>,
    /// Clamp negative entries to zero and renormalize before scaling.
    pub project: bool,
    /// Number of columns to generate.
    pub n: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    /// Uniform mixing over the cones.
    pub fn new(cones: ConeSet, lambdas: Vec<f64>, n: usize, seed: u64) -> Result<Self> {
        let k = cones.k();
        let mixing = vec![1.0 / k as f64; k];
        let cfg = Self { cones, lambdas, mixing, project: true, n, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_project(mut self, project: bool) -> Self {
        self.project = project;
        self
    }

    pub fn with_mixing(mut self, mixing: Vec<f64>) -> Result<Self> {
        self.mixing = mixing;
        self.validate()?;
        Ok(self)
    }

    pub fn f(&self) -> usize {
        self.cones.dim()
    }

    pub fn k(&self) -> usize {
        self.cones.k()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.cones.k();
        if self.lambdas.len() != k {
            return Err(Error::InvalidConfig(format!(
                "{} rate parameters for {k} cones",
                self.lambdas.len()
            )));
        }
        if let Some(l) = self.lambdas.iter().find(|&&l| !l.is_finite() || l <= 0.0) {
            return Err(Error::InvalidConfig(format!("rate {l} is not positive")));
        }
        if self.mixing.len() != k {
            return Err(Error::InvalidConfig(format!(
                "{} mixing weights for {k} cones",
                self.mixing.len()
            )));
        }
        if self.mixing.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidConfig("negative mixing weight".into()));
        }
        let total: f64 = self.mixing.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("mixing weights sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// A generated matrix with its ground-truth cone labels.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub matrix: Matrix,
    pub labels: Vec<usize>,
    pub config: GeneratorConfig,
}

/// `K` nonnegative unit vectors in `R^F` with every pairwise angle exactly
/// `beta`: `u_k = sqrt(cos beta) e_{K} + sqrt(1 - cos beta) e_{k-1}`
/// (a shared axis plus one private axis each). Needs `F >= K + 1`.
pub fn equiangular_bases(f: usize, k: usize, beta: f64) -> Result<Vec<Vec<f64>>> {
    if f < k + 1 {
        return Err(Error::DimensionTooSmall { f, need: k + 1 });
    }
    if !(beta > 0.0 && beta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidConfig(format!("basis angle {beta} outside (0, pi/2)")));
    }
    let shared = beta.cos().sqrt();
    let private = (1.0 - beta.cos()).sqrt();
    Ok((0..k)
        .map(|i| {
            let mut u = vec![0.0; f];
            u[k] = shared;
            u[i] = private;
            u
        })
        .collect())
}

/// Equiangular cone family with one size angle for all cones.
pub fn equiangular_cone_set(f: usize, k: usize, beta: f64, alpha: f64) -> Result<ConeSet> {
    let cones = equiangular_bases(f, k, beta)?
        .into_iter()
        .map(|u| CircularCone::new(u, alpha))
        .collect::<Result<Vec<_>>>()?;
    ConeSet::new(cones)
}

/// Per-cone sampler with the Householder reflection vector cached.
struct ConeSampler {
    /// Reflection mapping e_0 onto the basis; `None` when the basis is e_0.
    z: Option<Vec<f64>>,
    angle: f64,
    dim: usize,
}

impl ConeSampler {
    fn new(cone: &CircularCone) -> Self {
        Self {
            z: householder_vector(cone.basis(), 0),
            angle: cone.angle(),
            dim: cone.dim(),
        }
    }

    /// Unit vector at a uniform angle in `[0, alpha]` from the basis. Draws
    /// the angle first, then `dim - 1` normal deviates for the orthogonal
    /// direction.
    fn sample<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        let beta = rng.random::<f64>() * self.angle;
        // y: unit vector orthogonal to e_0 (zero first coordinate).
        out[0] = 0.0;
        let mut sum_sq = 0.0;
        for o in out.iter_mut().skip(1) {
            let g: f64 = StandardNormal.sample(rng);
            *o = g;
            sum_sq += g * g;
        }
        let scale = if sum_sq > 0.0 { beta.sin() / sum_sq.sqrt() } else { 0.0 };
        for o in out.iter_mut().skip(1) {
            *o *= scale;
        }
        out[0] = beta.cos();
        // Reflect x = cos(beta) e_0 + sin(beta) y onto the cone's basis.
        if let Some(z) = &self.z {
            let s = -2.0 * dot(z, out);
            for (o, &zz) in out.iter_mut().zip(z) {
                *o += s * zz;
            }
        }
    }
}

/// One uniform-angle unit sample from a cone. The result is unit norm and
/// lies at its drawn angle from the basis exactly (no orthant projection).
pub fn sample_unit_in_cone<R: Rng>(cone: &CircularCone, rng: &mut R) -> Vec<f64> {
    let sampler = ConeSampler::new(cone);
    let mut out = vec![0.0; cone.dim()];
    sampler.sample(rng, &mut out);
    out
}

/// Stream tag separating generator draws from noise draws on the same seed.
const STREAM_GENERATE: u64 = 0x67656e;
const STREAM_NOISE: u64 = 0x6e6f6973;

/// splitmix64; decorrelates the per-column seeds.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn column_rng(seed: u64, stream: u64, column: usize) -> ChaCha8Rng {
    let s = mix(seed ^ mix(stream) ^ mix(column as u64).rotate_left(17));
    ChaCha8Rng::seed_from_u64(s)
}

/// Generates a labeled dataset. Column `j` is produced from its own RNG
/// stream, so the output is identical no matter how the work is split
/// across threads.
pub fn generate(config: &GeneratorConfig) -> Result<LabeledDataset> {
    config.validate()?;
    let f = config.f();
    let n = config.n;
    let samplers: Vec<ConeSampler> =
        config.cones.cones().iter().map(ConeSampler::new).collect();
    let mut matrix = Matrix::zeros(f, n);
    let mut labels = vec![0usize; n];
    let fill = |j: usize, col: &mut [f64], label: &mut usize| {
        let mut rng = column_rng(config.seed, STREAM_GENERATE, j);
        // Cone choice by inverse CDF over the mixing weights.
        let t = rng.random::<f64>();
        let mut acc = 0.0;
        let mut k = config.mixing.len() - 1;
        for (i, &p) in config.mixing.iter().enumerate() {
            acc += p;
            if t < acc {
                k = i;
                break;
            }
        }
        // Squared length by inverse CDF of the exponential.
        let u: f64 = rng.random();
        let l = -(1.0 - u).ln() / config.lambdas[k];
        samplers[k].sample(&mut rng, col);
        if config.project && col.iter().any(|&v| v < 0.0) {
            for v in col.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            normalize_in_place(col);
        }
        let r = l.sqrt();
        for v in col.iter_mut() {
            *v *= r;
        }
        *label = k;
    };
    if n * f >= 1 << 16 {
        matrix
            .data_mut()
            .par_chunks_mut(f)
            .zip(labels.par_iter_mut())
            .enumerate()
            .for_each(|(j, (col, label))| fill(j, col, label));
    } else {
        let data = matrix.data_mut();
        for (j, label) in labels.iter_mut().enumerate() {
            fill(j, &mut data[j * f..(j + 1) * f], label);
        }
    }
    Ok(LabeledDataset { matrix, labels, config: config.clone() })
}

/// Additive Gaussian noise clamped to the orthant: `[v + delta * E]_+` with
/// `E` standard normal. Seeded per column like [`generate`].
pub fn add_noise(v: &Matrix, delta: f64, seed: u64) -> Matrix {
    assert!(delta >= 0.0, "noise level must be nonnegative");
    if delta == 0.0 {
        let mut out = v.clone();
        for x in out.data_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        return out;
    }
    let f = v.rows();
    let mut out = v.clone();
    let perturb = |j: usize, col: &mut [f64]| {
        let mut rng = column_rng(seed, STREAM_NOISE, j);
        for x in col.iter_mut() {
            let g: f64 = StandardNormal.sample(&mut rng);
            *x = (*x + delta * g).max(0.0);
        }
    };
    if v.rows() * v.cols() >= 1 << 16 {
        out.data_mut()
            .par_chunks_mut(f)
            .enumerate()
            .for_each(|(j, col)| perturb(j, col));
    } else {
        out.data_mut()
            .chunks_mut(f)
            .enumerate()
            .for_each(|(j, col)| perturb(j, col));
    }
    out
}

/// Flat, file-friendly description of a generator run over an equiangular
/// cone family. [`GeneratorSpec::to_config`] builds the concrete cones.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub f: usize,
    pub n: usize,
    pub k: usize,
    /// Size angles, length `k`.
    pub alphas: Vec<f64>,
    /// Pairwise basis angle; `None` means `4 * max(alpha) + 0.01`.
    pub beta: Option<f64>,
    pub lambdas: Vec<f64>,
    /// `None` means uniform.
    pub mixing: Option<Vec<f64>>,
    pub project: bool,
    pub seed: u64,
    /// Post-generation noise level; 0 disables.
    pub delta: f64,
}

impl GeneratorSpec {
    pub fn resolved_beta(&self) -> f64 {
        self.beta.unwrap_or_else(|| {
            4.0 * self.alphas.iter().cloned().fold(0.0f64, f64::max) + 0.01
        })
    }

    pub fn to_config(&self) -> Result<GeneratorConfig> {
        if self.alphas.len() != self.k {
            return Err(Error::InvalidConfig(format!(
                "{} size angles for k = {}",
                self.alphas.len(),
                self.k
            )));
        }
        let beta = self.resolved_beta();
        let cones = equiangular_bases(self.f, self.k, beta)?
            .into_iter()
            .zip(&self.alphas)
            .map(|(u, &a)| CircularCone::new(u, a))
            .collect::<Result<Vec<_>>>()?;
        let cones = ConeSet::new(cones)?;
        let mut cfg = GeneratorConfig::new(cones, self.lambdas.clone(), self.n, self.seed)?
            .with_project(self.project);
        if let Some(m) = &self.mixing {
            cfg = cfg.with_mixing(m.clone())?;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr1nmf::f_alpha;
    use crate::matrix::norm2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn simple_spec(f: usize, n: usize, k: usize, alpha: f64, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            f,
            n,
            k,
            alphas: vec![alpha; k],
            beta: None,
            lambdas: vec![1.0; k],
            mixing: None,
            project: false,
            seed,
            delta: 0.0,
        }
    }

    #[test]
    fn equiangular_hand_case() {
        let b = equiangular_bases(3, 2, std::f64::consts::FRAC_PI_3).unwrap();
        let r = 0.5f64.sqrt();
        assert!((b[0][0] - r).abs() < 1e-15 && b[0][1] == 0.0 && (b[0][2] - r).abs() < 1e-15);
        assert!(b[1][0] == 0.0 && (b[1][1] - r).abs() < 1e-15 && (b[1][2] - r).abs() < 1e-15);
        assert!((dot(&b[0], &b[1]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn equiangular_pairwise_angles_exact() {
        for (f, k, beta) in [(10, 4, 0.7), (6, 2, 1.2), (41, 40, 0.81)] {
            let b = equiangular_bases(f, k, beta).unwrap();
            for i in 0..k {
                assert!((norm2(&b[i]) - 1.0).abs() < 1e-12);
                for j in i + 1..k {
                    let angle = dot(&b[i], &b[j]).clamp(-1.0, 1.0).acos();
                    assert!((angle - beta).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn equiangular_rejects_small_dimension() {
        assert!(matches!(
            equiangular_bases(4, 4, 0.5),
            Err(Error::DimensionTooSmall { f: 4, need: 5 })
        ));
    }

    #[test]
    fn equiangular_experiment_scale_passes_separation_check() {
        // The benchmark geometry: beta = 4*alpha + 0.01 leaves margin 0.01.
        let set = equiangular_cone_set(1600, 40, 0.81, 0.2).unwrap();
        let (holds, margin) = set.check_geometric_assumption().unwrap();
        assert!(holds);
        assert!((margin - 0.01).abs() < 1e-9);
    }

    #[test]
    fn sample_degenerate_cone_returns_basis() {
        let mut v = vec![0.5; 4];
        normalize_in_place(&mut v);
        let cone = CircularCone::new(v.clone(), 1e-12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = sample_unit_in_cone(&cone, &mut rng);
        let diff: f64 = x.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!(diff.sqrt() <= 1e-9);
    }

    #[test]
    fn sample_mean_squared_sine_matches_closed_form() {
        // E[sin^2(angle)] over a uniform angle in [0, alpha] has the closed
        // form 1/2 - sin(2a)/(4a); cross-check against direct quadrature.
        let alpha = 0.3;
        let quad = {
            let steps = 100_000;
            let h = alpha / steps as f64;
            let mut s = 0.0;
            for i in 0..steps {
                let b0 = (i as f64) * h;
                let b1 = b0 + h;
                s += 0.5 * (b0.sin().powi(2) + b1.sin().powi(2)) * h;
            }
            s / alpha
        };
        assert!((quad - f_alpha(alpha)).abs() < 1e-9);
        assert!((f_alpha(alpha) - 0.0294646).abs() < 1e-6);

        let mut u = vec![0.4; 6];
        normalize_in_place(&mut u);
        let cone = CircularCone::new(u.clone(), alpha).unwrap();
        let sampler = ConeSampler::new(&cone);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut buf = vec![0.0; 6];
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            sampler.sample(&mut rng, &mut buf);
            let c = dot(&buf, &u).clamp(-1.0, 1.0);
            acc += 1.0 - c * c;
        }
        let mean = acc / n as f64;
        assert!((mean - f_alpha(alpha)).abs() <= 0.002, "mean sin^2 = {mean}");
    }

    #[test]
    fn samples_stay_in_cone_and_unit_norm() {
        let mut u = vec![0.0; 8];
        u[0] = 0.6;
        u[3] = 0.8;
        let cone = CircularCone::new(u, 0.2).unwrap();
        let sampler = ConeSampler::new(&cone);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut buf = vec![0.0; 8];
        for _ in 0..10_000 {
            sampler.sample(&mut rng, &mut buf);
            assert!((norm2(&buf) - 1.0).abs() < 1e-12);
            assert!(cone.contains(&buf).unwrap());
        }
    }

    #[test]
    fn generate_empty_dataset() {
        let mut spec = simple_spec(5, 0, 2, 0.1, 3);
        spec.n = 0;
        let ds = generate(&spec.to_config().unwrap()).unwrap();
        assert_eq!(ds.matrix.cols(), 0);
        assert!(ds.labels.is_empty());
    }

    #[test]
    fn generate_single_cone_length_statistics() {
        // E[||v||^2] = E[l] = 1/lambda.
        let mut spec = simple_spec(6, 100_000, 1, 0.25, 11);
        spec.lambdas = vec![2.0];
        // K = 1 needs no separation; build the cone set directly.
        let cfg = spec.to_config().unwrap();
        let ds = generate(&cfg).unwrap();
        let mean_sq = ds.matrix.frobenius_norm_sq() / ds.matrix.cols() as f64;
        assert!((mean_sq - 0.5).abs() <= 0.01, "mean squared length {mean_sq}");
    }

    #[test]
    fn generate_projection_keeps_matrix_nonnegative() {
        let mut spec = simple_spec(12, 4000, 3, 0.45, 7);
        spec.beta = Some(1.5); // the auto rule 4a + 0.01 would exceed pi/2
        spec.project = true;
        let ds = generate(&spec.to_config().unwrap()).unwrap();
        assert!(ds.matrix.is_nonnegative());
    }

    #[test]
    fn generate_is_deterministic() {
        let spec = simple_spec(30, 500, 4, 0.2, 12345);
        let a = generate(&spec.to_config().unwrap()).unwrap();
        let b = generate(&spec.to_config().unwrap()).unwrap();
        assert_eq!(a.matrix.data(), b.matrix.data());
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn generate_labels_match_containing_cone() {
        let spec = simple_spec(20, 2000, 4, 0.15, 77);
        let cfg = spec.to_config().unwrap();
        let ds = generate(&cfg).unwrap();
        for j in 0..ds.matrix.cols() {
            let cone = cfg.cones.cone(ds.labels[j]);
            assert!(cone.contains(ds.matrix.column(j)).unwrap(), "column {j}");
        }
    }

    #[test]
    fn generate_mixing_weights_respected() {
        let spec = simple_spec(10, 50_000, 2, 0.1, 5);
        let cfg = spec
            .to_config()
            .unwrap()
            .with_mixing(vec![0.85, 0.15])
            .unwrap();
        let ds = generate(&cfg).unwrap();
        let share = ds.labels.iter().filter(|&&l| l == 0).count() as f64 / 50_000.0;
        assert!((share - 0.85).abs() < 0.01, "share {share}");
    }

    #[test]
    fn covariance_matches_closed_form_for_axis_cone() {
        // Single cone on the first axis, no projection: the second moment is
        // diagonal with g(alpha)/lambda on the axis and f(alpha)/((F-1)lambda)
        // elsewhere. Cheap version; the full-scale run lives in acceptance.
        let f_dim = 8;
        let alpha = 0.3;
        let n = 200_000;
        let mut u = vec![0.0; f_dim];
        u[0] = 1.0;
        let cone = CircularCone::new(u, alpha).unwrap();
        let cones = ConeSet::new(vec![cone]).unwrap();
        let cfg = GeneratorConfig::new(cones, vec![1.0], n, 31).unwrap().with_project(false);
        let ds = generate(&cfg).unwrap();
        let cov = ds.matrix.gram_rows().scaled(1.0 / n as f64);
        let g = 1.0 - f_alpha(alpha);
        let off = f_alpha(alpha) / (f_dim - 1) as f64;
        for i in 0..f_dim {
            for j in 0..f_dim {
                let target = if i != j {
                    0.0
                } else if i == 0 {
                    g
                } else {
                    off
                };
                assert!(
                    (cov.get(i, j) - target).abs() <= 0.02,
                    "cov[{i}][{j}] = {} vs {target}",
                    cov.get(i, j)
                );
            }
        }
    }

    #[test]
    fn noise_zero_level_is_identity() {
        let spec = simple_spec(6, 50, 2, 0.2, 9);
        let mut cfg = spec.to_config().unwrap();
        cfg.project = true;
        let ds = generate(&cfg).unwrap();
        let noisy = add_noise(&ds.matrix, 0.0, 1);
        assert_eq!(noisy.data(), ds.matrix.data());
    }

    #[test]
    fn noise_output_nonnegative_and_deterministic() {
        let spec = simple_spec(6, 400, 2, 0.2, 9);
        let ds = generate(&spec.to_config().unwrap()).unwrap();
        let a = add_noise(&ds.matrix, 0.5, 42);
        let b = add_noise(&ds.matrix, 0.5, 42);
        assert!(a.is_nonnegative());
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn noise_on_zero_matrix_has_half_normal_mean() {
        // Entries of [delta * E]_+ are half-normal with mean 1/sqrt(2 pi).
        let z = Matrix::zeros(1000, 1000);
        let noisy = add_noise(&z, 1.0, 8);
        let mean: f64 = noisy.data().iter().sum::<f64>() / 1e6;
        let expected = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((mean - expected).abs() <= 0.01, "mean {mean} vs {expected}");
    }
}
