//! Greedy maximin clustering of matrix columns by direction.
//!
//! Centroids are actual (normalized) data columns: the first is fixed, and
//! each later one is the column whose largest cosine similarity to the
//! centroids chosen so far is smallest. Columns are then assigned to their
//! most similar centroid. When the data's cones satisfy the pairwise
//! separation condition, this recovers the generating partition exactly.
//!
//! Running maxima are cached per column, so selecting K centroids over N
//! columns costs O(KFN).

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use rand::{RngExt, SeedableRng};
use rayon::prelude::*;

/// Disjoint index sets covering the columns, plus the chosen centroids.
#[derive(Debug, Clone)]
pub struct Partition {
    sets: Vec<Vec<usize>>,
    assignments: Vec<usize>,
    centroids: Matrix,
    centroid_indices: Vec<usize>,
}

impl Partition {
    #[inline]
    pub fn k(&self) -> usize {
        self.sets.len()
    }

    /// Index sets, one per cluster; clusters may be empty when the data has
    /// fewer distinct directions than requested clusters.
    #[inline]
    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    #[inline]
    pub fn set(&self, k: usize) -> &[usize] {
        &self.sets[k]
    }

    /// Cluster id per column.
    #[inline]
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// Unit centroids (columns of the normalized input), one per cluster.
    #[inline]
    pub fn centroids(&self) -> &Matrix {
        &self.centroids
    }

    /// Column indices the centroids were taken from.
    #[inline]
    pub fn centroid_indices(&self) -> &[usize] {
        &self.centroid_indices
    }

    /// Ids of clusters that received no columns.
    pub fn empty_clusters(&self) -> Vec<usize> {
        (0..self.k()).filter(|&k| self.sets[k].is_empty()).collect()
    }
}

/// Greedy clustering with the first centroid fixed to column 0.
pub fn greedy_cluster(v: &Matrix, k: usize) -> Result<Partition> {
    greedy_cluster_from(v, k, 0)
}

/// Greedy clustering with a seeded random first centroid, for robustness
/// studies of the (otherwise arbitrary) starting choice.
pub fn greedy_cluster_seeded(v: &Matrix, k: usize, seed: u64) -> Result<Partition> {
    if v.cols() == 0 {
        return Err(Error::KExceedsN { k, n: 0 });
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..v.cols());
    greedy_cluster_from(v, k, first)
}

/// Greedy clustering with an explicit first centroid column.
pub fn greedy_cluster_from(v: &Matrix, k: usize, first: usize) -> Result<Partition> {
    if k == 0 {
        return Err(Error::InvalidConfig("cluster count must be at least 1".into()));
    }
    let n = v.cols();
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    if first >= n {
        return Err(Error::InvalidConfig(format!("first centroid {first} out of range")));
    }
    let mut norms = vec![0.0; n];
    for (j, nj) in norms.iter_mut().enumerate() {
        let s = dot(v.column(j), v.column(j)).sqrt();
        if s == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        *nj = s;
    }

    let mut centroid_indices = Vec::with_capacity(k);
    centroid_indices.push(first);
    // Cosine similarity of each column to its closest chosen centroid, and
    // the (lowest) centroid id attaining it.
    let mut maxsim = vec![f64::NEG_INFINITY; n];
    let mut best = vec![0usize; n];
    let update = |c_idx: usize,
                  c_id: usize,
                  maxsim: &mut [f64],
                  best: &mut [usize]| {
        let c_col = v.column(c_idx);
        let c_norm = norms[c_idx];
        let task = |j: usize, ms: &mut f64, b: &mut usize| {
            let s = dot(c_col, v.column(j)) / (c_norm * norms[j]);
            if s > *ms {
                *ms = s;
                *b = c_id;
            }
        };
        if v.rows() * n >= 1 << 16 {
            maxsim
                .par_iter_mut()
                .zip(best.par_iter_mut())
                .enumerate()
                .for_each(|(j, (ms, b))| task(j, ms, b));
        } else {
            for (j, (ms, b)) in maxsim.iter_mut().zip(best.iter_mut()).enumerate() {
                task(j, ms, b);
            }
        }
    };
    update(first, 0, &mut maxsim, &mut best);
    for step in 1..k {
        // Least similar column to every chosen centroid; ties at the lowest
        // column index.
        let mut arg = 0;
        let mut min = f64::INFINITY;
        for (j, &s) in maxsim.iter().enumerate() {
            if s < min {
                min = s;
                arg = j;
            }
        }
        centroid_indices.push(arg);
        update(arg, step, &mut maxsim, &mut best);
    }

    let mut sets = vec![Vec::new(); k];
    for (j, &b) in best.iter().enumerate() {
        sets[b].push(j);
    }
    let mut centroids = Matrix::zeros(v.rows(), k);
    for (slot, &idx) in centroid_indices.iter().enumerate() {
        let col = centroids.column_mut(slot);
        col.copy_from_slice(v.column(idx));
        for x in col.iter_mut() {
            *x /= norms[idx];
        }
    }
    Ok(Partition { sets, assignments: best, centroids, centroid_indices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, GeneratorSpec};

    fn cone_spec(f: usize, n: usize, k: usize, alpha: f64, beta: f64, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            f,
            n,
            k,
            alphas: vec![alpha; k],
            beta: Some(beta),
            lambdas: vec![1.0; k],
            mixing: None,
            project: false,
            seed,
            delta: 0.0,
        }
    }

    /// True iff the partition equals the labeling up to renaming clusters.
    fn matches_labels(p: &Partition, labels: &[usize]) -> bool {
        let k = p.k();
        let mut map = vec![usize::MAX; k];
        let mut used = vec![false; k + labels.iter().max().map_or(0, |&m| m + 1)];
        for (j, &c) in p.assignments().iter().enumerate() {
            let l = labels[j];
            if map[c] == usize::MAX {
                if used[l] {
                    return false;
                }
                map[c] = l;
                used[l] = true;
            } else if map[c] != l {
                return false;
            }
        }
        true
    }

    #[test]
    fn two_exact_directions() {
        let v = Matrix::from_row_major(2, 3, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let p = greedy_cluster(&v, 2).unwrap();
        assert_eq!(p.set(0), &[0, 1]);
        assert_eq!(p.set(1), &[2]);
    }

    #[test]
    fn single_cluster_collects_everything() {
        let v = Matrix::from_row_major(2, 4, &[1.0, 2.0, 1.0, 3.0, 0.5, 0.1, 2.0, 0.3]).unwrap();
        let p = greedy_cluster(&v, 1).unwrap();
        assert_eq!(p.set(0).len(), 4);
    }

    #[test]
    fn rejects_zero_columns_and_oversized_k() {
        let v = Matrix::from_row_major(2, 2, &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(greedy_cluster(&v, 2), Err(Error::ZeroColumn(1))));
        let v = Matrix::from_row_major(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(greedy_cluster(&v, 3), Err(Error::KExceedsN { k: 3, n: 2 })));
    }

    #[test]
    fn recovers_cone_partition_across_seeds() {
        // Separation margin 0.45 - 4*0.1 = 0.05, so recovery must be exact.
        for seed in 0..100 {
            let spec = cone_spec(50, 2000, 5, 0.1, 0.45, seed);
            let ds = generate(&spec.to_config().unwrap()).unwrap();
            let p = greedy_cluster(&ds.matrix, 5).unwrap();
            assert!(matches_labels(&p, &ds.labels), "seed {seed} misclustered");
        }
    }

    #[test]
    fn scale_invariance_of_partition() {
        let spec = cone_spec(20, 300, 3, 0.15, 0.8, 9);
        let ds = generate(&spec.to_config().unwrap()).unwrap();
        let p1 = greedy_cluster(&ds.matrix, 3).unwrap();
        let mut scaled = ds.matrix.clone();
        for j in 0..scaled.cols() {
            let c = 0.1 + (j % 7) as f64;
            for x in scaled.column_mut(j) {
                *x *= c;
            }
        }
        let p2 = greedy_cluster(&scaled, 3).unwrap();
        assert_eq!(p1.assignments(), p2.assignments());
    }

    #[test]
    fn column_permutation_permutes_partition() {
        let spec = cone_spec(24, 400, 4, 0.1, 0.7, 21);
        let ds = generate(&spec.to_config().unwrap()).unwrap();
        let p1 = greedy_cluster(&ds.matrix, 4).unwrap();
        let n = ds.matrix.cols();
        let perm: Vec<usize> = (0..n).map(|j| (j * 97 + 13) % n).collect();
        let permuted = ds.matrix.select_columns(&perm);
        let p2 = greedy_cluster(&permuted, 4).unwrap();
        // Same grouping: columns co-clustered before are co-clustered after.
        for a in 0..n {
            for b in (a + 1)..n.min(a + 40) {
                let before = p1.assignments()[perm[a]] == p1.assignments()[perm[b]];
                let after = p2.assignments()[a] == p2.assignments()[b];
                assert_eq!(before, after);
            }
        }
    }

    #[test]
    fn seeded_start_also_recovers_cone_partition() {
        let spec = cone_spec(40, 900, 4, 0.1, 0.6, 3);
        let ds = generate(&spec.to_config().unwrap()).unwrap();
        for seed in 0..10 {
            let p = greedy_cluster_seeded(&ds.matrix, 4, seed).unwrap();
            assert!(matches_labels(&p, &ds.labels));
        }
    }

    #[test]
    fn unit_point_distances_respect_separation_bounds() {
        // Within a cone, unit points are at most sqrt(2(1 - cos 2a)) apart;
        // across cones at least sqrt(2(1 - cos(beta - a_i - a_j))) apart.
        let alpha = 0.12;
        let beta = 0.75;
        let spec = cone_spec(16, 400, 3, alpha, beta, 5);
        let ds = generate(&spec.to_config().unwrap()).unwrap();
        let (unit, _) = ds.matrix.normalize_columns().unwrap();
        let within_max = (2.0 * (1.0 - (2.0 * alpha).cos())).sqrt();
        let across_min = (2.0 * (1.0 - (beta - 2.0 * alpha).cos())).sqrt();
        for a in (0..400).step_by(7) {
            for b in (a + 1..400).step_by(11) {
                let d: f64 = unit
                    .column(a)
                    .iter()
                    .zip(unit.column(b))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                if ds.labels[a] == ds.labels[b] {
                    assert!(d <= within_max + 1e-9);
                } else {
                    assert!(d >= across_min - 1e-9);
                }
            }
        }
    }
}
