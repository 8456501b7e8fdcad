//! Evaluation: relative Frobenius error and clustering agreement.
//!
//! The clustering scores treat labelings as partitions, so they are
//! invariant under renaming clusters on either side. NMI normalizes mutual
//! information by `sqrt(H(a) * H(b))`; Dice counts co-clustered pairs;
//! purity maps each predicted cluster to its best true class.

use crate::cluster::Partition;
use crate::error::{Error, Result};
use crate::matrix::{residual_fro_sq, Matrix};

/// `||V - WH||_F / ||V||_F`.
pub fn relative_error(v: &Matrix, w: &Matrix, h: &Matrix) -> Result<f64> {
    let denom_sq = v.frobenius_norm_sq();
    if denom_sq == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok((residual_fro_sq(v, w, h)? / denom_sq).sqrt())
}

/// Contingency table between two labelings, with marginals.
struct Contingency {
    counts: Vec<Vec<usize>>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    n: usize,
}

fn contingency(a: &[usize], b: &[usize]) -> Contingency {
    assert_eq!(a.len(), b.len(), "labelings must cover the same points");
    assert!(!a.is_empty(), "empty labelings have no agreement score");
    let ra = relabel(a);
    let rb = relabel(b);
    let ka = ra.iter().max().unwrap() + 1;
    let kb = rb.iter().max().unwrap() + 1;
    let mut counts = vec![vec![0usize; kb]; ka];
    for (&x, &y) in ra.iter().zip(&rb) {
        counts[x][y] += 1;
    }
    let rows = counts.iter().map(|r| r.iter().sum()).collect();
    let mut cols = vec![0usize; kb];
    for r in &counts {
        for (c, v) in cols.iter_mut().zip(r) {
            *c += v;
        }
    }
    Contingency { counts, rows, cols, n: a.len() }
}

/// Maps arbitrary label values onto 0..k in order of first appearance.
fn relabel(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

fn entropy(marginal: &[usize], n: usize) -> f64 {
    marginal
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information in [0, 1]. Zero-entropy edge cases score 0
/// unless both sides are the same single cluster, which scores 1.
pub fn nmi(a: &[usize], b: &[usize]) -> f64 {
    let t = contingency(a, b);
    let ha = entropy(&t.rows, t.n);
    let hb = entropy(&t.cols, t.n);
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    let n = t.n as f64;
    let mut mi = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let p = c as f64 / n;
                let pa = t.rows[i] as f64 / n;
                let pb = t.cols[j] as f64 / n;
                mi += p * (p / (pa * pb)).ln();
            }
        }
    }
    (mi / (ha * hb).sqrt()).clamp(0.0, 1.0)
}

fn pairs(c: usize) -> u64 {
    (c as u64) * (c.saturating_sub(1) as u64) / 2
}

/// Dice coefficient over co-clustered pairs: `2*SS / (2*SS + SD + DS)`,
/// where SS counts pairs grouped together in both labelings and SD/DS pairs
/// grouped in exactly one. Two all-singleton labelings are identical and
/// score 1.
pub fn dice(a: &[usize], b: &[usize]) -> f64 {
    let t = contingency(a, b);
    let ss: u64 = t.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let same_a: u64 = t.rows.iter().map(|&c| pairs(c)).sum();
    let same_b: u64 = t.cols.iter().map(|&c| pairs(c)).sum();
    if same_a + same_b == 0 {
        return 1.0;
    }
    2.0 * ss as f64 / (same_a + same_b) as f64
}

/// Purity: each predicted cluster votes for its dominant true class.
pub fn purity(pred: &[usize], truth: &[usize]) -> f64 {
    let t = contingency(pred, truth);
    let hits: usize = t.counts.iter().map(|row| row.iter().max().copied().unwrap_or(0)).sum();
    hits as f64 / t.n as f64
}

/// Exact recovery: true iff the nonempty predicted sets equal the true
/// label classes under some bijection.
pub fn partition_match(pred: &Partition, true_labels: &[usize]) -> bool {
    let assign = pred.assignments();
    if assign.len() != true_labels.len() {
        return false;
    }
    let k = pred.k();
    let mut to_class = vec![usize::MAX; k];
    let mut claimed = std::collections::HashSet::new();
    for (&c, &l) in assign.iter().zip(true_labels) {
        if to_class[c] == usize::MAX {
            if !claimed.insert(l) {
                return false; // two predicted sets map onto one class
            }
            to_class[c] = l;
        } else if to_class[c] != l {
            return false;
        }
    }
    true
}
