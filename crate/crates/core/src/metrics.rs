//! Agreement between an estimated and a true partition.

use crate::error::{invalid, Error, Result};
use crate::labels::CommunityLabels;

/// Minimum-cost perfect matching on a square cost matrix (row-major) by the
/// shortest augmenting path method with potentials. Returns the column
/// assigned to each row.
pub fn assignment(cost: &[i64], size: usize) -> Vec<usize> {
    assert_eq!(cost.len(), size * size);
    if size == 0 {
        return Vec::new();
    }
    const INF: i64 = i64::MAX / 4;
    // 1-based internally; index 0 is the virtual root.
    let mut u = vec![0i64; size + 1];
    let mut v = vec![0i64; size + 1];
    let mut owner = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for row in 1..=size {
        owner[0] = row;
        let mut col0 = 0usize;
        let mut minv = vec![INF; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = INF;
            let mut col1 = 0usize;
            for col in 1..=size {
                if !used[col] {
                    let cur = cost[(r0 - 1) * size + (col - 1)] - u[r0] - v[col];
                    if cur < minv[col] {
                        minv[col] = cur;
                        way[col] = col0;
                    }
                    if minv[col] < delta {
                        delta = minv[col];
                        col1 = col;
                    }
                }
            }
            for col in 0..=size {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0usize; size];
    for col in 1..=size {
        result[owner[col] - 1] = col - 1;
    }
    result
}

/// `counts[a * k + b] = #{i : pred_i = a, truth_i = b}`.
pub fn confusion_matrix(pred: &CommunityLabels, truth: &CommunityLabels) -> Result<Vec<usize>> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: pred.len() });
    }
    if pred.k() != truth.k() {
        return Err(invalid(format!("predicted K = {} differs from true K = {}", pred.k(), truth.k())));
    }
    let k = truth.k();
    let mut counts = vec![0usize; k * k];
    for (&a, &b) in pred.as_slice().iter().zip(truth.as_slice()) {
        counts[a * k + b] += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `min_Q (1/n)·‖Θ̂Q − Θ‖₀`, in `[0, 2]`.
    pub e_value: f64,
    pub misclassified_fraction: f64,
    pub misclassified: usize,
    /// `best_permutation[a]` is the true label matched to predicted label `a`.
    pub best_permutation: Vec<usize>,
}

/// Discrepancy between partitions up to relabelling, with the relabelling
/// found exactly as a maximum-weight matching on the confusion matrix.
///
/// Each misclassified node contributes two nonzero entries to `Θ̂Q − Θ` in
/// one-hot form, hence `e_value = 2 · misclassified / n`.
pub fn misclassification_error(pred: &CommunityLabels, truth: &CommunityLabels) -> Result<ErrorReport> {
    let counts = confusion_matrix(pred, truth)?;
    let k = truth.k();
    let n = truth.len();
    let cost: Vec<i64> = counts.iter().map(|&c| -(c as i64)).collect();
    let perm = assignment(&cost, k);
    let matched: usize = perm.iter().enumerate().map(|(a, &b)| counts[a * k + b]).sum();
    let misclassified = n - matched;
    let frac = if n == 0 { 0.0 } else { misclassified as f64 / n as f64 };
    Ok(ErrorReport { e_value: 2.0 * frac, misclassified_fraction: frac, misclassified, best_permutation: perm })
}

fn choose2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index from the pair-counting contingency table. The two
/// partitions may use different numbers of labels.
pub fn adjusted_rand_index(pred: &CommunityLabels, truth: &CommunityLabels) -> Result<f64> {
    let n = truth.len();
    if pred.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: pred.len() });
    }
    if n < 2 {
        return Err(invalid("adjusted Rand index needs at least two nodes"));
    }
    let (ka, kb) = (pred.k(), truth.k());
    let mut table = vec![0usize; ka * kb];
    let mut rows = vec![0usize; ka];
    let mut cols = vec![0usize; kb];
    for (&a, &b) in pred.as_slice().iter().zip(truth.as_slice()) {
        table[a * kb + b] += 1;
        rows[a] += 1;
        cols[b] += 1;
    }
    let index: f64 = table.iter().map(|&c| choose2(c)).sum();
    let sum_rows: f64 = rows.iter().map(|&c| choose2(c)).sum();
    let sum_cols: f64 = cols.iter().map(|&c| choose2(c)).sum();
    let expected = sum_rows * sum_cols / choose2(n);
    let max_index = 0.5 * (sum_rows + sum_cols);
    let denom = max_index - expected;
    if denom == 0.0 {
        // Only reachable when both partitions are a single block or both are
        // all singletons, i.e. identical partitions.
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[usize], k: usize) -> CommunityLabels {
        CommunityLabels::new(v.to_vec(), k).unwrap()
    }

    #[test]
    fn identical_and_swapped() {
        let t = labels(&[0, 0, 1, 1, 1], 2);
        assert_eq!(misclassification_error(&t, &t).unwrap().e_value, 0.0);
        let s = labels(&[1, 1, 0, 0, 0], 2);
        let r = misclassification_error(&s, &t).unwrap();
        assert_eq!(r.e_value, 0.0);
        assert_eq!(r.best_permutation, vec![1, 0]);
    }

    #[test]
    fn one_node_wrong() {
        let r = misclassification_error(&labels(&[0, 1, 1, 1], 2), &labels(&[0, 0, 1, 1], 2)).unwrap();
        assert_eq!(r.best_permutation, vec![0, 1]);
        assert_eq!(r.misclassified, 1);
        assert_eq!(r.e_value, 0.5);
        assert_eq!(r.misclassified_fraction, 0.25);
    }

    #[test]
    fn unused_predicted_labels() {
        let r = misclassification_error(&labels(&[0, 0, 0, 0], 2), &labels(&[0, 0, 1, 1], 2)).unwrap();
        assert_eq!(r.misclassified, 2);
        assert_eq!(r.e_value, 1.0);
    }

    #[test]
    fn shape_errors() {
        assert!(misclassification_error(&labels(&[0, 1], 2), &labels(&[0, 1, 1], 2)).is_err());
        assert!(misclassification_error(&labels(&[0, 1], 3), &labels(&[0, 1], 2)).is_err());
        assert!(adjusted_rand_index(&labels(&[0], 1), &labels(&[0], 1)).is_err());
    }

    #[test]
    fn assignment_small_cases() {
        assert_eq!(assignment(&[], 0), Vec::<usize>::new());
        assert_eq!(assignment(&[4, 1, 3, 2, 0, 5, 3, 2, 2], 3), vec![1, 0, 2]);
    }

    #[test]
    fn ari_known_values() {
        let a = labels(&[0, 0, 1, 1], 2);
        assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        let b = labels(&[0, 1, 0, 1], 2);
        assert!((adjusted_rand_index(&a, &b).unwrap() + 0.5).abs() < 1e-15);
        let one = labels(&[0, 0, 0], 1);
        assert_eq!(adjusted_rand_index(&one, &one).unwrap(), 1.0);
        let split = labels(&[0, 1, 1], 2);
        assert_eq!(adjusted_rand_index(&one, &split).unwrap(), 0.0);
    }
}
