//! Normalized Laplacian `D^{-1/2} M D^{-1/2}`.
//!
//! This is the unshifted form; `I − D^{-1/2} M D^{-1/2}` has the same
//! eigenvectors, so only this one is exposed.

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// What to do with rows whose sum is not strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroDegreePolicy {
    /// Fail with [`Error::ZeroDegree`].
    #[default]
    Error,
    /// Zero the row and column and report the node as isolated.
    ZeroRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedLaplacian {
    pub matrix: SymmetricMatrix,
    /// Nodes whose row and column were zeroed.
    pub isolated: Vec<usize>,
}

pub fn normalized_laplacian(m: &SymmetricMatrix, policy: ZeroDegreePolicy) -> Result<NormalizedLaplacian> {
    let n = m.dim();
    let degrees = m.row_sums();
    let mut isolated = Vec::new();
    let mut inv_sqrt = vec![0.0; n];
    for (i, &d) in degrees.iter().enumerate() {
        if d > 0.0 {
            inv_sqrt[i] = 1.0 / d.sqrt();
        } else {
            match policy {
                ZeroDegreePolicy::Error => return Err(Error::ZeroDegree { node: i, degree: d }),
                ZeroDegreePolicy::ZeroRow => isolated.push(i),
            }
        }
    }
    let matrix = SymmetricMatrix::from_fn(n, |i, j| m.get(i, j) * inv_sqrt[i] * inv_sqrt[j]);
    Ok(NormalizedLaplacian { matrix, isolated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AdjacencySnapshot;

    #[test]
    fn complete_graph_on_three_nodes() {
        let a = AdjacencySnapshot::complete(3).to_matrix();
        let l = normalized_laplacian(&a, ZeroDegreePolicy::Error).unwrap().matrix;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.0 } else { 0.5 };
                assert!((l.get(i, j) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_matrix_is_rank_one_projector() {
        let l = normalized_laplacian(&SymmetricMatrix::filled(5, 0.3), ZeroDegreePolicy::Error).unwrap().matrix;
        for v in l.as_slice() {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn single_edge() {
        let a = AdjacencySnapshot::from_edges(2, [(0, 1)]).unwrap().to_matrix();
        let l = normalized_laplacian(&a, ZeroDegreePolicy::Error).unwrap().matrix;
        assert_eq!(l.as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_degree_policies() {
        let a = AdjacencySnapshot::from_edges(4, [(0, 1), (1, 2)]).unwrap().to_matrix();
        assert!(matches!(normalized_laplacian(&a, ZeroDegreePolicy::Error), Err(Error::ZeroDegree { node: 3, .. })));
        let l = normalized_laplacian(&a, ZeroDegreePolicy::ZeroRow).unwrap();
        assert_eq!(l.isolated, vec![3]);
        assert!(l.matrix.as_slice().iter().all(|v| v.is_finite()));
        assert!(l.matrix.row(3).iter().all(|&v| v == 0.0));
        assert!((l.matrix.get(0, 1) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn scale_invariance() {
        let m = SymmetricMatrix::from_fn(6, |i, j| 0.1 + ((i * 7 + j * 3) % 5) as f64 / 10.0);
        let l1 = normalized_laplacian(&m, ZeroDegreePolicy::Error).unwrap().matrix;
        let l2 = normalized_laplacian(&m.scaled(37.5), ZeroDegreePolicy::Error).unwrap().matrix;
        for (a, b) in l1.as_slice().iter().zip(l2.as_slice()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
