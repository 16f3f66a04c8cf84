//! Binary undirected snapshots, Bernoulli sampling and degrees.

use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::labels::CommunityLabels;
use crate::matrix::SymmetricMatrix;
use crate::model::ConnectivityModel;
use crate::seed;

/// Symmetric binary adjacency with zero diagonal, stored as a sorted list of
/// `(i, j)` pairs with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencySnapshot {
    n: usize,
    edges: Vec<(u32, u32)>,
}

impl AdjacencySnapshot {
    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    /// Build from arbitrary pairs; each pair is normalised to `i < j` and
    /// duplicates are merged. Self-loops are rejected.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut edges = Vec::new();
        for (a, b) in pairs {
            if a >= n || b >= n {
                return Err(invalid(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(invalid(format!("self-loop at node {a}")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            edges.push((i as u32, j as u32));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { n, edges })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i as u32, j as u32))).collect();
        Self { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(i, j)| (i as usize, j as usize))
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&(i as u32, j as u32)).is_ok()
    }

    pub fn to_matrix(&self) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::zeros(self.n);
        for (i, j) in self.edges() {
            m.set(i, j, 1.0);
        }
        m
    }

    /// Plain-text edge list: header `n=<n>`, then one `i j` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n={}", self.n)?;
        for (i, j) in self.edges() {
            writeln!(w, "{i} {j}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let n =
            match lines.next() {
                Some((_, header)) => {
                    let header = header?;
                    header.trim().strip_prefix("n=").and_then(|v| v.parse::<usize>().ok()).ok_or_else(|| {
                        Error::Parse { line: 1, msg: format!("expected header n=<n>, got {header:?}") }
                    })?
                }
                None => return Err(Error::Parse { line: 1, msg: "empty edge list".into() }),
            };
        let mut pairs = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = || Error::Parse { line: idx + 1, msg: format!("expected `i j`, got {line:?}") };
            let mut parts = line.split_whitespace();
            let i: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
            let j: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
            if parts.next().is_some() || i >= j {
                return Err(parse_err());
            }
            pairs.push((i, j));
        }
        Self::from_edges(n, pairs)
    }
}

/// Draw every pair `i < j` independently with probability `prob(i, j)`.
///
/// When all probabilities are small, candidate pairs are visited with
/// geometric skips at rate `p_max` and kept with probability `p_ij / p_max`,
/// which samples the same distribution in time proportional to the expected
/// number of candidates.
fn sample_pairs(n: usize, p_max: f64, rng_seed: u64, prob: impl Fn(usize, usize) -> f64) -> AdjacencySnapshot {
    let mut rng = seed::rng(rng_seed);
    let mut edges = Vec::new();
    if n < 2 || p_max <= 0.0 {
        return AdjacencySnapshot { n, edges };
    }
    if p_max > 0.25 {
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < prob(i, j) {
                    edges.push((i as u32, j as u32));
                }
            }
        }
        return AdjacencySnapshot { n, edges };
    }

    let total = n * (n - 1) / 2;
    let log_q = (-p_max).ln_1p();
    let mut pos = 0usize;
    let (mut row, mut row_start) = (0usize, 0usize);
    loop {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / log_q).floor();
        if !skip.is_finite() || skip >= (total - pos) as f64 {
            break;
        }
        pos += skip as usize;
        while pos >= row_start + (n - 1 - row) {
            row_start += n - 1 - row;
            row += 1;
        }
        let col = row + 1 + (pos - row_start);
        let keep: f64 = rng.random();
        if keep * p_max < prob(row, col) {
            edges.push((row as u32, col as u32));
        }
        pos += 1;
        if pos >= total {
            break;
        }
    }
    AdjacencySnapshot { n, edges }
}

/// Sample a snapshot with `A_ij ~ Bernoulli(P_ij)` for `i < j`; the diagonal
/// of `P` is ignored.
pub fn sample_adjacency(p: &SymmetricMatrix, rng_seed: u64) -> Result<AdjacencySnapshot> {
    let n = p.dim();
    let mut p_max: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let v = p.get(i, j);
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("probability {v} at ({i}, {j}) outside [0, 1]")));
            }
            if j > i {
                p_max = p_max.max(v);
            }
        }
    }
    Ok(sample_pairs(n, p_max, rng_seed, |i, j| p.get(i, j)))
}

/// Sample directly from memberships without materialising `P`.
///
/// Produces exactly the snapshot `sample_adjacency` would return on
/// `build_probability_matrix(labels, model)` with the same seed.
pub fn sample_sbm(labels: &CommunityLabels, model: &ConnectivityModel, rng_seed: u64) -> Result<AdjacencySnapshot> {
    if labels.k() > model.k() {
        return Err(invalid(format!("labels use {} communities but the model has {}", labels.k(), model.k())));
    }
    let sizes = labels.sizes();
    let mut p_max: f64 = 0.0;
    for a in 0..sizes.len() {
        for b in a..sizes.len() {
            let present = if a == b { sizes[a] >= 2 } else { sizes[a] > 0 && sizes[b] > 0 };
            if present {
                p_max = p_max.max(model.prob(a, b));
            }
        }
    }
    let l = labels.as_slice();
    Ok(sample_pairs(labels.len(), p_max, rng_seed, |i, j| model.prob(l[i], l[j])))
}

/// Row sums `d_i = Σ_j M_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector(pub Vec<f64>);

impl DegreeVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Anything whose row sums are meaningful degrees.
pub trait Degrees {
    fn degrees(&self) -> DegreeVector;
}

impl Degrees for SymmetricMatrix {
    fn degrees(&self) -> DegreeVector {
        DegreeVector(self.row_sums())
    }
}

impl Degrees for AdjacencySnapshot {
    fn degrees(&self) -> DegreeVector {
        let mut d = vec![0.0; self.n];
        for (i, j) in self.edges() {
            d[i] += 1.0;
            d[j] += 1.0;
        }
        DegreeVector(d)
    }
}

pub fn degrees<M: Degrees + ?Sized>(m: &M) -> DegreeVector {
    m.degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_probability_matrix;

    #[test]
    fn zero_probability_gives_empty_graph() {
        let a = sample_adjacency(&SymmetricMatrix::zeros(20), 1).unwrap();
        assert_eq!(a.edge_count(), 0);
    }

    #[test]
    fn unit_probability_gives_complete_graph() {
        let p = SymmetricMatrix::filled(12, 1.0);
        let a = sample_adjacency(&p, 1).unwrap();
        assert_eq!(a, AdjacencySnapshot::complete(12));
    }

    #[test]
    fn out_of_range_probability_rejected() {
        let mut p = SymmetricMatrix::zeros(3);
        p.set(0, 2, 1.5);
        assert!(sample_adjacency(&p, 0).is_err());
        p.set(0, 2, -0.1);
        assert!(sample_adjacency(&p, 0).is_err());
    }

    #[test]
    fn edge_count_matches_binomial_both_paths() {
        // Binomial(N, p) oracle: mean N·p, sd sqrt(N·p·(1−p)).
        let n = 200;
        let pairs = (n * (n - 1) / 2) as f64;
        for p in [0.1, 0.4] {
            let m = SymmetricMatrix::filled(n, p);
            for s in 0..5 {
                let a = sample_adjacency(&m, 100 + s).unwrap();
                let mean = pairs * p;
                let sd = (pairs * p * (1.0 - p)).sqrt();
                assert!((a.edge_count() as f64 - mean).abs() <= 4.0 * sd, "p={p} count={}", a.edge_count());
            }
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = SymmetricMatrix::filled(50, 0.05);
        assert_eq!(sample_adjacency(&p, 9).unwrap(), sample_adjacency(&p, 9).unwrap());
        assert_ne!(sample_adjacency(&p, 9).unwrap(), sample_adjacency(&p, 10).unwrap());
    }

    #[test]
    fn sbm_sampler_matches_matrix_sampler() {
        let labels = CommunityLabels::new((0..60).map(|i| i % 3).collect(), 3).unwrap();
        for (alpha, tau) in [(0.1, 0.3), (0.9, 0.2), (0.02, 0.0)] {
            let model = ConnectivityModel::planted(3, alpha, tau).unwrap();
            let p = build_probability_matrix(&labels, &model).unwrap();
            for s in 0..3 {
                assert_eq!(sample_sbm(&labels, &model, s).unwrap(), sample_adjacency(&p, s).unwrap());
            }
        }
    }

    #[test]
    fn degrees_of_known_graphs() {
        assert!(degrees(&SymmetricMatrix::zeros(5)).as_slice().iter().all(|&d| d == 0.0));
        assert_eq!(degrees(&AdjacencySnapshot::complete(4)).0, vec![3.0; 4]);
        let a = AdjacencySnapshot::from_edges(4, [(0, 1), (2, 1), (3, 1)]).unwrap();
        assert_eq!(degrees(&a).0, vec![1.0, 3.0, 1.0, 1.0]);
        assert_eq!(degrees(&a.to_matrix()), degrees(&a));
    }

    #[test]
    fn edge_list_round_trip_and_errors() {
        let a = AdjacencySnapshot::from_edges(6, [(5, 0), (1, 2), (3, 4)]).unwrap();
        let mut buf = Vec::new();
        a.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "n=6\n0 5\n1 2\n3 4\n");
        assert_eq!(AdjacencySnapshot::read_edge_list(&buf[..]).unwrap(), a);
        assert!(AdjacencySnapshot::read_edge_list(&b"6\n0 1\n"[..]).is_err());
        assert!(AdjacencySnapshot::read_edge_list(&b"n=3\n2 1\n"[..]).is_err());
        assert!(AdjacencySnapshot::read_edge_list(&b"n=3\n0 3\n"[..]).is_err());
        assert!(AdjacencySnapshot::from_edges(3, [(1, 1)]).is_err());
    }
}
