//! k-means with squared-distance-weighted seeding, Lloyd iterations and
//! restarts.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::labels::CommunityLabels;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once the largest squared centroid displacement drops below this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self { restarts: 20, max_iter: 300, tol: 1e-9, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: CommunityLabels,
    /// Row-major `k × dim`.
    pub centroids: Vec<f64>,
    /// `Σ_i ‖x_i − c_{label_i}‖²` for the returned labels and centroids.
    pub cost: f64,
    pub restarts_used: usize,
    /// Some cluster of the returned solution is empty.
    pub degenerate: bool,
    /// Empty clusters re-seeded at the farthest point during the best run.
    pub reseeded: usize,
}

/// One Lloyd run from fixed initial centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub labels: Vec<usize>,
    pub centroids: Vec<f64>,
    pub cost: f64,
    /// Cost after the assignment step of every iteration.
    pub trace: Vec<f64>,
    pub reseeded: usize,
    pub iterations: usize,
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid; ties go to the lowest index.
#[inline]
fn nearest(x: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let d = dist2(x, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn cost_of(points: &[f64], dim: usize, labels: &[usize], centroids: &[f64]) -> f64 {
    points.chunks_exact(dim).zip(labels).map(|(x, &l)| dist2(x, &centroids[l * dim..(l + 1) * dim])).sum()
}

/// Squared-distance-weighted seeding: the first centre uniformly, each next
/// one with probability proportional to its squared distance to the chosen
/// centres.
pub fn seed_centroids(points: &[f64], dim: usize, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let n = points.len() / dim;
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(&points[first * dim..(first + 1) * dim]);
    let mut d2: Vec<f64> = points.chunks_exact(dim).map(|x| dist2(x, &centroids[..dim])).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = &points[pick * dim..(pick + 1) * dim];
        centroids.extend_from_slice(c);
        for (x, d) in points.chunks_exact(dim).zip(d2.iter_mut()) {
            *d = d.min(dist2(x, c));
        }
    }
    centroids
}

/// Lloyd iterations. An empty cluster gets its centroid moved to the point
/// farthest from its current centroid.
pub fn lloyd(points: &[f64], dim: usize, mut centroids: Vec<f64>, max_iter: usize, tol: f64) -> LloydRun {
    let n = points.len() / dim;
    let k = centroids.len() / dim;
    let mut labels = vec![0usize; n];
    let mut trace = Vec::new();
    let mut reseeded = 0;
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let mut cost = 0.0;
        let mut far = (0usize, -1.0f64);
        for (i, x) in points.chunks_exact(dim).enumerate() {
            let (c, d) = nearest(x, &centroids, dim);
            labels[i] = c;
            cost += d;
            if d > far.1 {
                far = (i, d);
            }
        }
        trace.push(cost);

        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (x, &l) in points.chunks_exact(dim).zip(&labels) {
            counts[l] += 1;
            sums[l * dim..(l + 1) * dim].iter_mut().zip(x).for_each(|(s, v)| *s += v);
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let new: Vec<f64> = if counts[c] > 0 {
                sums[c * dim..(c + 1) * dim].iter().map(|s| s / counts[c] as f64).collect()
            } else {
                reseeded += 1;
                points[far.0 * dim..(far.0 + 1) * dim].to_vec()
            };
            shift = shift.max(dist2(&new, &centroids[c * dim..(c + 1) * dim]));
            centroids[c * dim..(c + 1) * dim].copy_from_slice(&new);
        }
        if shift < tol {
            break;
        }
    }
    let cost = cost_of(points, dim, &labels, &centroids);
    LloydRun { labels, centroids, cost, trace, reseeded, iterations }
}

/// Best of `restarts` seeded Lloyd runs on the rows of a row-major `n × dim`
/// point matrix.
pub fn kmeans(points: &[f64], dim: usize, k: usize, opts: &KMeansOptions) -> Result<KMeansResult> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(invalid(format!("{} values do not form rows of width {dim}", points.len())));
    }
    let n = points.len() / dim;
    if k == 0 || k > n {
        return Err(invalid(format!("cannot form {k} clusters from {n} points")));
    }
    let mut best: Option<LloydRun> = None;
    let restarts = opts.restarts.max(1);
    for r in 0..restarts {
        let mut rng = seed::rng(seed::derive(opts.seed, &[r as u64]));
        let init = seed_centroids(points, dim, k, &mut rng);
        let run = lloyd(points, dim, init, opts.max_iter, opts.tol);
        if best.as_ref().is_none_or(|b| run.cost < b.cost) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let mut counts = vec![0usize; k];
    best.labels.iter().for_each(|&l| counts[l] += 1);
    Ok(KMeansResult {
        labels: CommunityLabels::new(best.labels, k)?,
        centroids: best.centroids,
        cost: best.cost,
        restarts_used: restarts,
        degenerate: counts.contains(&0),
        reseeded: best.reseeded,
    })
}
