//! Connectivity of the block model and the size quantities derived from it.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Result};
use crate::labels::CommunityLabels;
use crate::matrix::SymmetricMatrix;

/// Shape of the `K × K` kernel `B₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// Row-major symmetric `K × K` matrix with entries in `[0, 1]`.
    Full(Vec<f64>),
    /// `(1 − τ)·I + τ·11ᵀ`: ones on the diagonal, `τ` elsewhere.
    PlantedPartition { tau: f64 },
}

/// Connectivity `B = α·B₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityModel {
    k: usize,
    alpha: f64,
    kernel: Kernel,
}

impl ConnectivityModel {
    pub fn planted(k: usize, alpha: f64, tau: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return Err(invalid(format!("tau = {tau} must lie in [0, 1)")));
        }
        Self::checked(k, alpha, Kernel::PlantedPartition { tau })
    }

    pub fn full(k: usize, alpha: f64, b0: Vec<f64>) -> Result<Self> {
        if b0.len() != k * k {
            return Err(invalid(format!("kernel has {} entries, expected {}", b0.len(), k * k)));
        }
        for a in 0..k {
            for b in 0..k {
                let v = b0[a * k + b];
                if !(0.0..=1.0).contains(&v) {
                    return Err(invalid(format!("kernel entry ({a}, {b}) = {v} outside [0, 1]")));
                }
                if v != b0[b * k + a] {
                    return Err(invalid(format!("kernel is not symmetric at ({a}, {b})")));
                }
            }
        }
        Self::checked(k, alpha, Kernel::Full(b0))
    }

    fn checked(k: usize, alpha: f64, kernel: Kernel) -> Result<Self> {
        if k == 0 {
            return Err(invalid("number of communities must be at least 1"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid(format!("alpha = {alpha} must lie in [0, 1]")));
        }
        let model = Self { k, alpha, kernel };
        let max = (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).map(|(a, b)| model.b0(a, b)).fold(0.0, f64::max);
        if alpha * max > 1.0 {
            return Err(invalid("alpha times the largest kernel entry exceeds 1"));
        }
        Ok(model)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::checked(self.k, alpha, self.kernel.clone())
    }

    #[inline]
    pub fn b0(&self, a: usize, b: usize) -> f64 {
        match &self.kernel {
            Kernel::Full(m) => m[a * self.k + b],
            Kernel::PlantedPartition { tau } => {
                if a == b {
                    1.0
                } else {
                    *tau
                }
            }
        }
    }

    /// Edge probability between members of communities `a` and `b`.
    #[inline]
    pub fn prob(&self, a: usize, b: usize) -> f64 {
        self.alpha * self.b0(a, b)
    }

    pub fn kernel_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.k, self.k, |a, b| self.b0(a, b))
    }

    /// Smallest eigenvalue `γ` of `B₀`.
    pub fn gamma(&self) -> f64 {
        match &self.kernel {
            Kernel::PlantedPartition { tau } if self.k > 1 => 1.0 - tau,
            Kernel::PlantedPartition { .. } => 1.0,
            Kernel::Full(_) => SymmetricEigen::new(self.kernel_matrix()).eigenvalues.min(),
        }
    }
}

/// `P = Θ B Θᵀ`, diagonal included.
pub fn build_probability_matrix(labels: &CommunityLabels, model: &ConnectivityModel) -> Result<SymmetricMatrix> {
    if labels.k() > model.k() {
        return Err(invalid(format!("labels use {} communities but the model has {}", labels.k(), model.k())));
    }
    let l = labels.as_slice();
    Ok(SymmetricMatrix::from_fn(labels.len(), |i, j| model.prob(l[i], l[j])))
}

/// Community-size bounds and the effective sizes `n̄_min`, `n̄_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeProfile {
    pub n: usize,
    /// Attainable lower bound on a community size.
    pub n_min: usize,
    /// Attainable upper bound on a community size.
    pub n_max: usize,
    /// Largest attainable size of the second-largest community.
    pub n_prime_max: usize,
    pub nbar_min: f64,
    pub nbar_max: f64,
    pub mu_b: f64,
    pub gamma: f64,
}

/// Extremal expected-degree scales over admissible community-size vectors.
///
/// The size polytope `{n_min ≤ n_ℓ ≤ n_max, Σ n_ℓ = n}` is first tightened to
/// the bounds individual coordinates can actually reach. The planted-partition
/// kernel then has the closed form `(1 − τ)·n_max + τ·n`; a general kernel is
/// optimised row by row, by vertex enumeration for `K ≤ 8` and by the greedy
/// fill otherwise.
pub fn effective_sizes(model: &ConnectivityModel, n: usize, n_min: usize, n_max: usize) -> Result<SizeProfile> {
    let k = model.k();
    if n_min > n_max || k * n_min > n || k * n_max < n {
        return Err(invalid(format!(
            "infeasible size bounds: {k} communities of size in [{n_min}, {n_max}] cannot hold {n} nodes"
        )));
    }
    let lo = n_min.max(n.saturating_sub((k - 1) * n_max));
    let hi = n_max.min(n - (k - 1) * n_min);
    let n_prime_max = if k < 2 { 0 } else { hi.min((n - (k - 2) * lo) / 2) };

    let (nbar_min, nbar_max) = match model.kernel() {
        Kernel::PlantedPartition { tau } => {
            let tau = if k == 1 { 1.0 } else { *tau };
            ((1.0 - tau) * lo as f64 + tau * n as f64, (1.0 - tau) * hi as f64 + tau * n as f64)
        }
        Kernel::Full(_) => {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for row in 0..k {
                let coef: Vec<f64> = (0..k).map(|l| model.b0(row, l)).collect();
                let (rmin, rmax) = if k <= 8 {
                    extremes_by_vertices(&coef, n, lo, hi)
                } else {
                    (-greedy_max(&coef.iter().map(|c| -c).collect::<Vec<_>>(), n, lo, hi), greedy_max(&coef, n, lo, hi))
                };
                min = min.min(rmin);
                max = max.max(rmax);
            }
            (min, max)
        }
    };
    Ok(SizeProfile {
        n,
        n_min: lo,
        n_max: hi,
        n_prime_max,
        nbar_min,
        nbar_max,
        mu_b: nbar_max / nbar_min,
        gamma: model.gamma(),
    })
}

/// Maximum of `Σ c_ℓ n_ℓ` over the box-with-sum polytope: start every
/// coordinate at `lo` and pour the remaining mass into the largest
/// coefficients first.
pub(crate) fn greedy_max(coef: &[f64], n: usize, lo: usize, hi: usize) -> f64 {
    let mut order: Vec<usize> = (0..coef.len()).collect();
    order.sort_by(|&a, &b| coef[b].total_cmp(&coef[a]));
    let mut remaining = n - lo * coef.len();
    let mut value: f64 = coef.iter().map(|c| c * lo as f64).sum();
    for idx in order {
        let add = remaining.min(hi - lo);
        value += coef[idx] * add as f64;
        remaining -= add;
    }
    value
}

/// Min and max of `Σ c_ℓ n_ℓ` over all vertices of the polytope. A vertex has
/// every coordinate but at most one at a bound.
pub(crate) fn extremes_by_vertices(coef: &[f64], n: usize, lo: usize, hi: usize) -> (f64, f64) {
    let k = coef.len();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for free in 0..k {
        for mask in 0u32..(1 << (k - 1)) {
            let mut total = 0usize;
            let mut value = 0.0;
            let mut bit = 0;
            for (idx, c) in coef.iter().enumerate() {
                if idx == free {
                    continue;
                }
                let size = if mask >> bit & 1 == 1 { hi } else { lo };
                bit += 1;
                total += size;
                value += c * size as f64;
            }
            if total > n || n - total < lo || n - total > hi {
                continue;
            }
            value += coef[free] * (n - total) as f64;
            min = min.min(value);
            max = max.max(value);
        }
    }
    (min, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_probability_matrix() {
        let labels = CommunityLabels::new(vec![0, 0, 1, 1], 2).unwrap();
        let model = ConnectivityModel::planted(2, 0.5, 0.2).unwrap();
        let p = build_probability_matrix(&labels, &model).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i < 2) == (j < 2) { 0.5 } else { 0.1 };
                assert!((p.get(i, j) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_alpha_gives_zero_matrix() {
        let labels = CommunityLabels::new(vec![0, 1, 1, 0, 2], 3).unwrap();
        let model = ConnectivityModel::planted(3, 0.0, 0.4).unwrap();
        let p = build_probability_matrix(&labels, &model).unwrap();
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn full_kernel_probability_matrix() {
        let labels = CommunityLabels::new(vec![0, 1], 2).unwrap();
        let model = ConnectivityModel::full(2, 0.1, vec![1.0, 0.3, 0.3, 0.8]).unwrap();
        let p = build_probability_matrix(&labels, &model).unwrap();
        let expected = [[0.1, 0.03], [0.03, 0.08]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((p.get(i, j) - expected[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn labels_beyond_model_rejected() {
        let labels = CommunityLabels::new(vec![0, 2], 3).unwrap();
        let model = ConnectivityModel::planted(2, 0.5, 0.0).unwrap();
        assert!(build_probability_matrix(&labels, &model).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(ConnectivityModel::planted(2, 0.5, 1.0).is_err());
        assert!(ConnectivityModel::planted(2, 1.5, 0.2).is_err());
        assert!(ConnectivityModel::full(2, 0.5, vec![1.0, 0.2, 0.3, 1.0]).is_err());
        assert!(ConnectivityModel::full(2, 0.5, vec![1.0, 1.2, 1.2, 1.0]).is_err());
    }

    #[test]
    fn gamma_matches_closed_form() {
        let planted = ConnectivityModel::planted(4, 0.1, 0.3).unwrap();
        assert!((planted.gamma() - 0.7).abs() < 1e-15);
        let mut b0 = vec![0.3; 16];
        for a in 0..4 {
            b0[a * 4 + a] = 1.0;
        }
        let full = ConnectivityModel::full(4, 0.1, b0).unwrap();
        assert!((full.gamma() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn effective_sizes_planted_balanced_no_mixing() {
        let model = ConnectivityModel::planted(4, 0.1, 0.0).unwrap();
        let s = effective_sizes(&model, 100, 25, 25).unwrap();
        assert_eq!(s.nbar_max, 25.0);
        assert_eq!(s.nbar_min, 25.0);
        assert_eq!(s.mu_b, 1.0);
        assert_eq!(s.gamma, 1.0);
    }

    #[test]
    fn effective_sizes_tau_near_one_is_order_n() {
        let model = ConnectivityModel::planted(5, 0.1, 0.999).unwrap();
        let s = effective_sizes(&model, 1000, 200, 200).unwrap();
        assert!(s.nbar_max > 0.99 * 1000.0 && s.nbar_max <= 1000.0);
        assert!(s.nbar_min > 0.99 * 1000.0);
    }

    #[test]
    fn effective_sizes_identity_kernel_enumerated() {
        // Admissible size vectors are (4,6), (5,5), (6,4); the row sums are the
        // own-community sizes, so the extremes are 6 and 4.
        let model = ConnectivityModel::full(2, 0.1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let s = effective_sizes(&model, 10, 4, 6).unwrap();
        assert_eq!(s.nbar_max, 6.0);
        assert_eq!(s.nbar_min, 4.0);
        assert_eq!(s.n_prime_max, 5);
        assert!((s.mu_b - 1.5).abs() < 1e-15);
    }

    #[test]
    fn effective_sizes_tightens_unreachable_bounds() {
        let model = ConnectivityModel::planted(2, 0.1, 0.5).unwrap();
        let s = effective_sizes(&model, 10, 1, 100).unwrap();
        assert_eq!(s.n_max, 9);
        assert_eq!(s.nbar_max, 0.5 * 9.0 + 5.0);
        assert!(effective_sizes(&model, 10, 6, 8).is_err());
        assert!(effective_sizes(&model, 10, 1, 4).is_err());
    }

    #[test]
    fn vertex_enumeration_matches_greedy() {
        let coef = [0.3, 0.9, 0.1, 0.5, 0.7];
        for (n, lo, hi) in [(50, 5, 15), (50, 10, 10), (37, 3, 20), (20, 0, 20)] {
            let (min, max) = extremes_by_vertices(&coef, n, lo, hi);
            let neg: Vec<f64> = coef.iter().map(|c| -c).collect();
            assert!((max - greedy_max(&coef, n, lo, hi)).abs() < 1e-12);
            assert!((min + greedy_max(&neg, n, lo, hi)).abs() < 1e-12);
        }
    }
}
