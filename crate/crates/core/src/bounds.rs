//! Closed-form rates and conditions, and checkers for the inequalities that
//! carry explicit constants.
//!
//! Universal constants of the rates are set to 1, so every value here is a
//! shape. Conditions of the form `LHS ≳ RHS` are reported as the ratio
//! `LHS / RHS`; a flag is raised when the ratio is at least 1.

use std::fmt;

use crate::dsbm::{MembershipSequence, SnapshotSequence};
use crate::eigen::spectral_norm;
use crate::error::{invalid, Error, Result};
use crate::graph::{DegreeVector, Degrees};
use crate::labels::CommunityLabels;
use crate::laplacian::{normalized_laplacian, ZeroDegreePolicy};
use crate::matrix::SymmetricMatrix;
use crate::model::{build_probability_matrix, effective_sizes, ConnectivityModel, SizeProfile};
use crate::smoothing::SmoothingWeights;

/// Absolute slack of the Laplacian perturbation check.
pub const PERTURBATION_SLACK: f64 = 1e-9;

/// Constant of the per-lag Frobenius drift bound.
pub const FROBENIUS_CONSTANT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dynamics {
    #[default]
    Deterministic,
    /// Community sizes are not controlled, so `n̄_max` is replaced by `n` in
    /// the smoothing intensity.
    Markov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeInputs {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub epsilon: f64,
    /// Off-diagonal level of a planted-partition kernel, if that is the kernel.
    pub tau: Option<f64>,
    pub n_min: usize,
    pub n_max: usize,
    pub n_prime_max: usize,
    pub nbar_min: f64,
    pub nbar_max: f64,
    pub mu_b: f64,
    pub gamma: f64,
    /// k-means approximation slack: the clustering cost is within `1 + δ` of optimal.
    pub delta: f64,
    /// Failure probability exponent. Only echoed, since it enters the constants.
    pub nu: f64,
    pub dynamics: Dynamics,
}

impl RegimeInputs {
    pub fn from_profile(profile: &SizeProfile, k: usize, alpha: f64, epsilon: f64, tau: Option<f64>) -> Self {
        Self {
            n: profile.n,
            k,
            alpha,
            epsilon,
            tau,
            n_min: profile.n_min,
            n_max: profile.n_max,
            n_prime_max: profile.n_prime_max,
            nbar_min: profile.nbar_min,
            nbar_max: profile.nbar_max,
            mu_b: profile.mu_b,
            gamma: profile.gamma,
            delta: 0.0,
            nu: 1.0,
            dynamics: Dynamics::Deterministic,
        }
    }

    /// Planted-partition regime with size bounds `[n_min, n_max]`.
    pub fn planted(n: usize, k: usize, alpha: f64, epsilon: f64, tau: f64, n_min: usize, n_max: usize) -> Result<Self> {
        let model = ConnectivityModel::planted(k, alpha, tau)?;
        let profile = effective_sizes(&model, n, n_min, n_max)?;
        Ok(Self::from_profile(&profile, k, alpha, epsilon, Some(tau)))
    }

    pub fn with_dynamics(mut self, dynamics: Dynamics) -> Self {
        self.dynamics = dynamics;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.k == 0 {
            return Err(invalid(format!("need n ≥ 2 and K ≥ 1, got n = {}, K = {}", self.n, self.k)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!("alpha = {} must lie in (0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(invalid(format!("epsilon = {} must lie in [0, 1]", self.epsilon)));
        }
        if self.n_min == 0 || !(self.nbar_min > 0.0) || !(self.nbar_max >= self.nbar_min) {
            return Err(invalid("size quantities must be positive with nbar_max ≥ nbar_min"));
        }
        if !(self.delta >= 0.0) {
            return Err(invalid(format!("delta = {} must be nonnegative", self.delta)));
        }
        Ok(())
    }

    /// Degree scale entering the smoothing intensity.
    pub fn drift_scale(&self) -> f64 {
        match self.dynamics {
            Dynamics::Deterministic => self.nbar_max,
            Dynamics::Markov => self.n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateCard {
    pub rho_n: f64,
    /// `min(1, √(n α ε))`, the intensity with `n` in place of `n̄_max`.
    pub rho_pz: f64,
    /// `(1+δ) n'_max K / (n α² n_min² γ²)`; `None` when `γ ≤ 0`.
    pub recovery_adj_coef: Option<f64>,
    /// `(1+δ) n'_max K n̄_max² / (n n_min² γ²)`; `None` when `γ ≤ 0`.
    pub recovery_lap_coef: Option<f64>,
    /// Adjacency recovery bound `coef · adj_dyn_rate²`.
    pub recovery_adj_rhs: Option<f64>,
    /// Laplacian recovery bound `coef · lap_dyn_rate²`.
    pub recovery_lap_rhs: Option<f64>,
    /// `√(n α ρ)`.
    pub adj_dyn_rate: f64,
    /// `√(n α)`.
    pub adj_static_rate: f64,
    /// `√(n̄_max α)`, the planted-partition static rate.
    pub adj_static_block_rate: f64,
    /// `μ_B √(n ρ / (n̄_min² α))`.
    pub lap_dyn_rate: f64,
    /// `μ_B √n / (n̄_min √α)`.
    pub lap_static_rate: f64,
    /// `(α/ρ) / (log n / n)`.
    pub sparsity_ratio: f64,
    /// `ε / √(log n / n)`, required under Markov dynamics.
    pub markov_epsilon_ratio: f64,
    /// `(α/ρ) / (μ_B log n / n̄_min)`.
    pub lap_dyn_ratio: f64,
    /// `α / (μ_B log n / n̄_min)`.
    pub lap_static_ratio: f64,
    /// `α / (log n / n̄_min)`.
    pub block_static_ratio: f64,
}

impl RateCard {
    pub fn sparsity_ok(&self) -> bool {
        self.sparsity_ratio >= 1.0
    }

    pub fn markov_epsilon_ok(&self) -> bool {
        self.markov_epsilon_ratio >= 1.0
    }

    pub fn lap_dyn_ok(&self) -> bool {
        self.lap_dyn_ratio >= 1.0
    }

    pub fn lap_static_ok(&self) -> bool {
        self.lap_static_ratio >= 1.0
    }

    pub fn block_static_ok(&self) -> bool {
        self.block_static_ratio >= 1.0
    }

    /// At `ρ = 1` the dynamic rates coincide with the static ones.
    pub fn reduction_ok(&self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        self.rho_n < 1.0
            || (close(self.adj_dyn_rate, self.adj_static_rate) && close(self.lap_dyn_rate, self.lap_static_rate))
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "unavailable".to_string(), |x| x.to_string());
        vec![
            ("rho_n", self.rho_n.to_string()),
            ("rho_pz", self.rho_pz.to_string()),
            ("recovery_adj_coef", opt(self.recovery_adj_coef)),
            ("recovery_lap_coef", opt(self.recovery_lap_coef)),
            ("recovery_adj_rhs", opt(self.recovery_adj_rhs)),
            ("recovery_lap_rhs", opt(self.recovery_lap_rhs)),
            ("adj_dyn_rate", self.adj_dyn_rate.to_string()),
            ("adj_static_rate", self.adj_static_rate.to_string()),
            ("adj_static_block_rate", self.adj_static_block_rate.to_string()),
            ("lap_dyn_rate", self.lap_dyn_rate.to_string()),
            ("lap_static_rate", self.lap_static_rate.to_string()),
            ("sparsity_ratio", self.sparsity_ratio.to_string()),
            ("sparsity_ok", self.sparsity_ok().to_string()),
            ("markov_epsilon_ratio", self.markov_epsilon_ratio.to_string()),
            ("markov_epsilon_ok", self.markov_epsilon_ok().to_string()),
            ("lap_dyn_ratio", self.lap_dyn_ratio.to_string()),
            ("lap_dyn_ok", self.lap_dyn_ok().to_string()),
            ("lap_static_ratio", self.lap_static_ratio.to_string()),
            ("lap_static_ok", self.lap_static_ok().to_string()),
            ("block_static_ratio", self.block_static_ratio.to_string()),
            ("block_static_ok", self.block_static_ok().to_string()),
            ("reduction_ok", self.reduction_ok().to_string()),
        ]
    }

    pub fn csv_header() -> String {
        let card = RateCard::default_for_header();
        card.fields().iter().map(|(k, _)| *k).collect::<Vec<_>>().join(",")
    }

    pub fn csv_row(&self) -> String {
        self.fields().into_iter().map(|(_, v)| v).collect::<Vec<_>>().join(",")
    }

    fn default_for_header() -> Self {
        Self {
            rho_n: 0.0,
            rho_pz: 0.0,
            recovery_adj_coef: None,
            recovery_lap_coef: None,
            recovery_adj_rhs: None,
            recovery_lap_rhs: None,
            adj_dyn_rate: 0.0,
            adj_static_rate: 0.0,
            adj_static_block_rate: 0.0,
            lap_dyn_rate: 0.0,
            lap_static_rate: 0.0,
            sparsity_ratio: 0.0,
            markov_epsilon_ratio: 0.0,
            lap_dyn_ratio: 0.0,
            lap_static_ratio: 0.0,
            block_static_ratio: 0.0,
        }
    }
}

impl fmt::Display for RateCard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.fields() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

pub fn rate_card(inp: &RegimeInputs) -> Result<RateCard> {
    inp.validate()?;
    let n = inp.n as f64;
    let log_n = n.ln();
    let alpha = inp.alpha;
    let rho = (inp.drift_scale() * alpha * inp.epsilon).sqrt().min(1.0);
    let rho_pz = (n * alpha * inp.epsilon).sqrt().min(1.0);

    let adj_dyn_rate = (n * alpha * rho).sqrt();
    let adj_static_rate = (n * alpha).sqrt();
    let lap_dyn_rate = inp.mu_b * (n * rho / (inp.nbar_min * inp.nbar_min * alpha)).sqrt();
    let lap_static_rate = inp.mu_b * n.sqrt() / (inp.nbar_min * alpha.sqrt());

    let (adj_coef, lap_coef) = if inp.gamma > 0.0 {
        let base = (1.0 + inp.delta) * inp.n_prime_max as f64 * inp.k as f64
            / (n * (inp.n_min as f64).powi(2) * inp.gamma * inp.gamma);
        (Some(base / (alpha * alpha)), Some(base * inp.nbar_max * inp.nbar_max))
    } else {
        (None, None)
    };

    // ρ = 0 makes α/ρ infinite, which satisfies the conditions.
    let alpha_over_rho = if rho > 0.0 { alpha / rho } else { f64::INFINITY };
    Ok(RateCard {
        rho_n: rho,
        rho_pz,
        recovery_adj_coef: adj_coef,
        recovery_lap_coef: lap_coef,
        recovery_adj_rhs: adj_coef.map(|c| c * adj_dyn_rate * adj_dyn_rate),
        recovery_lap_rhs: lap_coef.map(|c| c * lap_dyn_rate * lap_dyn_rate),
        adj_dyn_rate,
        adj_static_rate,
        adj_static_block_rate: (inp.nbar_max * alpha).sqrt(),
        lap_dyn_rate,
        lap_static_rate,
        sparsity_ratio: alpha_over_rho / (log_n / n),
        markov_epsilon_ratio: inp.epsilon / (log_n / n).sqrt(),
        lap_dyn_ratio: alpha_over_rho / (inp.mu_b * log_n / inp.nbar_min),
        lap_static_ratio: alpha / (inp.mu_b * log_n / inp.nbar_min),
        block_static_ratio: alpha / (log_n / inp.nbar_min),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationCheck {
    /// `‖L(A) − L(P)‖`.
    pub lhs: f64,
    /// `‖A − P‖ / d_min + ‖(D − D_P) P‖ / d_min²`.
    pub rhs: f64,
    /// Smallest row sum over both matrices.
    pub d_min: f64,
    pub holds: bool,
}

/// Spectral norm of `Δ·P` for diagonal `Δ` and symmetric `P`, as the square
/// root of the top eigenvalue of `P Δ² P`.
fn scaled_rows_norm(delta: &[f64], p: &SymmetricMatrix) -> Result<f64> {
    let mut dp = p.to_dmatrix();
    for (i, &d) in delta.iter().enumerate() {
        dp.row_mut(i).scale_mut(d);
    }
    let gram = SymmetricMatrix::symmetrize(&(dp.transpose() * &dp))?;
    Ok(spectral_norm(&gram)?.max(0.0).sqrt())
}

/// Both sides of `‖L(A)−L(P)‖ ≤ ‖A−P‖/d_min + ‖(D−D_P)P‖/d_min²` for
/// nonnegative symmetric `A`, `P` with positive row sums.
pub fn laplacian_perturbation_check(a: &SymmetricMatrix, p: &SymmetricMatrix) -> Result<PerturbationCheck> {
    if a.dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: a.dim() });
    }
    if a.as_slice().iter().chain(p.as_slice()).any(|&v| !(v >= 0.0)) {
        return Err(invalid("matrices must be entrywise nonnegative"));
    }
    let da = a.row_sums();
    let dp = p.row_sums();
    if let Some((node, &degree)) = da.iter().chain(&dp).enumerate().find(|(_, &d)| !(d > 0.0)) {
        return Err(invalid(format!("row {} has non-positive sum {degree}", node % a.dim().max(1))));
    }
    let la = normalized_laplacian(a, ZeroDegreePolicy::Error)?.matrix;
    let lp = normalized_laplacian(p, ZeroDegreePolicy::Error)?.matrix;
    let lhs = spectral_norm(&la.sub(&lp)?)?;
    let d_min = da.iter().chain(&dp).copied().fold(f64::INFINITY, f64::min);
    let diff_norm = spectral_norm(&a.sub(p)?)?;
    let delta: Vec<f64> = da.iter().zip(&dp).map(|(x, y)| x - y).collect();
    let degree_term = scaled_rows_norm(&delta, p)?;
    let rhs = diff_norm / d_min + degree_term / (d_min * d_min);
    Ok(PerturbationCheck { lhs, rhs, d_min, holds: lhs <= rhs + PERTURBATION_SLACK })
}

/// Expected degrees `Σ_{j≠i} p_ij` of a graph sampled without self-loops.
pub fn expected_degrees(p: &SymmetricMatrix) -> DegreeVector {
    let mut d = p.row_sums();
    d.iter_mut().enumerate().for_each(|(i, x)| *x -= p.get(i, i));
    DegreeVector(d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDeviation {
    /// `max_i |d_i − d̄_i|` for the smoothed degrees at the last step.
    pub max_abs_deviation: f64,
    /// Deviation divided by `n α`.
    pub normalized_by_n_alpha: f64,
    /// Deviation divided by `n̄_min α`.
    pub normalized_by_nbar_alpha: f64,
}

/// Degree deviation of the smoothed graph at the last step, where
/// `d_i = Σ_k β_k d_{i,t−k}` and `expected[t]` holds the expected degrees of
/// snapshot `t`.
pub fn degree_deviation_stats(
    seq: &SnapshotSequence,
    weights: &SmoothingWeights,
    expected: &[DegreeVector],
    alpha: f64,
    nbar_min: f64,
) -> Result<DegreeDeviation> {
    if expected.len() != seq.len() {
        return Err(Error::DimensionMismatch { expected: seq.len(), found: expected.len() });
    }
    if weights.betas.len() > seq.len() {
        return Err(Error::WindowExceedsHistory { window: weights.betas.len(), available: seq.len() });
    }
    let n = seq.at(0).n();
    if let Some(bad) = expected.iter().find(|e| e.0.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad.0.len() });
    }
    let t = seq.len() - 1;
    let mut observed = vec![0.0; n];
    let mut mean = vec![0.0; n];
    for (k, &beta) in weights.betas.iter().enumerate() {
        if beta == 0.0 {
            continue;
        }
        let d = seq.at(t - k).degrees();
        for i in 0..n {
            observed[i] += beta * d.0[i];
            mean[i] += beta * expected[t - k].0[i];
        }
    }
    let dev = observed.iter().zip(&mean).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(DegreeDeviation {
        max_abs_deviation: dev,
        normalized_by_n_alpha: dev / (n as f64 * alpha),
        normalized_by_nbar_alpha: dev / (nbar_min * alpha),
    })
}

/// `‖P(Θ) − P(Θ')‖²_F` from the joint label counts, without forming the
/// matrices: nodes with the same pair of labels have identical rows.
pub fn frobenius_distance_sq(a: &CommunityLabels, b: &CommunityLabels, model: &ConnectivityModel) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let k = model.k();
    if a.k() > k || b.k() > k {
        return Err(invalid("labels use more communities than the model"));
    }
    let mut counts = vec![0.0; k * k];
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        counts[x * k + y] += 1.0;
    }
    let cells: Vec<(usize, usize, f64)> =
        (0..k * k).filter(|&c| counts[c] > 0.0).map(|c| (c / k, c % k, counts[c])).collect();
    let mut total = 0.0;
    for &(a1, b1, c1) in &cells {
        for &(a2, b2, c2) in &cells {
            let d = model.prob(a1, a2) - model.prob(b1, b2);
            total += c1 * c2 * d * d;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusLag {
    pub k: usize,
    /// `‖P_{t−k} − P_t‖²_F`.
    pub value: f64,
    /// `8 α² n̄_max min(n, k s)`.
    pub bound: f64,
}

impl FrobeniusLag {
    pub fn holds(&self) -> bool {
        self.value <= self.bound * (1.0 + 1e-12) + 1e-12
    }
}

/// Drift `‖P_{t−k} − P_t‖²_F` against `8 α² n̄_max min(n, k s)` for every lag
/// `k ≤ t`.
pub fn frobenius_lags(
    seq: &MembershipSequence,
    model: &ConnectivityModel,
    t: usize,
    changes: usize,
    nbar_max: f64,
) -> Result<Vec<FrobeniusLag>> {
    if t > seq.horizon() {
        return Err(invalid(format!("time {t} is past the horizon {}", seq.horizon())));
    }
    let n = seq.n();
    let scale = FROBENIUS_CONSTANT * model.alpha() * model.alpha() * nbar_max;
    (0..=t)
        .map(|k| {
            let value = frobenius_distance_sq(seq.at(t - k), seq.at(t), model)?;
            Ok(FrobeniusLag { k, value, bound: scale * n.min(k * changes) as f64 })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasCheck {
    /// `‖P^smooth_t − P_t‖` at the last step.
    pub lhs_norm: f64,
    /// `Σ_k β_k ‖P_{t−k} − P_t‖_F`, an upper bound on `lhs_norm`.
    pub frobenius_chain: f64,
    /// `√8 · C'_β · α · √(n n̄_max ε / β_max)` with the certified constants.
    pub rhs_bound: f64,
    pub lags: Vec<FrobeniusLag>,
}

impl BiasCheck {
    pub fn frobenius_violations(&self) -> usize {
        self.lags.iter().filter(|l| !l.holds()).count()
    }

    /// The chain `lhs ≤ frobenius_chain ≤ rhs_bound` holds up to rounding.
    pub fn chain_holds(&self) -> bool {
        let tol = 1e-9 * self.rhs_bound.max(1.0);
        self.lhs_norm <= self.frobenius_chain + tol && self.frobenius_chain <= self.rhs_bound + tol
    }
}

/// Bias of the smoothed probability matrix at the last step of a
/// deterministic sequence with `changes` moves per step.
pub fn smoothing_bias_check(
    seq: &MembershipSequence,
    model: &ConnectivityModel,
    weights: &SmoothingWeights,
    changes: usize,
    nbar_max: f64,
) -> Result<BiasCheck> {
    let t = seq.horizon();
    if weights.betas.len() > t + 1 {
        return Err(Error::WindowExceedsHistory { window: weights.betas.len(), available: t + 1 });
    }
    let n = seq.n();
    let p_t = build_probability_matrix(seq.at(t), model)?;
    let mut p_smooth = SymmetricMatrix::zeros(n);
    for (k, &beta) in weights.betas.iter().enumerate() {
        if beta != 0.0 {
            p_smooth.axpy(beta, &build_probability_matrix(seq.at(t - k), model)?)?;
        }
    }
    let lhs_norm = spectral_norm(&p_smooth.sub(&p_t)?)?;
    let lags = frobenius_lags(seq, model, t, changes, nbar_max)?;
    let frobenius_chain = weights.betas.iter().zip(&lags).map(|(b, l)| b * l.value.sqrt()).sum();
    let epsilon = changes as f64 / n as f64;
    let c = weights.certified;
    let rhs_bound = FROBENIUS_CONSTANT.sqrt()
        * c.c_beta_prime
        * model.alpha()
        * (n as f64 * nbar_max * epsilon / c.beta_max).sqrt();
    Ok(BiasCheck { lhs_norm, frobenius_chain, rhs_bound, lags })
}
