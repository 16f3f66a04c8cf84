//! Extremal eigenpairs of dense symmetric matrices.
//!
//! The iterative path is a block Krylov method with full reorthogonalisation
//! and Rayleigh–Ritz extraction. A block of random vectors seeds the basis, and
//! each iteration appends the orthogonalised images of the previous block. The
//! block size exceeds the number of wanted pairs, so repeated eigenvalues (exact
//! block structure, disconnected communities) are resolved without relying on
//! rounding noise. Once the basis spans the whole space the extraction is exact,
//! so with the default basis cap the method always terminates.

use nalgebra::{DMatrix, DMatrixView, DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::matrix::SymmetricMatrix;
use crate::seed;

/// Matrices up to this size are decomposed densely.
pub const DENSE_CUTOFF: usize = 32;
/// Largest matrix the spectral norm falls back to a dense decomposition for.
pub const DENSE_FALLBACK_MAX: usize = 4096;
/// Relative residual target for [`spectral_norm`]; residual `r` bounds the
/// eigenvalue error by `r`, so this keeps the value well inside 1e-6.
pub const SPECTRAL_NORM_TOL: f64 = 1e-7;
/// Relative gap under which the K-th and (K+1)-th eigenvalues are reported as
/// degenerate.
pub const DEGENERATE_GAP: f64 = 1e-6;

/// Which end of the spectrum counts as "leading".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectrumOrder {
    /// Largest `|λ|` first.
    #[default]
    Magnitude,
    /// Largest `λ` first.
    Algebraic,
}

impl SpectrumOrder {
    fn key(self, v: f64) -> f64 {
        match self {
            SpectrumOrder::Magnitude => v.abs(),
            SpectrumOrder::Algebraic => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOptions {
    pub order: SpectrumOrder,
    /// Residual target relative to the largest Ritz value magnitude.
    pub tol: f64,
    /// Cap on the Krylov basis dimension; `None` means `n`.
    pub max_basis: Option<usize>,
    pub block: Option<usize>,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { order: SpectrumOrder::Magnitude, tol: 1e-10, max_basis: None, block: None, seed: 0x5eed_e16e }
    }
}

/// Leading eigenpairs with orthonormal, sign-canonical vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    pub values: Vec<f64>,
    /// Row-major `n × k`: row `i` is the embedding of node `i`.
    vectors: Vec<f64>,
    n: usize,
    pub order: SpectrumOrder,
    /// Estimate of the next eigenvalue in the selection order, if `k < n`.
    pub next_value: Option<f64>,
    pub max_residual: f64,
    pub warning: Option<String>,
}

impl EigenBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.k();
        &self.vectors[i * k..(i + 1) * k]
    }

    pub fn rows_flat(&self) -> &[f64] {
        &self.vectors
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.vectors[i * self.k() + j]).collect()
    }

    /// Gap between the K-th selected eigenvalue and the next one, measured in
    /// the selection order.
    pub fn eigengap(&self) -> Option<f64> {
        let last = *self.values.last()?;
        self.next_value.map(|next| self.order.key(last) - self.order.key(next))
    }
}

struct Ritz {
    values: Vec<f64>,
    /// `n × want`, column-major.
    vectors: DMatrix<f64>,
    residuals: Vec<f64>,
    scale: f64,
}

fn select(values: &[f64], order: SpectrumOrder, want: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| order.key(values[b]).total_cmp(&order.key(values[a])).then(a.cmp(&b)));
    idx.truncate(want);
    idx
}

fn dense_ritz(m: &SymmetricMatrix, want: usize, order: SpectrumOrder) -> Ritz {
    let eig = SymmetricEigen::new(m.to_dmatrix());
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let idx = select(&values, order, want);
    let vectors = DMatrix::from_fn(m.dim(), want, |r, c| eig.eigenvectors[(r, idx[c])]);
    let av = m.view() * &vectors;
    let sel: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let residuals = (0..want).map(|c| (av.column(c) - vectors.column(c) * sel[c]).norm()).collect();
    let scale = values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    Ritz { values: sel, vectors, residuals, scale }
}

/// Orthonormalise candidate columns against the first `m` basis columns and
/// each other. Columns that collapse are replaced by random directions.
fn extend_basis(
    basis: &[f64],
    n: usize,
    m: usize,
    cand: &DMatrix<f64>,
    limit: usize,
    rng: &mut impl Rng,
) -> Vec<DVector<f64>> {
    let q = DMatrixView::from_slice(&basis[..n * m], n, m);
    let mut accepted: Vec<DVector<f64>> = Vec::new();
    for j in 0..cand.ncols() {
        if accepted.len() >= limit {
            break;
        }
        let mut v: DVector<f64> = cand.column(j).into_owned();
        for _attempt in 0..4 {
            let norm0 = v.norm();
            if norm0 > 0.0 {
                for _pass in 0..2 {
                    if m > 0 {
                        let c = q.tr_mul(&v);
                        v -= &q * c;
                    }
                    for u in &accepted {
                        let d = u.dot(&v);
                        v.axpy(-d, u, 1.0);
                    }
                }
                let norm = v.norm();
                if norm > 1e-10 * norm0 && norm > f64::MIN_POSITIVE {
                    accepted.push(v / norm);
                    break;
                }
            }
            v = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        }
    }
    accepted
}

fn rayleigh_ritz(basis: &[f64], image: &[f64], h: &DMatrix<f64>, n: usize, want: usize, order: SpectrumOrder) -> Ritz {
    let m = h.nrows();
    let hs = (h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(hs);
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let idx = select(&values, order, want);
    let y = DMatrix::from_fn(m, idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    let q = DMatrixView::from_slice(&basis[..n * m], n, m);
    let aq = DMatrixView::from_slice(&image[..n * m], n, m);
    let vectors = q * &y;
    let av = aq * &y;
    let sel: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let residuals = (0..idx.len()).map(|c| (av.column(c) - vectors.column(c) * sel[c]).norm()).collect();
    let scale = values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    Ritz { values: sel, vectors, residuals, scale }
}

fn block_krylov(m: &SymmetricMatrix, want: usize, conv: usize, opts: &EigenOptions) -> Result<Ritz> {
    let n = m.dim();
    let a = m.view();
    let block = opts.block.unwrap_or((conv + 2).max(4)).clamp(1, n);
    let max_basis = opts.max_basis.unwrap_or(n).clamp(block.max(want), n);
    let mut rng = seed::rng(opts.seed);

    let mut basis: Vec<f64> = Vec::new();
    let mut image: Vec<f64> = Vec::new();
    let mut h = DMatrix::<f64>::zeros(0, 0);
    let mut dim = 0;
    let mut last_rr = 0;
    let mut cand = DMatrix::from_fn(n, block, |_, _| rng.random::<f64>() - 0.5);
    let mut last: Option<Ritz> = None;

    loop {
        let fresh = extend_basis(&basis, n, dim, &cand, max_basis - dim, &mut rng);
        if !fresh.is_empty() {
            let v = DMatrix::from_columns(&fresh);
            let av = a * &v;
            let b = v.ncols();
            let q = DMatrixView::from_slice(&basis[..n * dim], n, dim);
            let cross = q.tr_mul(&av);
            let diag = v.tr_mul(&av);
            let mut grown = h.resize(dim + b, dim + b, 0.0);
            for c in 0..b {
                for r in 0..dim {
                    grown[(r, dim + c)] = cross[(r, c)];
                    grown[(dim + c, r)] = cross[(r, c)];
                }
                for r in 0..b {
                    grown[(dim + r, dim + c)] = diag[(r, c)];
                }
            }
            h = grown;
            basis.extend_from_slice(v.as_slice());
            image.extend_from_slice(av.as_slice());
            dim += b;
            cand = av;
        }
        let exhausted = fresh.is_empty() || dim >= max_basis;
        let due = dim >= want && (dim < 120 || dim as f64 >= 1.2 * last_rr as f64);
        if due || exhausted {
            last_rr = dim;
            let ritz = rayleigh_ritz(&basis, &image, &h, n, want.min(dim), opts.order);
            let worst = ritz.residuals.iter().take(conv).fold(0.0f64, |w, &r| w.max(r));
            if dim >= n || worst <= opts.tol * ritz.scale {
                return Ok(ritz);
            }
            last = Some(ritz);
        }
        if exhausted {
            let residual =
                last.map(|r| r.residuals.iter().take(conv).fold(0.0f64, |w, &x| w.max(x))).unwrap_or(f64::NAN);
            return Err(Error::NonConvergence { residual, basis: dim });
        }
    }
}

fn canonical_sign(col: &mut [f64]) {
    let mut best = 0;
    for (i, v) in col.iter().enumerate() {
        if v.abs() > col[best].abs() {
            best = i;
        }
    }
    if col.get(best).is_some_and(|&v| v < 0.0) {
        col.iter_mut().for_each(|v| *v = -*v);
    }
}

/// The `k` leading eigenpairs of `m` by [`SpectrumOrder::Magnitude`].
pub fn top_k_eigenpairs(m: &SymmetricMatrix, k: usize) -> Result<EigenBasis> {
    top_k_eigenpairs_with(m, k, &EigenOptions::default())
}

pub fn top_k_eigenpairs_with(m: &SymmetricMatrix, k: usize, opts: &EigenOptions) -> Result<EigenBasis> {
    let n = m.dim();
    if k == 0 || k > n {
        return Err(invalid(format!("requested {k} eigenpairs of a {n}×{n} matrix")));
    }
    let want = (k + 1).min(n);
    let ritz = if n <= DENSE_CUTOFF { dense_ritz(m, want, opts.order) } else { block_krylov(m, want, k, opts)? };

    let mut vectors = vec![0.0; n * k];
    for j in 0..k {
        let mut col: Vec<f64> = ritz.vectors.column(j).iter().copied().collect();
        canonical_sign(&mut col);
        for (i, v) in col.into_iter().enumerate() {
            vectors[i * k + j] = v;
        }
    }
    let max_residual = ritz.residuals.iter().take(k).fold(0.0f64, |w, &r| w.max(r));
    let mut basis = EigenBasis {
        values: ritz.values[..k].to_vec(),
        vectors,
        n,
        order: opts.order,
        next_value: ritz.values.get(k).copied(),
        max_residual,
        warning: None,
    };
    if let Some(gap) = basis.eigengap() {
        if gap <= DEGENERATE_GAP * ritz.scale.max(f64::MIN_POSITIVE) {
            basis.warning = Some(format!("degenerate eigengap {gap:.3e} between eigenvalues {k} and {}", k + 1));
        }
    }
    Ok(basis)
}

/// Operator 2-norm `max |λ|` of a symmetric matrix.
pub fn spectral_norm(m: &SymmetricMatrix) -> Result<f64> {
    let n = m.dim();
    if n == 0 {
        return Ok(0.0);
    }
    if n <= DENSE_CUTOFF {
        return Ok(dense_ritz(m, 1, SpectrumOrder::Magnitude).values[0].abs());
    }
    let opts = EigenOptions { tol: SPECTRAL_NORM_TOL, max_basis: Some(400), block: Some(4), ..EigenOptions::default() };
    match block_krylov(m, 1, 1, &opts) {
        Ok(r) => Ok(r.values[0].abs()),
        Err(Error::NonConvergence { .. }) if n <= DENSE_FALLBACK_MAX => {
            Ok(dense_ritz(m, 1, SpectrumOrder::Magnitude).values[0].abs())
        }
        Err(e) => Err(e),
    }
}

/// All eigenvalues, largest first, from a dense decomposition.
pub fn dense_spectrum(m: &SymmetricMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = SymmetricEigen::new(m.to_dmatrix()).eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}
