//! Spectral clustering: k-means on the rows of the leading eigenvectors.

use crate::eigen::{top_k_eigenpairs_with, EigenBasis, EigenOptions};
use crate::error::Result;
use crate::kmeans::{kmeans, KMeansOptions, KMeansResult};
use crate::labels::CommunityLabels;
use crate::matrix::SymmetricMatrix;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralOptions {
    pub eigen: EigenOptions,
    pub kmeans: KMeansOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralClustering {
    pub labels: CommunityLabels,
    pub eigen: EigenBasis,
    pub kmeans: KMeansResult,
    /// The input has no spectrum to speak of (zero matrix) or k-means left a
    /// cluster empty.
    pub degenerate: bool,
}

impl SpectralClustering {
    pub fn kmeans_cost(&self) -> f64 {
        self.kmeans.cost
    }
}

/// Rows of the embedding are clustered as they are, without normalisation.
pub fn spectral_cluster(m: &SymmetricMatrix, k: usize, opts: &SpectralOptions) -> Result<SpectralClustering> {
    let eigen = top_k_eigenpairs_with(m, k, &opts.eigen)?;
    let km = kmeans(eigen.rows_flat(), k, k, &opts.kmeans)?;
    let flat = eigen.values.iter().all(|&v| v == 0.0);
    Ok(SpectralClustering { labels: km.labels.clone(), degenerate: flat || km.degenerate, eigen, kmeans: km })
}
