//! Simulation and spectral clustering of dynamic stochastic block models.
//!
//! Memberships evolve over time and each snapshot is an independent SBM
//! graph given its memberships. Snapshots are smoothed over time, by a sliding
//! window or exponential forgetting, before spectral clustering on the
//! adjacency matrix or its normalized Laplacian.

pub mod bounds;
pub mod dsbm;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod kmeans;
pub mod labels;
pub mod laplacian;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod seed;
pub mod smoothing;
pub mod spectral;

pub use bounds::{
    laplacian_perturbation_check, rate_card, smoothing_bias_check, BiasCheck, Dynamics, PerturbationCheck, RateCard,
    RegimeInputs,
};
pub use dsbm::{
    gen_deterministic_sequence, gen_markov_sequence, sample_snapshot_sequence, DeterministicDsbmConfig,
    MarkovDsbmConfig, MembershipSequence, SnapshotSequence,
};
pub use eigen::{spectral_norm, top_k_eigenpairs, top_k_eigenpairs_with, EigenBasis, EigenOptions, SpectrumOrder};
pub use error::{Error, Result};
pub use graph::{degrees, sample_adjacency, sample_sbm, AdjacencySnapshot, DegreeVector};
pub use kmeans::{kmeans, KMeansOptions, KMeansResult};
pub use labels::CommunityLabels;
pub use laplacian::{normalized_laplacian, NormalizedLaplacian, ZeroDegreePolicy};
pub use matrix::SymmetricMatrix;
pub use metrics::{adjusted_rand_index, misclassification_error, ErrorReport};
pub use model::{build_probability_matrix, effective_sizes, ConnectivityModel, Kernel, SizeProfile};
pub use smoothing::{
    exp_smooth, smooth, tuning_profile, uniform_smooth, validate_weights, weights_of, ExpSmoother, HistoryPolicy,
    SmootherKind, SmoothingWeights, TuningProfile, WeightConstants, WeightReport,
};
pub use spectral::{spectral_cluster, SpectralClustering, SpectralOptions};
