//! Ground-truth data generation for every plot family.

pub mod clustering;
pub mod clusters;
pub mod histogram;
pub mod multiseries;
pub mod series;
pub mod walk;

use thiserror::Error;

pub use clustering::{dbscan, kmeans, kmeans_with_history, mean_shift, KMeansResult};
pub use clusters::{gen_blobs, gen_clusters, ClusterAlgorithm, ClusterConfig, ClusterMetadata};
pub use histogram::{
    bin_values, decreasing_runs, gen_histogram, gen_histogram_sample, increasing_runs, Distribution, HistAnomaly, HistAnomalyKind, HistogramConfig, HistogramMetadata,
};
pub use multiseries::{gen_multiseries, MultiFamily, MultiSeriesConfig, MultiSeriesMetadata, SeriesGenerator, SingleSeries};
pub use series::{
    gen_series, inject_anomalies, remove_points, AnomalyOptions, RangeTransform, SeriesConfig, SeriesMetadata, WalkKind,
};
pub use walk::{gen_geometric_walk, gen_random_walk, smooth};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("need at least {min} points, got {n}")]
    TooShort { n: usize, min: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("constraint cannot be satisfied: {0}")]
    Unsatisfiable(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}
