//! Preference profiling, clustering and the association test battery.

mod agreement;
mod association;
mod chisq;
mod kmeans;
mod profile;
pub mod special;

use thiserror::Error;

use crate::graph::GraphError;

pub use agreement::{pearson, rand_index, rand_index_by_item};
pub use association::{
    cohort_association, cohort_members, eligible_students, engagement_vector, preference_clusters, preference_engagement_association,
    Association, AssociationParams, AssociationReport, IndicatorScenario, EngagementVector, DEFAULT_MIN_COURSES,
};
pub use chisq::{chi_square_independence, ChiSquareResult};
pub use kmeans::{kmeans, standardize, ClusterModel, MAX_ITERATIONS};
pub use profile::{preference_features, preference_profile, FeatureMatrix, PreferenceDimension, PreferenceProfile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("cohort is empty")]
    EmptyCohort,
    #[error("need at least k = {k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("point {0} has a non-finite coordinate")]
    NonFinitePoint(usize),
    #[error("points have inconsistent dimensions")]
    RaggedPoints,
    #[error("partitions cover different items")]
    MismatchedItems,
    #[error("need at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("input has zero variance")]
    ZeroVariance,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("contingency table has an all-zero row or column")]
    DegenerateTable,
    #[error("contingency table must be at least 2x2 and rectangular")]
    TooSmallTable,
    #[error("expected count {expected:.3} in cell ({row}, {col}) is below 1")]
    ExpectedCountBelowFloor { row: usize, col: usize, expected: f64 },
    #[error("need at least 2 clusters, got {0}")]
    TooFewClusters(usize),
    #[error("unknown career `{0}`")]
    UnknownCareer(String),
    #[error("profile for dimension {found} where {expected} was requested")]
    DimensionMismatch {
        expected: PreferenceDimension,
        found: PreferenceDimension,
    },
}

pub type Result<T, E = StatsError> = std::result::Result<T, E>;
