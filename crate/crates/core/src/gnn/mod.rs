//! Two-layer graph convolution over the student/course/teacher subgraph.

mod model;
mod train;
mod view;

use thiserror::Error;

pub use model::{recommend, score, Checkpoint, Embeddings, GcnModel, Recommendation};
pub use train::{
    grad_check, learn_pairs, loss, loss_and_grad, row_norms, sample_triples, train, Gradients, Optimizer, TrainConfig,
    TrainOutcome, Triple,
};
pub use view::{build_view, FeatureConfig, GraphView, SparseMatrix, BASE_FEATURES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GnnError {
    #[error("graph has no student, course or teacher nodes")]
    EmptyGraph,
    #[error("{what}: expected {expected}, found {found}")]
    DimMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("no trainable (student, course) pairs")]
    NoPositives,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training diverged to non-finite weights")]
    Diverged,
}

pub type Result<T, E = GnnError> = std::result::Result<T, E>;
