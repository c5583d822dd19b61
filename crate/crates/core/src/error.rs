//! Error types shared across the pipeline stages.

use thiserror::Error;

/// Errors raised while parsing CHAT transcripts.
#[derive(Debug, Error)]
pub enum ChatError {
    #[error("no `*{tag}:` tier lines found in input")]
    NoParticipantTier { tag: String },
}

/// Errors raised while building discourse graphs.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("transcript `{participant_id}` contains no items")]
    EmptyTranscript { participant_id: String },
}

/// Errors raised by the statistical toolkit.
#[derive(Debug, Error)]
pub enum StatsError {
    #[error("input vectors have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {min} observations, got {got}")]
    TooFewObservations { min: usize, got: usize },
    #[error("{name} input is constant; correlation undefined")]
    ConstantInput { name: &'static str },
    #[error("design matrix is singular")]
    SingularDesign,
    #[error("observation {index} has leverage 1; HC3 weights undefined")]
    LeverageOne { index: usize },
    #[error("logistic fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("both label classes must be present")]
    SingleClass,
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },
}

/// Errors raised by the GNN engine.
#[derive(Debug, Error)]
pub enum GnnError {
    #[error("feature matrix has {rows} rows but the graph has {nodes} nodes")]
    ShapeMismatch { rows: usize, nodes: usize },
    #[error("feature rows have inconsistent widths (expected {expected}, found {found})")]
    FeatureWidthMismatch { expected: usize, found: usize },
    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("target value is not finite")]
    NonFiniteTarget,
}

/// Errors raised by the evaluation harness.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least {k} participants for {k}-fold splitting, got {got}")]
    TooFewParticipants { k: usize, got: usize },
    #[error("k must be at least 2, got {k}")]
    InvalidFoldCount { k: usize },
    #[error("feature mask selects zero columns")]
    EmptyFeatureMask,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("fold {fold} failed: {source}")]
    FoldFailed {
        fold: usize,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
}
