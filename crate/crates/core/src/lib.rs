//! Aphasia severity estimation from speech-gesture discourse graphs.
//!
//! The pipeline: parse CHAT transcripts, build directed multimodal
//! word-gesture graphs with Louvain communities, extract per-participant
//! and per-node features, analyze them with correlation/ridge/HC3 tooling,
//! train a two-layer GraphSAGE regressor against WAB scores, and evaluate
//! everything with repeated k-fold out-of-fold prediction. A synthetic
//! corpus generator stands in for credential-gated clinical data.

pub mod chat;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod gnn;
pub mod stats;
pub mod synth;

pub use chat::{parse_transcript, Transcript};
pub use graph::{build_graph, build_graph_with_communities, DiscourseGraph};
