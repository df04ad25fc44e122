//! Knowledge-graph analytics for MOOC course selection: an embedded
//! student/course/teacher property graph, preference and engagement
//! statistics, a two-layer GCN for course recommendation, and
//! cohesion-driven study-group formation.

pub mod datagen;
pub mod gnn;
pub mod graph;
pub mod groups;
pub mod io;
pub mod report;
pub mod stats;

/// Version stamped into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

pub use graph::{Direction, EdgeKind, GraphError, HeteroGraph, NodeAttrs, NodeKind, NodeRecord, PathStep};
