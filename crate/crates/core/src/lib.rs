//! Projection of topics onto a fixed set of sink categories through the
//! upward paths of a category graph, aggregation of topic maps into
//! interest profiles, and evaluation of those profiles against accounts
//! with a known ground-truth sink.

pub mod eval;
pub mod graph;
pub mod ingest;
pub mod paths;
pub mod profile;
pub mod relatedness;

pub use eval::{eval_account, eval_set, sweep, EvalReport, GroundTruthSet, SweepTable};
pub use graph::{build_graph, CategoryGraph, GraphBuilder, GraphError, NodeId, NodeKind};
pub use paths::{enumerate_paths, PathEngine, PathParams, PathStats, SinkSet, SinkSpec};
pub use profile::{profile, rank, Profile, Profiler, TopicMap};
pub use relatedness::{compute_weights, RelatednessVector};
