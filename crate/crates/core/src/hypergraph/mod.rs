//! Hypergraph view of basic graph patterns, join-vertex classification and
//! graph edit distance.

mod ged;
mod graph;

pub use ged::{approx_raw, exact_raw, ged, mapping_cost, query_ged, GedOptions, GedResult, EPSILON};
pub use graph::{
    body_hypergraph, build_hypergraphs, join_vertices, predicate_label, term_label, Hypergraph, JoinKind,
    JoinVertexInfo,
};
