//! Mining toolkit for SPARQL query logs: parsing, sessionization, structural
//! analytics, reformulation events and intent modelling.

pub mod analytics;
pub mod corpus;
pub mod hypergraph;
pub mod intent;
pub mod reformulation;
pub mod report;
pub mod sparql;
