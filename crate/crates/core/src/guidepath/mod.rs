//! Guidepath graph model and routing.

mod graph;
mod io;
mod routing;

use thiserror::Error;

pub use graph::{Arc, ArcId, GuidepathGraph, NodeId};
pub use io::{load_guidepath, to_document_string, ArcEntry, GuidepathDocument, NodeEntry};
pub use routing::{k_shortest_paths, shortest_path, DistanceTable, Route};

#[derive(Debug, Error)]
pub enum GuidepathError {
    #[error("guidepath parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("node id {id} is outside the dense range 0..{count}")]
    SparseNodeIds { id: usize, count: usize },
    #[error("node id {0} declared twice")]
    DuplicateNode(usize),
    #[error("arc #{arc} references undeclared node {node}")]
    DanglingEndpoint { arc: usize, node: usize },
    #[error("arc #{arc} is a self loop on node {node}")]
    SelfLoop { arc: usize, node: usize },
    #[error("arc #{arc} has non-positive weight {weight}")]
    NonPositiveWeight { arc: usize, weight: f64 },
    #[error("arc #{arc} duplicates {from}->{to}")]
    DuplicateArc { arc: usize, from: usize, to: usize },
    #[error("station {0} is not a node")]
    UnknownStation(usize),
    #[error("station {0} listed twice")]
    DuplicateStation(usize),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no arc {from}->{to}")]
    MissingArc { from: NodeId, to: NodeId },
    #[error("k must be at least 1")]
    ZeroK,
}
