//! Guidepath document format.
//!
//! ```json
//! {
//!   "nodes": [{"id": 0, "name": "dock"}, {"id": 1}],
//!   "arcs": [{"from": 0, "to": 1, "weight": 5.0}],
//!   "stations": [0, 1]
//! }
//! ```
//!
//! Node ids must be exactly `0..n` in any order. `stations` is optional and
//! defaults to every node.

use serde::{Deserialize, Serialize};

use super::{GuidepathError, GuidepathGraph};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GuidepathDocument {
    pub nodes: Vec<NodeEntry>,
    pub arcs: Vec<ArcEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stations: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ArcEntry {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Parses and validates a guidepath document.
pub fn load_guidepath(document: &str) -> Result<GuidepathGraph, GuidepathError> {
    let doc: GuidepathDocument =
        serde_json::from_str(document).map_err(|e| GuidepathError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    GuidepathGraph::try_from(doc)
}

impl TryFrom<GuidepathDocument> for GuidepathGraph {
    type Error = GuidepathError;

    fn try_from(doc: GuidepathDocument) -> Result<Self, Self::Error> {
        let n = doc.nodes.len();
        let mut names: Vec<Option<Option<String>>> = vec![None; n];
        for entry in doc.nodes {
            if entry.id >= n {
                return Err(GuidepathError::SparseNodeIds {
                    id: entry.id,
                    count: n,
                });
            }
            if names[entry.id].is_some() {
                return Err(GuidepathError::DuplicateNode(entry.id));
            }
            names[entry.id] = Some(entry.name);
        }
        let names = names.into_iter().map(|n| n.flatten()).collect();
        let arcs = doc.arcs.into_iter().map(|a| (a.from, a.to, a.weight));
        GuidepathGraph::with_names(names, arcs, doc.stations)
    }
}

impl From<&GuidepathGraph> for GuidepathDocument {
    fn from(g: &GuidepathGraph) -> Self {
        GuidepathDocument {
            nodes: g
                .nodes()
                .map(|id| NodeEntry {
                    id: id.0,
                    name: g.name(id).map(str::to_owned),
                })
                .collect(),
            arcs: g
                .arcs()
                .iter()
                .map(|a| ArcEntry {
                    from: a.from.0,
                    to: a.to.0,
                    weight: a.weight,
                })
                .collect(),
            stations: Some(g.stations().iter().map(|s| s.0).collect()),
        }
    }
}

pub fn to_document_string(g: &GuidepathGraph) -> String {
    serde_json::to_string_pretty(&GuidepathDocument::from(g)).expect("guidepath serializes")
}
