use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::GuidepathError;

/// Dense node index in `[0, |V|)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Position of an arc in [`GuidepathGraph::arcs`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcId(pub usize);

/// A directed travel segment. `weight` is the nominal travel time in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
}

/// Directed weighted guidepath `G = {V, E}`.
///
/// Immutable once built. Arcs are identified by their ordered endpoint pair,
/// so parallel arcs are rejected.
#[derive(Clone, Debug)]
pub struct GuidepathGraph {
    names: Vec<Option<String>>,
    arcs: Vec<Arc>,
    outgoing: Vec<Vec<ArcId>>,
    incoming: Vec<Vec<ArcId>>,
    by_endpoints: HashMap<(NodeId, NodeId), ArcId>,
    stations: Vec<NodeId>,
}

impl GuidepathGraph {
    /// Builds a validated graph. When `stations` is `None` every node is a station.
    pub fn new(
        node_count: usize,
        arcs: impl IntoIterator<Item = (usize, usize, f64)>,
        stations: Option<Vec<usize>>,
    ) -> Result<Self, GuidepathError> {
        Self::with_names(vec![None; node_count], arcs, stations)
    }

    pub fn with_names(
        names: Vec<Option<String>>,
        arcs: impl IntoIterator<Item = (usize, usize, f64)>,
        stations: Option<Vec<usize>>,
    ) -> Result<Self, GuidepathError> {
        let n = names.len();
        let mut stored = Vec::new();
        let mut outgoing = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); n];
        let mut by_endpoints = HashMap::new();
        for (index, (from, to, weight)) in arcs.into_iter().enumerate() {
            for node in [from, to] {
                if node >= n {
                    return Err(GuidepathError::DanglingEndpoint { arc: index, node });
                }
            }
            if from == to {
                return Err(GuidepathError::SelfLoop {
                    arc: index,
                    node: from,
                });
            }
            if weight.is_nan() || weight <= 0.0 || weight.is_infinite() {
                return Err(GuidepathError::NonPositiveWeight { arc: index, weight });
            }
            let key = (NodeId(from), NodeId(to));
            if by_endpoints.contains_key(&key) {
                return Err(GuidepathError::DuplicateArc {
                    arc: index,
                    from,
                    to,
                });
            }
            let id = ArcId(stored.len());
            by_endpoints.insert(key, id);
            outgoing[from].push(id);
            incoming[to].push(id);
            stored.push(Arc {
                from: NodeId(from),
                to: NodeId(to),
                weight,
            });
        }
        // Adjacency lists sorted by target index keep every traversal deterministic.
        for list in outgoing.iter_mut() {
            list.sort_by_key(|a| stored[a.0].to);
        }
        for list in incoming.iter_mut() {
            list.sort_by_key(|a| stored[a.0].from);
        }
        let stations = match stations {
            None => (0..n).map(NodeId).collect(),
            Some(list) => {
                let mut seen = vec![false; n];
                let mut out = Vec::with_capacity(list.len());
                for s in list {
                    if s >= n {
                        return Err(GuidepathError::UnknownStation(s));
                    }
                    if seen[s] {
                        return Err(GuidepathError::DuplicateStation(s));
                    }
                    seen[s] = true;
                    out.push(NodeId(s));
                }
                out
            }
        };
        Ok(Self {
            names,
            arcs: stored,
            outgoing,
            incoming,
            by_endpoints,
            stations,
        })
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len()).map(NodeId)
    }

    pub fn name(&self, node: NodeId) -> Option<&str> {
        self.names.get(node.0).and_then(|n| n.as_deref())
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, id: ArcId) -> &Arc {
        &self.arcs[id.0]
    }

    pub fn arc_between(&self, from: NodeId, to: NodeId) -> Option<ArcId> {
        self.by_endpoints.get(&(from, to)).copied()
    }

    pub fn outgoing(&self, node: NodeId) -> &[ArcId] {
        &self.outgoing[node.0]
    }

    pub fn incoming(&self, node: NodeId) -> &[ArcId] {
        &self.incoming[node.0]
    }

    /// Nodes eligible as task start or destination points.
    pub fn stations(&self) -> &[NodeId] {
        &self.stations
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.0 < self.names.len()
    }

    pub(crate) fn check_node(&self, node: NodeId) -> Result<(), GuidepathError> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(GuidepathError::UnknownNode(node))
        }
    }

    /// Returns a copy with a different station set.
    pub fn with_stations(&self, stations: Vec<usize>) -> Result<Self, GuidepathError> {
        let arcs = self.arcs.iter().map(|a| (a.from.0, a.to.0, a.weight));
        Self::with_names(self.names.clone(), arcs, Some(stations))
    }
}
