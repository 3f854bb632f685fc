//! Dijkstra shortest paths and Yen's k-shortest loopless paths.
//!
//! Equal-cost paths are ordered by their node-index sequence, so every routing
//! call is deterministic.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::{ArcId, GuidepathError, GuidepathGraph, NodeId};

/// A loopless chain of arcs.
#[derive(Clone, Debug, PartialEq)]
pub struct Route {
    nodes: Vec<NodeId>,
    arcs: Vec<ArcId>,
    total_cost: f64,
}

impl Route {
    /// Empty route parked at `node`.
    pub fn empty(node: NodeId) -> Self {
        Route {
            nodes: vec![node],
            arcs: Vec::new(),
            total_cost: 0.0,
        }
    }

    /// Builds a route through consecutive nodes; every hop must be an arc.
    pub fn from_nodes(g: &GuidepathGraph, nodes: Vec<NodeId>) -> Result<Self, GuidepathError> {
        assert!(!nodes.is_empty(), "a route visits at least one node");
        let mut arcs = Vec::with_capacity(nodes.len() - 1);
        let mut total_cost = 0.0;
        for pair in nodes.windows(2) {
            let id = g
                .arc_between(pair[0], pair[1])
                .ok_or(GuidepathError::MissingArc {
                    from: pair[0],
                    to: pair[1],
                })?;
            total_cost += g.arc(id).weight;
            arcs.push(id);
        }
        Ok(Route {
            nodes,
            arcs,
            total_cost,
        })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[ArcId] {
        &self.arcs
    }

    pub fn total_cost(&self) -> f64 {
        self.total_cost
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().expect("non-empty")
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn is_loopless(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.nodes.len());
        self.nodes.iter().all(|n| seen.insert(*n))
    }

    fn order(&self, other: &Route) -> Ordering {
        self.total_cost
            .total_cmp(&other.total_cost)
            .then_with(|| self.nodes.cmp(&other.nodes))
    }
}

#[derive(Debug)]
struct Label {
    cost: f64,
    nodes: Vec<NodeId>,
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Label {}
impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Label {
    // reversed: BinaryHeap pops the smallest (cost, node sequence)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.nodes.cmp(&self.nodes))
    }
}

/// Dijkstra over the graph minus `blocked_nodes` / `blocked_arcs`.
fn constrained_shortest(
    g: &GuidepathGraph,
    src: NodeId,
    dst: NodeId,
    blocked_nodes: &[bool],
    blocked_arcs: &HashSet<ArcId>,
) -> Option<Vec<NodeId>> {
    let n = g.node_count();
    let mut settled = vec![false; n];
    let mut best: Vec<Option<(f64, Vec<NodeId>)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    best[src.0] = Some((0.0, vec![src]));
    heap.push(Label {
        cost: 0.0,
        nodes: vec![src],
    });
    while let Some(Label { cost, nodes }) = heap.pop() {
        let u = *nodes.last().expect("label path non-empty");
        if settled[u.0] {
            continue;
        }
        settled[u.0] = true;
        if u == dst {
            return Some(nodes);
        }
        for &aid in g.outgoing(u) {
            if blocked_arcs.contains(&aid) {
                continue;
            }
            let arc = g.arc(aid);
            let v = arc.to;
            if settled[v.0] || blocked_nodes[v.0] {
                continue;
            }
            let next_cost = cost + arc.weight;
            let mut next_nodes = nodes.clone();
            next_nodes.push(v);
            let better = match &best[v.0] {
                None => true,
                Some((c, p)) => match next_cost.total_cmp(c) {
                    Ordering::Less => true,
                    Ordering::Equal => next_nodes < *p,
                    Ordering::Greater => false,
                },
            };
            if better {
                best[v.0] = Some((next_cost, next_nodes.clone()));
                heap.push(Label {
                    cost: next_cost,
                    nodes: next_nodes,
                });
            }
        }
    }
    None
}

/// Minimum-cost route from `src` to `dst`, or `None` when unreachable.
pub fn shortest_path(
    g: &GuidepathGraph,
    src: NodeId,
    dst: NodeId,
) -> Result<Option<Route>, GuidepathError> {
    g.check_node(src)?;
    g.check_node(dst)?;
    if src == dst {
        return Ok(Some(Route::empty(src)));
    }
    let blocked = vec![false; g.node_count()];
    Ok(constrained_shortest(g, src, dst, &blocked, &HashSet::new())
        .map(|nodes| Route::from_nodes(g, nodes).expect("dijkstra follows arcs")))
}

/// Up to `k` loopless routes in ascending cost (Yen's algorithm).
pub fn k_shortest_paths(
    g: &GuidepathGraph,
    src: NodeId,
    dst: NodeId,
    k: usize,
) -> Result<Vec<Route>, GuidepathError> {
    if k == 0 {
        return Err(GuidepathError::ZeroK);
    }
    let Some(first) = shortest_path(g, src, dst)? else {
        return Ok(Vec::new());
    };
    let mut accepted = vec![first];
    let mut candidates: Vec<Route> = Vec::new();

    while accepted.len() < k {
        let prev = accepted.last().expect("at least one accepted").clone();
        for i in 0..prev.nodes.len().saturating_sub(1) {
            let spur = prev.nodes[i];
            let root = &prev.nodes[..=i];

            let mut blocked_arcs = HashSet::new();
            for p in &accepted {
                if p.nodes.len() > i + 1 && &p.nodes[..=i] == root {
                    blocked_arcs.insert(p.arcs[i]);
                }
            }
            let mut blocked_nodes = vec![false; g.node_count()];
            for n in &root[..i] {
                blocked_nodes[n.0] = true;
            }

            if let Some(spur_nodes) =
                constrained_shortest(g, spur, dst, &blocked_nodes, &blocked_arcs)
            {
                let mut nodes = root[..i].to_vec();
                nodes.extend(spur_nodes);
                let candidate = Route::from_nodes(g, nodes).expect("spur path follows arcs");
                let known = accepted
                    .iter()
                    .chain(candidates.iter())
                    .any(|r| r.nodes == candidate.nodes);
                if !known {
                    candidates.push(candidate);
                }
            }
        }
        let Some(best) = candidates
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.order(b.1))
            .map(|(idx, _)| idx)
        else {
            break;
        };
        accepted.push(candidates.swap_remove(best));
    }
    Ok(accepted)
}

/// All-pairs shortest travel times, used by the dispatcher.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    n: usize,
    dist: Vec<f64>,
}

impl DistanceTable {
    pub fn build(g: &GuidepathGraph) -> Self {
        let n = g.node_count();
        let mut dist = vec![f64::INFINITY; n * n];
        for src in 0..n {
            let row = &mut dist[src * n..(src + 1) * n];
            row[src] = 0.0;
            let mut done = vec![false; n];
            let mut heap = BinaryHeap::new();
            heap.push(Label {
                cost: 0.0,
                nodes: vec![NodeId(src)],
            });
            while let Some(Label { cost, nodes }) = heap.pop() {
                let u = nodes[0];
                if done[u.0] {
                    continue;
                }
                done[u.0] = true;
                for &aid in g.outgoing(u) {
                    let arc = g.arc(aid);
                    let c = cost + arc.weight;
                    if c < row[arc.to.0] {
                        row[arc.to.0] = c;
                        heap.push(Label {
                            cost: c,
                            nodes: vec![arc.to],
                        });
                    }
                }
            }
        }
        DistanceTable { n, dist }
    }

    /// Shortest travel time, `None` when `to` is unreachable.
    pub fn distance(&self, from: NodeId, to: NodeId) -> Option<f64> {
        let d = self.dist[from.0 * self.n + to.0];
        d.is_finite().then_some(d)
    }
}
