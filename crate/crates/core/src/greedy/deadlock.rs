use std::collections::BTreeSet;

use super::{ArcLockState, LockPosition};
use crate::fleet::VehicleId;
use crate::guidepath::{ArcId, GuidepathGraph};

/// Edges `waiter -> holder`, rebuilt from the lock state on demand.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WaitForGraph {
    pub edges: BTreeSet<(VehicleId, VehicleId)>,
}

impl WaitForGraph {
    pub fn build(
        g: &GuidepathGraph,
        locks: &ArcLockState,
        requests: &[(VehicleId, ArcId)],
    ) -> Self {
        let mut edges = BTreeSet::new();
        for &(waiter, arc) in requests {
            let a = g.arc(arc);
            let mut holders = vec![locks.arc_holder(arc), locks.node_holder(a.to)];
            if locks.position(waiter) == LockPosition::Bay(a.from) {
                holders.push(locks.node_holder(a.from));
            }
            for holder in holders.into_iter().flatten() {
                if holder != waiter {
                    edges.insert((waiter, holder));
                }
            }
        }
        WaitForGraph { edges }
    }

    fn successors(&self, v: VehicleId) -> impl Iterator<Item = VehicleId> + '_ {
        self.edges
            .range((v, VehicleId(0))..=(v, VehicleId(usize::MAX)))
            .map(|e| e.1)
    }

    fn vertices(&self) -> BTreeSet<VehicleId> {
        self.edges.iter().flat_map(|e| [e.0, e.1]).collect()
    }
}

/// All elementary cycles, each rotated to start at its smallest vehicle id.
pub fn elementary_cycles(graph: &WaitForGraph) -> Vec<Vec<VehicleId>> {
    fn extend(
        graph: &WaitForGraph,
        root: VehicleId,
        path: &mut Vec<VehicleId>,
        out: &mut Vec<Vec<VehicleId>>,
    ) {
        let last = *path.last().expect("path starts at root");
        for next in graph.successors(last) {
            if next == root {
                out.push(path.clone());
            } else if next > root && !path.contains(&next) {
                path.push(next);
                extend(graph, root, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    for root in graph.vertices() {
        extend(graph, root, &mut vec![root], &mut out);
    }
    out
}

/// Cycles in the wait-for graph of the pending entry requests. Empty means
/// no deadlock right now.
pub fn detect_deadlock(
    g: &GuidepathGraph,
    locks: &ArcLockState,
    requests: &[(VehicleId, ArcId)],
) -> Vec<Vec<VehicleId>> {
    elementary_cycles(&WaitForGraph::build(g, locks, requests))
}
