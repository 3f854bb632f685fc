//! Lock-based greedy scheduling.
//!
//! A vehicle may enter an arc only when the arc and its ending node are free.
//! On a grant it takes both and releases the node it leaves. Nothing prevents
//! circular waits in general, so a wait-for-graph detector is provided, along
//! with the static check for unidirectional rings where no cycle can form.

mod deadlock;

use thiserror::Error;

use crate::fleet::VehicleId;
use crate::guidepath::{ArcId, GuidepathGraph, NodeId};

pub use deadlock::{detect_deadlock, elementary_cycles, WaitForGraph};

#[derive(Debug, Error, PartialEq)]
pub enum GreedyError {
    #[error("vehicle {vehicle} requested arc {from}->{to} but is not at {from}")]
    NotAtArcStart {
        vehicle: VehicleId,
        from: NodeId,
        to: NodeId,
    },
    #[error("vehicle {0} is not on an arc")]
    NotMoving(VehicleId),
    #[error("vehicle {0} is not holding a node")]
    NotHolding(VehicleId),
}

/// Where a vehicle sits with respect to the locks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LockPosition {
    /// Parked beside `node`, holding nothing.
    Bay(NodeId),
    /// On the track at `node`, holding it.
    Holding(NodeId),
    /// Traversing `arc`, holding it and its ending node.
    OnArc(ArcId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryDecision {
    Granted,
    Wait,
}

/// Occupancy of every arc and node.
#[derive(Clone, Debug)]
pub struct ArcLockState {
    arc_holder: Vec<Option<VehicleId>>,
    node_holder: Vec<Option<VehicleId>>,
    positions: Vec<LockPosition>,
}

impl ArcLockState {
    /// Every vehicle starts in the bay of its node.
    pub fn new(g: &GuidepathGraph, start: &[NodeId]) -> Self {
        ArcLockState {
            arc_holder: vec![None; g.arc_count()],
            node_holder: vec![None; g.node_count()],
            positions: start.iter().map(|n| LockPosition::Bay(*n)).collect(),
        }
    }

    pub fn position(&self, vehicle: VehicleId) -> LockPosition {
        self.positions[vehicle.0]
    }

    pub fn arc_holder(&self, arc: ArcId) -> Option<VehicleId> {
        self.arc_holder[arc.0]
    }

    pub fn node_holder(&self, node: NodeId) -> Option<VehicleId> {
        self.node_holder[node.0]
    }

    /// Moves a vehicle from its bay onto the track at its node.
    pub fn place_on_track(&mut self, vehicle: VehicleId) -> EntryDecision {
        match self.positions[vehicle.0] {
            LockPosition::Bay(n) if self.node_holder[n.0].is_none() => {
                self.node_holder[n.0] = Some(vehicle);
                self.positions[vehicle.0] = LockPosition::Holding(n);
                EntryDecision::Granted
            }
            LockPosition::Holding(_) => EntryDecision::Granted,
            _ => EntryDecision::Wait,
        }
    }

    fn node_free_for(&self, node: NodeId, vehicle: VehicleId) -> bool {
        self.node_holder[node.0].is_none_or(|h| h == vehicle)
    }

    /// Grants `arc` iff the arc and its ending node are free (and, for a
    /// vehicle leaving its bay, the starting node too). Waiting changes nothing.
    pub fn try_enter_arc(
        &mut self,
        g: &GuidepathGraph,
        vehicle: VehicleId,
        arc: ArcId,
    ) -> Result<EntryDecision, GreedyError> {
        let a = g.arc(arc);
        let from_bay = match self.positions[vehicle.0] {
            LockPosition::Bay(n) if n == a.from => true,
            LockPosition::Holding(n) if n == a.from => false,
            _ => {
                return Err(GreedyError::NotAtArcStart {
                    vehicle,
                    from: a.from,
                    to: a.to,
                })
            }
        };
        let free = self.arc_holder[arc.0].is_none()
            && self.node_free_for(a.to, vehicle)
            && (!from_bay || self.node_free_for(a.from, vehicle));
        if !free {
            return Ok(EntryDecision::Wait);
        }
        if !from_bay {
            self.node_holder[a.from.0] = None;
        }
        self.arc_holder[arc.0] = Some(vehicle);
        self.node_holder[a.to.0] = Some(vehicle);
        self.positions[vehicle.0] = LockPosition::OnArc(arc);
        Ok(EntryDecision::Granted)
    }

    /// Arrival at the end of the current arc: the arc is released, the
    /// ending node (already held) is kept.
    pub fn arrive(
        &mut self,
        g: &GuidepathGraph,
        vehicle: VehicleId,
    ) -> Result<NodeId, GreedyError> {
        let LockPosition::OnArc(arc) = self.positions[vehicle.0] else {
            return Err(GreedyError::NotMoving(vehicle));
        };
        let to = g.arc(arc).to;
        self.arc_holder[arc.0] = None;
        self.positions[vehicle.0] = LockPosition::Holding(to);
        Ok(to)
    }

    /// Leaves the track into the bay, releasing the node.
    pub fn park(&mut self, vehicle: VehicleId) -> Result<NodeId, GreedyError> {
        match self.positions[vehicle.0] {
            LockPosition::Holding(n) => {
                self.node_holder[n.0] = None;
                self.positions[vehicle.0] = LockPosition::Bay(n);
                Ok(n)
            }
            LockPosition::Bay(n) => Ok(n),
            LockPosition::OnArc(_) => Err(GreedyError::NotHolding(vehicle)),
        }
    }

    /// Resolves simultaneous requests in the given order (callers pass them
    /// sorted by wait start, then vehicle id), repeating until no further
    /// grant is possible. Returns the granted vehicles in grant order.
    pub fn grant_in_order(
        &mut self,
        g: &GuidepathGraph,
        requests: &[(VehicleId, ArcId)],
    ) -> Result<Vec<VehicleId>, GreedyError> {
        let mut granted = Vec::new();
        let mut open: Vec<(VehicleId, ArcId)> = requests.to_vec();
        loop {
            let mut progress = false;
            let mut still = Vec::with_capacity(open.len());
            for (v, arc) in open {
                if self.try_enter_arc(g, v, arc)? == EntryDecision::Granted {
                    granted.push(v);
                    progress = true;
                } else {
                    still.push((v, arc));
                }
            }
            open = still;
            if !progress || open.is_empty() {
                return Ok(granted);
            }
        }
    }

    /// No arc or node is claimed by two vehicles and every moving vehicle
    /// holds exactly its arc.
    pub fn is_consistent(&self, g: &GuidepathGraph) -> bool {
        self.positions.iter().enumerate().all(|(i, p)| match p {
            LockPosition::OnArc(a) => {
                self.arc_holder[a.0] == Some(VehicleId(i))
                    && self.node_holder[g.arc(*a).to.0] == Some(VehicleId(i))
            }
            LockPosition::Holding(n) => self.node_holder[n.0] == Some(VehicleId(i)),
            LockPosition::Bay(_) => true,
        }) && self
            .arc_holder
            .iter()
            .flatten()
            .all(|v| matches!(self.positions[v.0], LockPosition::OnArc(_)))
    }
}

/// True iff no node pair is linked in both directions and the arcs form one
/// directed cycle through every node.
pub fn is_unidirectional_ring_safe(g: &GuidepathGraph) -> bool {
    let n = g.node_count();
    if n < 2 || g.arc_count() != n {
        return false;
    }
    if g.arcs()
        .iter()
        .any(|a| g.arc_between(a.to, a.from).is_some())
    {
        return false;
    }
    if g.nodes()
        .any(|v| g.outgoing(v).len() != 1 || g.incoming(v).len() != 1)
    {
        return false;
    }
    let mut seen = vec![false; n];
    let mut at = NodeId(0);
    for _ in 0..n {
        if seen[at.0] {
            return false;
        }
        seen[at.0] = true;
        at = g.arc(g.outgoing(at)[0]).to;
    }
    at == NodeId(0) && seen.iter().all(|s| *s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> GuidepathGraph {
        GuidepathGraph::new(n, (0..n).map(|i| (i, (i + 1) % n, 1.0)), None).unwrap()
    }

    fn grid(w: usize, h: usize) -> GuidepathGraph {
        let mut arcs = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if x + 1 < w {
                    arcs.extend([(i, i + 1, 1.0), (i + 1, i, 1.0)]);
                }
                if y + 1 < h {
                    arcs.extend([(i, i + w, 1.0), (i + w, i, 1.0)]);
                }
            }
        }
        GuidepathGraph::new(w * h, arcs, None).unwrap()
    }

    #[test]
    fn free_arc_is_granted() {
        let g = ring(4);
        let mut locks = ArcLockState::new(&g, &[NodeId(0)]);
        assert_eq!(locks.place_on_track(VehicleId(0)), EntryDecision::Granted);
        assert_eq!(
            locks.try_enter_arc(&g, VehicleId(0), ArcId(0)),
            Ok(EntryDecision::Granted)
        );
        assert_eq!(locks.node_holder(NodeId(0)), None);
        assert_eq!(locks.node_holder(NodeId(1)), Some(VehicleId(0)));
        assert!(locks.is_consistent(&g));
        assert_eq!(locks.arrive(&g, VehicleId(0)), Ok(NodeId(1)));
        assert_eq!(locks.arc_holder(ArcId(0)), None);
    }

    #[test]
    fn occupied_ending_node_means_wait() {
        let g = ring(4);
        let mut locks = ArcLockState::new(&g, &[NodeId(0), NodeId(1)]);
        locks.place_on_track(VehicleId(0));
        locks.place_on_track(VehicleId(1));
        let before = locks.clone();
        assert_eq!(
            locks.try_enter_arc(&g, VehicleId(0), ArcId(0)),
            Ok(EntryDecision::Wait)
        );
        assert_eq!(locks.positions, before.positions);
        assert_eq!(locks.node_holder, before.node_holder);
    }

    #[test]
    fn wrong_start_is_contract_violation() {
        let g = ring(4);
        let mut locks = ArcLockState::new(&g, &[NodeId(2)]);
        assert!(matches!(
            locks.try_enter_arc(&g, VehicleId(0), ArcId(0)),
            Err(GreedyError::NotAtArcStart { .. })
        ));
    }

    #[test]
    fn same_instant_requests_lowest_id_first() {
        // vehicles 0 and 1 both at node 0's bay... use two feeder arcs into node 2
        let g = GuidepathGraph::new(3, [(0, 2, 1.0), (1, 2, 1.0)], None).unwrap();
        for order in [[0usize, 1], [1, 0]] {
            let mut locks = ArcLockState::new(&g, &[NodeId(0), NodeId(1)]);
            let mut requests: Vec<(VehicleId, ArcId)> =
                order.iter().map(|&v| (VehicleId(v), ArcId(v))).collect();
            // identical wait start, so the id decides
            requests.sort_by_key(|r| r.0);
            let granted = locks.grant_in_order(&g, &requests).unwrap();
            assert_eq!(granted, vec![VehicleId(0)]);
        }
    }

    #[test]
    fn ring_is_safe() {
        assert!(is_unidirectional_ring_safe(&ring(12)));
        for n in 3..=20 {
            assert!(is_unidirectional_ring_safe(&ring(n)));
        }
    }

    #[test]
    fn opposite_arcs_are_unsafe() {
        let g = GuidepathGraph::new(
            3,
            [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 0, 1.0)],
            None,
        )
        .unwrap();
        assert!(!is_unidirectional_ring_safe(&g));
        assert!(!is_unidirectional_ring_safe(&grid(5, 5)));
    }

    #[test]
    fn two_disjoint_cycles_are_not_a_ring() {
        let g = GuidepathGraph::new(
            6,
            [
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 0, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (5, 3, 1.0),
            ],
            None,
        )
        .unwrap();
        assert!(!is_unidirectional_ring_safe(&g));
    }
}
