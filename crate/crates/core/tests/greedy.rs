use fleetlab::fleet::VehicleId;
use fleetlab::greedy::{detect_deadlock, is_unidirectional_ring_safe, ArcLockState, EntryDecision};
use fleetlab::guidepath::{GuidepathGraph, NodeId};
use fleetlab::sim::{make_synthetic_guidepath, SyntheticKind};
use proptest::prelude::*;

fn arc(g: &GuidepathGraph, from: usize, to: usize) -> fleetlab::guidepath::ArcId {
    g.arc_between(NodeId(from), NodeId(to)).unwrap()
}

fn has_opposite_pair(g: &GuidepathGraph) -> bool {
    g.arcs()
        .iter()
        .any(|a| g.arcs().iter().any(|b| b.from == a.to && b.to == a.from))
}

#[test]
fn ring_and_grid_safety() {
    let ring = make_synthetic_guidepath(SyntheticKind::Ring { nodes: 12 }).unwrap();
    assert!(is_unidirectional_ring_safe(&ring));
    let grid = make_synthetic_guidepath(SyntheticKind::Grid {
        width: 5,
        height: 5,
    })
    .unwrap();
    assert!(has_opposite_pair(&grid));
    assert!(!is_unidirectional_ring_safe(&grid));
}

#[test]
fn occupied_ending_node_means_wait() {
    let g = GuidepathGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)], None).unwrap();
    let mut locks = ArcLockState::new(&g, &[NodeId(0), NodeId(1)]);
    assert_eq!(locks.place_on_track(VehicleId(1)), EntryDecision::Granted);
    assert_eq!(
        locks
            .try_enter_arc(&g, VehicleId(0), arc(&g, 0, 1))
            .unwrap(),
        EntryDecision::Wait
    );
    locks.park(VehicleId(1)).unwrap();
    assert_eq!(
        locks
            .try_enter_arc(&g, VehicleId(0), arc(&g, 0, 1))
            .unwrap(),
        EntryDecision::Granted
    );
}

#[test]
fn same_instant_tie_goes_to_lower_id() {
    // vehicles 0 and 1 on nodes 0 and 2, both want node 1
    let g = GuidepathGraph::new(3, [(0, 1, 1.0), (2, 1, 1.0)], None).unwrap();
    let requests = [(VehicleId(0), arc(&g, 0, 1)), (VehicleId(1), arc(&g, 2, 1))];
    for order in [requests, [requests[1], requests[0]]] {
        let mut sorted = order.to_vec();
        sorted.sort_by_key(|r| r.0);
        let mut locks = ArcLockState::new(&g, &[NodeId(0), NodeId(2)]);
        assert_eq!(
            locks.grant_in_order(&g, &sorted).unwrap(),
            vec![VehicleId(0)]
        );
    }
}

#[test]
fn head_on_pair_on_grid_is_a_two_cycle() {
    let g = make_synthetic_guidepath(SyntheticKind::Grid {
        width: 5,
        height: 5,
    })
    .unwrap();
    let mut locks = ArcLockState::new(&g, &[NodeId(6), NodeId(7)]);
    locks.place_on_track(VehicleId(0));
    locks.place_on_track(VehicleId(1));
    let requests = [(VehicleId(0), arc(&g, 6, 7)), (VehicleId(1), arc(&g, 7, 6))];
    assert!(locks.grant_in_order(&g, &requests).unwrap().is_empty());
    assert_eq!(
        detect_deadlock(&g, &locks, &requests),
        vec![vec![VehicleId(0), VehicleId(1)]]
    );
}

#[test]
fn rock_paper_scissors_is_a_three_cycle() {
    let g = GuidepathGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)], None).unwrap();
    let mut locks = ArcLockState::new(&g, &[NodeId(0), NodeId(1), NodeId(2)]);
    for v in 0..3 {
        locks.place_on_track(VehicleId(v));
    }
    let requests: Vec<_> = (0..3)
        .map(|v| (VehicleId(v), arc(&g, v, (v + 1) % 3)))
        .collect();
    let cycles = detect_deadlock(&g, &locks, &requests);
    assert_eq!(cycles.len(), 1);
    assert_eq!(cycles[0].len(), 3);
}

proptest! {
    /// Random grant/arrive/park traffic on a ring keeps the locks consistent
    /// and never produces a wait-for cycle.
    #[test]
    fn ring_traffic_never_deadlocks(ops in proptest::collection::vec((0usize..4, 0u8..3), 1..200)) {
        let g = make_synthetic_guidepath(SyntheticKind::Ring { nodes: 6 }).unwrap();
        let start = [NodeId(0), NodeId(1), NodeId(3), NodeId(4)];
        let mut locks = ArcLockState::new(&g, &start);
        let mut at = start.to_vec();
        let mut moving = [false; 4];
        for (v, op) in ops {
            let id = VehicleId(v);
            match op {
                0 if !moving[v] => {
                    let a = g.outgoing(at[v])[0];
                    if locks.try_enter_arc(&g, id, a).unwrap() == EntryDecision::Granted {
                        moving[v] = true;
                    }
                }
                1 if moving[v] => {
                    at[v] = locks.arrive(&g, id).unwrap();
                    moving[v] = false;
                }
                2 if !moving[v] => {
                    locks.park(id).unwrap();
                }
                _ => {}
            }
            prop_assert!(locks.is_consistent(&g));
            let waiting: Vec<_> = (0..4).filter(|&u| !moving[u]).map(|u| (VehicleId(u), g.outgoing(at[u])[0])).collect();
            prop_assert!(detect_deadlock(&g, &locks, &waiting).is_empty());
        }
    }
}
