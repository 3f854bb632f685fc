//! Post-hoc safety checks over an executed run.

use super::engine::{NodeVisit, RunResult, Traversal};
use crate::guidepath::GuidepathGraph;

const EPS: f64 = 1e-9;

/// Pairs of traversals of one arc whose open intervals intersect.
pub fn arc_overlaps(traversals: &[Traversal]) -> Vec<(Traversal, Traversal)> {
    let mut sorted = traversals.to_vec();
    sorted.sort_by(|a, b| a.arc.0.cmp(&b.arc.0).then(a.enter.total_cmp(&b.enter)));
    let mut out = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in sorted[i + 1..]
            .iter()
            .take_while(|b| b.arc == a.arc && b.enter < a.exit)
        {
            if b.vehicle != a.vehicle && a.enter < b.exit {
                out.push((*a, *b));
            }
        }
    }
    out
}

/// Pairs of vehicles on one node at once. A same-instant handover (one
/// leaves exactly when the other arrives, or leaves its bay exactly when
/// the other arrives) is not a conflict; two arrivals at one instant are.
pub fn node_conflicts(visits: &[NodeVisit]) -> Vec<(NodeVisit, NodeVisit)> {
    let mut sorted = visits.to_vec();
    sorted.sort_by(|a, b| a.node.0.cmp(&b.node.0).then(a.arrive.total_cmp(&b.arrive)));
    let mut out = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in sorted[i + 1..]
            .iter()
            .take_while(|b| b.node == a.node && b.arrive <= a.leave)
        {
            let overlap = (b.arrive < a.leave && a.arrive < b.leave)
                || (b.arrive == a.arrive && !a.from_bay && !b.from_bay);
            if b.vehicle != a.vehicle && overlap {
                out.push((*a, *b));
            }
        }
    }
    out
}

/// Traversals not contained in a window the vehicle reserved on that arc.
pub fn outside_reservations(run: &RunResult) -> Vec<Traversal> {
    run.traversals
        .iter()
        .filter(|t| {
            !run.reservations.iter().any(|w| {
                w.arc == t.arc
                    && w.vehicle == t.vehicle
                    && w.start <= t.enter + EPS
                    && t.exit <= w.end + EPS
            })
        })
        .copied()
        .collect()
}

/// Traversals whose duration differs from the arc weight.
pub fn kinematic_errors(g: &GuidepathGraph, traversals: &[Traversal]) -> Vec<Traversal> {
    traversals
        .iter()
        .filter(|t| ((t.exit - t.enter) - g.arc(t.arc).weight).abs() > EPS)
        .copied()
        .collect()
}
