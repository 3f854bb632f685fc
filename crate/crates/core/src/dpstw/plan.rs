//! Route reservation with node exclusion.
//!
//! Arc windows alone allow two vehicles to meet head-on at a node, so nodes
//! are reserved too. A vehicle holds a node from the moment it arrives until
//! it leaves on the next arc, and for at least `clearance` seconds after any
//! arrival or departure. Idle vehicles wait in a bay beside their node and
//! hold nothing.
//!
//! For a fixed node sequence the earliest arrival is found by a forward sweep
//! over the free intervals of each node on the path: arriving earlier inside
//! the same free interval never hurts, so one label per (node on path, free
//! interval) suffices.

use super::{ArcReservationTable, Interval, TimeWindow};
use crate::fleet::VehicleId;
use crate::guidepath::{GuidepathGraph, NodeId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeOccupancy {
    pub node: NodeId,
    pub vehicle: VehicleId,
    pub start: f64,
    pub end: f64,
}

impl NodeOccupancy {
    pub fn interval(&self) -> Interval {
        Interval::new(self.start, self.end)
    }
}

/// Per-node occupancy claims. Claims of different vehicles never overlap.
#[derive(Clone, Debug)]
pub struct NodeReservationTable {
    claims: Vec<Vec<NodeOccupancy>>,
}

impl NodeReservationTable {
    pub fn new(node_count: usize) -> Self {
        NodeReservationTable {
            claims: vec![Vec::new(); node_count],
        }
    }

    pub fn claims(&self, node: NodeId) -> &[NodeOccupancy] {
        &self.claims[node.0]
    }

    pub fn insert(&mut self, claim: NodeOccupancy) {
        debug_assert!(claim.end > claim.start);
        debug_assert!(
            self.claims[claim.node.0]
                .iter()
                .all(|c| c.vehicle == claim.vehicle || !c.interval().overlaps(&claim.interval())),
            "node claim {claim:?} overlaps another vehicle"
        );
        let list = &mut self.claims[claim.node.0];
        let pos = list.partition_point(|c| c.start <= claim.start);
        list.insert(pos, claim);
    }

    /// Maximal intervals from `t0` on where no other vehicle holds `node`.
    pub fn free_intervals(&self, node: NodeId, vehicle: VehicleId, t0: f64) -> Vec<Interval> {
        let mut out = Vec::new();
        let mut cursor = t0;
        for c in &self.claims[node.0] {
            if c.vehicle == vehicle || c.end <= cursor {
                continue;
            }
            if c.start > cursor {
                out.push(Interval::new(cursor, c.start));
            }
            cursor = cursor.max(c.end);
        }
        out.push(Interval::new(cursor, f64::INFINITY));
        out
    }

    pub fn release_completed(&mut self, now: f64) -> usize {
        let mut released = 0;
        for list in &mut self.claims {
            let before = list.len();
            list.retain(|c| c.end > now);
            released += before - list.len();
        }
        released
    }

    pub fn release_vehicle_from(&mut self, vehicle: VehicleId, t: f64) -> usize {
        let mut removed = 0;
        for list in &mut self.claims {
            let before = list.len();
            list.retain(|c| !(c.vehicle == vehicle && c.start >= t));
            removed += before - list.len();
        }
        removed
    }

    pub fn is_consistent(&self) -> bool {
        self.claims.iter().all(|list| {
            list.iter().enumerate().all(|(i, a)| {
                list[i + 1..]
                    .iter()
                    .all(|b| a.vehicle == b.vehicle || !a.interval().overlaps(&b.interval()))
            })
        })
    }
}

/// A reserved (or candidate) schedule for one node sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPlan {
    pub nodes: Vec<NodeId>,
    pub windows: Vec<TimeWindow>,
    pub node_claims: Vec<NodeOccupancy>,
}

impl PathPlan {
    pub fn departure(&self) -> Option<f64> {
        self.windows.first().map(|w| w.start)
    }

    pub fn arrival(&self) -> Option<f64> {
        self.windows.last().map(|w| w.end)
    }
}

#[derive(Clone, Copy, Debug)]
struct Label {
    free: Interval,
    arrival: f64,
    depart_prev: f64,
    pred: usize,
}

/// Arc and node reservations plus the path planner.
#[derive(Clone, Debug)]
pub struct DpstwScheduler {
    pub arcs: ArcReservationTable,
    pub nodes: NodeReservationTable,
    clearance: f64,
}

impl DpstwScheduler {
    pub fn new(g: &GuidepathGraph, clearance: f64) -> Self {
        assert!(clearance > 0.0, "node clearance must be positive");
        DpstwScheduler {
            arcs: ArcReservationTable::for_graph(g),
            nodes: NodeReservationTable::new(g.node_count()),
            clearance,
        }
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    /// Earliest-arrival schedule along `nodes`, departing no earlier than `t0`.
    /// Nothing is reserved. A single-node path yields an empty plan.
    pub fn plan(
        &self,
        g: &GuidepathGraph,
        vehicle: VehicleId,
        nodes: &[NodeId],
        t0: f64,
    ) -> PathPlan {
        assert!(!nodes.is_empty());
        let hops = nodes.len() - 1;
        if hops == 0 {
            return PathPlan {
                nodes: nodes.to_vec(),
                windows: Vec::new(),
                node_claims: Vec::new(),
            };
        }
        let delta = self.clearance;
        let mut layers: Vec<Vec<Label>> = Vec::with_capacity(nodes.len());
        layers.push(
            self.nodes
                .free_intervals(nodes[0], vehicle, t0)
                .into_iter()
                .filter(|f| f.start.max(t0) + delta <= f.end)
                .map(|free| Label {
                    free,
                    arrival: free.start.max(t0),
                    depart_prev: f64::NAN,
                    pred: usize::MAX,
                })
                .collect(),
        );

        for hop in 0..hops {
            let arc = g
                .arc_between(nodes[hop], nodes[hop + 1])
                .expect("path follows arcs");
            let w = g.arc(arc).weight;
            let targets = self.nodes.free_intervals(nodes[hop + 1], vehicle, t0);
            let mut best: Vec<Option<Label>> = vec![None; targets.len()];
            for (si, st) in layers[hop].iter().enumerate() {
                let lo = st.arrival;
                // leaving the origin still needs `delta` of clearance there
                let hi = if hop == 0 {
                    st.free.end - delta
                } else {
                    st.free.end
                };
                for (k, target) in targets.iter().enumerate() {
                    let s_min = lo.max(target.start - w);
                    if s_min > hi {
                        break;
                    }
                    let s = self.arcs.earliest_feasible_window(arc, s_min, w).start;
                    if s > hi {
                        break;
                    }
                    let arrival = s + w;
                    if arrival + delta > target.end {
                        continue;
                    }
                    if best[k].is_none_or(|b| arrival < b.arrival) {
                        best[k] = Some(Label {
                            free: *target,
                            arrival,
                            depart_prev: s,
                            pred: si,
                        });
                    }
                }
            }
            let next: Vec<Label> = best.into_iter().flatten().collect();
            assert!(
                !next.is_empty(),
                "the last free interval of every node is unbounded"
            );
            layers.push(next);
        }

        let last = layers[hops]
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.arrival.total_cmp(&b.1.arrival))
            .map(|(i, _)| i)
            .expect("non-empty final layer");
        let mut departs = vec![0.0; hops];
        let mut arrivals = vec![0.0; hops + 1];
        let mut idx = last;
        for hop in (1..=hops).rev() {
            let label = layers[hop][idx];
            departs[hop - 1] = label.depart_prev;
            arrivals[hop] = label.arrival;
            idx = label.pred;
        }

        let mut windows = Vec::with_capacity(hops);
        let mut node_claims = Vec::with_capacity(hops + 1);
        node_claims.push(NodeOccupancy {
            node: nodes[0],
            vehicle,
            start: departs[0],
            end: departs[0] + delta,
        });
        for hop in 0..hops {
            let arc = g
                .arc_between(nodes[hop], nodes[hop + 1])
                .expect("path follows arcs");
            windows.push(TimeWindow {
                arc,
                vehicle,
                start: departs[hop],
                end: arrivals[hop + 1],
            });
            let arrive = arrivals[hop + 1];
            let leave = if hop + 1 < hops {
                departs[hop + 1]
            } else {
                arrive
            };
            node_claims.push(NodeOccupancy {
                node: nodes[hop + 1],
                vehicle,
                start: arrive,
                end: leave.max(arrive + delta),
            });
        }
        PathPlan {
            nodes: nodes.to_vec(),
            windows,
            node_claims,
        }
    }

    pub fn commit(&mut self, plan: &PathPlan) {
        for w in &plan.windows {
            self.arcs.insert(*w);
        }
        for c in &plan.node_claims {
            self.nodes.insert(*c);
        }
    }

    /// Plans and reserves in one step.
    pub fn reserve_path(
        &mut self,
        g: &GuidepathGraph,
        vehicle: VehicleId,
        nodes: &[NodeId],
        t0: f64,
    ) -> PathPlan {
        let plan = self.plan(g, vehicle, nodes, t0);
        self.commit(&plan);
        plan
    }

    /// Drops every reservation of `vehicle` starting at or after `t`.
    pub fn release_vehicle_from(&mut self, vehicle: VehicleId, t: f64) {
        self.arcs.release_vehicle_from(vehicle, t);
        self.nodes.release_vehicle_from(vehicle, t);
    }

    /// Cuts a vehicle's schedule short so it stops at `node`, where it
    /// arrived (or will arrive) at `arrived_at`, leaving no earlier than `stop_at`.
    pub fn stop_at_node(
        &mut self,
        vehicle: VehicleId,
        node: NodeId,
        arrived_at: f64,
        stop_at: f64,
    ) {
        self.release_vehicle_from(vehicle, arrived_at);
        self.nodes.insert(NodeOccupancy {
            node,
            vehicle,
            start: arrived_at,
            end: stop_at.max(arrived_at + self.clearance),
        });
    }

    /// Garbage-collects reservations that ended by `now`.
    pub fn release_completed_windows(&mut self, now: f64) -> usize {
        self.arcs.release_completed_windows(now) + self.nodes.release_completed(now)
    }

    pub fn is_consistent(&self) -> bool {
        self.arcs.is_consistent() && self.nodes.is_consistent()
    }
}
