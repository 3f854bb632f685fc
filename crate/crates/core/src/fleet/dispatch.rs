use super::{FleetState, TaskId, VehicleId};
use crate::guidepath::{DistanceTable, NodeId};

/// Routed travel time between two nodes.
pub trait TravelTimes {
    fn travel_time(&self, from: NodeId, to: NodeId) -> Option<f64>;
}

impl TravelTimes for DistanceTable {
    fn travel_time(&self, from: NodeId, to: NodeId) -> Option<f64> {
        self.distance(from, to)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Assignment {
    pub task: TaskId,
    pub vehicle: VehicleId,
    /// Travel time from the vehicle to the task's start.
    pub distance: f64,
}

/// Idle vehicle with the shortest routed travel time to `start`; ties go to
/// the lowest vehicle id.
pub fn nearest_idle_vehicle(
    state: &FleetState,
    start: NodeId,
    router: &impl TravelTimes,
) -> Option<(VehicleId, f64)> {
    let mut best: Option<(VehicleId, f64)> = None;
    for v in state.vehicles.iter().filter(|v| v.is_idle()) {
        let Some(node) = v.node() else { continue };
        let Some(d) = router.travel_time(node, start) else {
            continue;
        };
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((v.id, d));
        }
    }
    best
}

/// Greedy dispatch: pending tasks in priority order each take the nearest
/// idle vehicle. Tasks without a reachable idle vehicle stay pending.
pub fn dispatch_pending(state: &mut FleetState, router: &impl TravelTimes) -> Vec<Assignment> {
    let mut out = Vec::new();
    for task in state.ledger.pending_in_dispatch_order() {
        if state.count_idle() == 0 {
            break;
        }
        let start = state.ledger.task(task).start;
        let Some((vehicle, distance)) = nearest_idle_vehicle(state, start, router) else {
            continue;
        };
        state
            .ledger
            .assign(task, vehicle)
            .expect("pending task is assignable");
        state.vehicle_mut(vehicle).task_queue.push_back(task);
        out.push(Assignment {
            task,
            vehicle,
            distance,
        });
    }
    out
}
