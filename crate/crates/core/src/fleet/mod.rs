//! Tasks, vehicles and the greedy nearest-idle-vehicle dispatcher.

mod dispatch;
mod task;

use std::collections::VecDeque;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guidepath::{ArcId, NodeId};

pub use dispatch::{dispatch_pending, nearest_idle_vehicle, Assignment, TravelTimes};
pub use task::{
    Task, TaskId, TaskLedger, TaskOrigin, TaskStatus, OPERATOR_PRIORITY, PREDICTED_PRIORITY,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub usize);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum FleetError {
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("task {task}: illegal transition {from:?} -> {to:?}")]
    IllegalTransition {
        task: TaskId,
        from: TaskStatus,
        to: TaskStatus,
    },
    #[error("operator task {0} cannot be cancelled")]
    CancelOperatorTask(TaskId),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Location {
    AtNode(NodeId),
    /// Traversing `arc`; `progress` is in `[0, 1]`.
    OnArc {
        arc: ArcId,
        from: NodeId,
        to: NodeId,
        progress: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VehicleStatus {
    Idle,
    Busy,
}

/// An AGV. It executes its task queue strictly in order; the head is the
/// task being worked on.
#[derive(Clone, Debug)]
pub struct Vehicle {
    pub id: VehicleId,
    pub location: Location,
    pub task_queue: VecDeque<TaskId>,
}

impl Vehicle {
    pub fn parked(id: VehicleId, node: NodeId) -> Self {
        Vehicle {
            id,
            location: Location::AtNode(node),
            task_queue: VecDeque::new(),
        }
    }

    pub fn is_moving(&self) -> bool {
        matches!(self.location, Location::OnArc { .. })
    }

    pub fn status(&self) -> VehicleStatus {
        if self.task_queue.is_empty() && !self.is_moving() {
            VehicleStatus::Idle
        } else {
            VehicleStatus::Busy
        }
    }

    pub fn is_idle(&self) -> bool {
        self.status() == VehicleStatus::Idle
    }

    /// Node the vehicle is parked at, if any.
    pub fn node(&self) -> Option<NodeId> {
        match self.location {
            Location::AtNode(n) => Some(n),
            Location::OnArc { .. } => None,
        }
    }
}

/// Vehicles plus the task ledger; mutated only by the coordinator loop.
#[derive(Clone, Debug)]
pub struct FleetState {
    pub vehicles: Vec<Vehicle>,
    pub ledger: TaskLedger,
}

impl FleetState {
    pub fn new(positions: &[NodeId]) -> Self {
        let vehicles = positions
            .iter()
            .enumerate()
            .map(|(i, n)| Vehicle::parked(VehicleId(i), *n))
            .collect();
        FleetState {
            vehicles,
            ledger: TaskLedger::new(),
        }
    }

    pub fn vehicle(&self, id: VehicleId) -> &Vehicle {
        &self.vehicles[id.0]
    }

    pub fn vehicle_mut(&mut self, id: VehicleId) -> &mut Vehicle {
        &mut self.vehicles[id.0]
    }

    pub fn count_idle(&self) -> usize {
        self.vehicles.iter().filter(|v| v.is_idle()).count()
    }

    /// The vehicle whose queue currently holds `task`.
    pub fn holder_of(&self, task: TaskId) -> Option<VehicleId> {
        self.vehicles
            .iter()
            .find(|v| v.task_queue.contains(&task))
            .map(|v| v.id)
    }

    /// Per-vehicle invariants: at most one executing task, held at the queue head.
    pub fn executing_invariant_holds(&self) -> bool {
        self.vehicles.iter().all(|v| {
            let executing: Vec<usize> = v
                .task_queue
                .iter()
                .enumerate()
                .filter(|(_, t)| self.ledger.task(**t).status == TaskStatus::Executing)
                .map(|(i, _)| i)
                .collect();
            executing.is_empty() || executing == [0]
        })
    }
}

/// Round-robin placement over a seeded shuffle of the stations.
pub fn initial_placement(stations: &[NodeId], vehicles: usize, seed: u64) -> Vec<NodeId> {
    assert!(!stations.is_empty(), "placement needs at least one station");
    let mut order = stations.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..vehicles).map(|i| order[i % order.len()]).collect()
}
