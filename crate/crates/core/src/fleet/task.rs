use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{FleetError, VehicleId};
use crate::guidepath::NodeId;

/// Priority of operator tasks unless specified otherwise.
pub const OPERATOR_PRIORITY: i32 = 10;
/// Predicted tasks always rank below operator work.
pub const PREDICTED_PRIORITY: i32 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u64);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskOrigin {
    Operator,
    Predicted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    Assigned,
    Executing,
    Completed,
    Cancelled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub id: TaskId,
    pub start: NodeId,
    pub destination: NodeId,
    pub priority: i32,
    pub origin: TaskOrigin,
    pub status: TaskStatus,
    pub created_at: f64,
    pub completed_at: Option<f64>,
    pub vehicle: Option<VehicleId>,
}

impl Task {
    /// Wall time between creation and completion.
    pub fn duration(&self) -> Option<f64> {
        self.completed_at.map(|end| end - self.created_at)
    }

    pub fn is_predicted(&self) -> bool {
        self.origin == TaskOrigin::Predicted
    }
}

/// Task bookkeeping: `T` (all live tasks), `C` (completed), `Q = T \ C` (active).
///
/// Cancelled predicted tasks leave `T` altogether, so the identity holds
/// with `T` meaning every non-cancelled task.
#[derive(Clone, Debug, Default)]
pub struct TaskLedger {
    tasks: BTreeMap<TaskId, Task>,
    completed: BTreeSet<TaskId>,
    active: BTreeSet<TaskId>,
    cancelled: BTreeSet<TaskId>,
    next_id: u64,
}

impl TaskLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(
        &mut self,
        start: NodeId,
        destination: NodeId,
        priority: i32,
        origin: TaskOrigin,
        created_at: f64,
    ) -> TaskId {
        let id = TaskId(self.next_id);
        self.next_id += 1;
        self.tasks.insert(
            id,
            Task {
                id,
                start,
                destination,
                priority,
                origin,
                status: TaskStatus::Pending,
                created_at,
                completed_at: None,
                vehicle: None,
            },
        );
        self.active.insert(id);
        id
    }

    pub fn get(&self, id: TaskId) -> Option<&Task> {
        self.tasks.get(&id)
    }

    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[&id]
    }

    fn transition(
        &mut self,
        id: TaskId,
        allowed: &[TaskStatus],
        to: TaskStatus,
    ) -> Result<&mut Task, FleetError> {
        let task = self.tasks.get_mut(&id).ok_or(FleetError::UnknownTask(id))?;
        if !allowed.contains(&task.status) {
            return Err(FleetError::IllegalTransition {
                task: id,
                from: task.status,
                to,
            });
        }
        task.status = to;
        Ok(task)
    }

    pub fn assign(&mut self, id: TaskId, vehicle: VehicleId) -> Result<(), FleetError> {
        let task = self.transition(id, &[TaskStatus::Pending], TaskStatus::Assigned)?;
        task.vehicle = Some(vehicle);
        Ok(())
    }

    pub fn begin(&mut self, id: TaskId) -> Result<(), FleetError> {
        self.transition(id, &[TaskStatus::Assigned], TaskStatus::Executing)
            .map(|_| ())
    }

    pub fn complete(&mut self, id: TaskId, at: f64) -> Result<(), FleetError> {
        let task = self.transition(id, &[TaskStatus::Executing], TaskStatus::Completed)?;
        debug_assert!(at >= task.created_at);
        task.completed_at = Some(at);
        self.active.remove(&id);
        self.completed.insert(id);
        Ok(())
    }

    /// Cancels a predicted task. Operator tasks are never cancelled.
    pub fn cancel(&mut self, id: TaskId) -> Result<(), FleetError> {
        let task = self.tasks.get(&id).ok_or(FleetError::UnknownTask(id))?;
        if task.origin != TaskOrigin::Predicted {
            return Err(FleetError::CancelOperatorTask(id));
        }
        self.transition(
            id,
            &[
                TaskStatus::Pending,
                TaskStatus::Assigned,
                TaskStatus::Executing,
            ],
            TaskStatus::Cancelled,
        )?;
        self.active.remove(&id);
        self.cancelled.insert(id);
        Ok(())
    }

    /// Every task ever created, including cancelled ones.
    pub fn all(&self) -> impl Iterator<Item = &Task> {
        self.tasks.values()
    }

    pub fn completed(&self) -> &BTreeSet<TaskId> {
        &self.completed
    }

    pub fn active(&self) -> &BTreeSet<TaskId> {
        &self.active
    }

    pub fn cancelled(&self) -> &BTreeSet<TaskId> {
        &self.cancelled
    }

    /// Pending tasks in dispatch order: priority desc, then older first, then lower id.
    pub fn pending_in_dispatch_order(&self) -> Vec<TaskId> {
        let mut pending: Vec<&Task> = self
            .active
            .iter()
            .map(|id| &self.tasks[id])
            .filter(|t| t.status == TaskStatus::Pending)
            .collect();
        pending.sort_by(|a, b| {
            b.priority
                .cmp(&a.priority)
                .then_with(|| a.created_at.total_cmp(&b.created_at))
                .then_with(|| a.id.cmp(&b.id))
        });
        pending.into_iter().map(|t| t.id).collect()
    }

    /// Checks `Q = T \ C` with `T` excluding cancelled tasks.
    pub fn identity_holds(&self) -> bool {
        let live: BTreeSet<TaskId> = self
            .tasks
            .keys()
            .filter(|id| !self.cancelled.contains(id))
            .copied()
            .collect();
        let expected: BTreeSet<TaskId> = live.difference(&self.completed).copied().collect();
        expected == self.active && self.completed.is_disjoint(&self.cancelled)
    }

    /// Number of operator tasks created so far.
    pub fn operator_created(&self) -> usize {
        self.tasks
            .values()
            .filter(|t| t.origin == TaskOrigin::Operator)
            .count()
    }
}
