//! Scripted task-arrival scenarios for the prediction manager. Each returns
//! a description of the first state that differs from the expected one.

use fleetlab::fleet::{
    FleetState, Location, TaskId, TaskOrigin, TaskStatus, VehicleId, OPERATOR_PRIORITY,
};
use fleetlab::guidepath::{ArcId, DistanceTable, GuidepathGraph, NodeId};
use fleetlab::prediction::{DecisionAction, PredictionManager, PredictionPolicy};
use fleetlab::predictor::{StartPredictor, StationIndex};

/// Always forecasts one station.
pub struct Fixed(pub usize);

impl StartPredictor for Fixed {
    fn predict_next(&self, _: &[usize], _: usize) -> Option<usize> {
        Some(self.0)
    }
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

struct Rig {
    table: DistanceTable,
    manager: PredictionManager,
    state: FleetState,
}

/// Bidirectional line 0 - 1 - 2 - 3 - 4 with vehicles at 0 and 2; the
/// gate always opens and the window is one task long.
fn rig() -> Rig {
    let g = GuidepathGraph::new(
        5,
        (0..4).flat_map(|i| [(i, i + 1, 1.0), (i + 1, i, 1.0)]),
        None,
    )
    .unwrap();
    let policy = PredictionPolicy {
        window: 1,
        required_idle: [0, 0, 0, 0],
        ..Default::default()
    };
    let stations: Vec<NodeId> = (0..5).map(NodeId).collect();
    Rig {
        table: DistanceTable::build(&g),
        manager: PredictionManager::new(policy, StationIndex::new(&stations)),
        state: FleetState::new(&[NodeId(0), NodeId(2)]),
    }
}

impl Rig {
    fn arrive(
        &mut self,
        now: f64,
        start: usize,
        dest: usize,
    ) -> (TaskId, fleetlab::prediction::Effects) {
        let t = self.state.ledger.create(
            NodeId(start),
            NodeId(dest),
            OPERATOR_PRIORITY,
            TaskOrigin::Operator,
            now,
        );
        let fx =
            self.manager
                .on_operator_task_created(now, t, &mut self.state, &self.table, &Fixed(4));
        (t, fx)
    }

    /// First arrival: t1 2->1 takes the vehicle at 2; a prediction for
    /// station 4 goes to the vehicle at 0.
    fn with_prediction(&mut self) -> Result<(TaskId, VehicleId), String> {
        let (_, fx) = self.arrive(0.0, 2, 1);
        let q = fx.created.ok_or("no predicted task created")?;
        let v = self
            .state
            .ledger
            .task(q)
            .vehicle
            .ok_or("predicted task not dispatched")?;
        ensure!(v == VehicleId(0), "prediction went to {v}, expected v0");
        ensure!(
            self.state.ledger.task(q).start == NodeId(4),
            "prediction targets the wrong node"
        );
        Ok((q, v))
    }
}

/// Wrong prediction: p is cancelled, v freed, t dispatched to the nearest
/// idle vehicle (v itself here).
pub fn wrong_prediction_cancels() -> Result<(), String> {
    let mut r = rig();
    let (q, v) = r.with_prediction()?;
    r.state.ledger.begin(q).map_err(|e| e.to_string())?;
    let (t2, fx) = r.arrive(1.0, 0, 3);
    ensure!(fx.freed == Some(v), "freed {:?}", fx.freed);
    ensure!(
        r.state.ledger.task(q).status == TaskStatus::Cancelled,
        "p not cancelled"
    );
    ensure!(
        !r.state.vehicle(v).task_queue.contains(&q),
        "p still queued on v"
    );
    ensure!(
        r.state.ledger.task(t2).vehicle == Some(v),
        "t not dispatched to v"
    );
    ensure!(
        fx.assignments
            .iter()
            .any(|a| a.task == t2 && a.distance == 0.0),
        "t not dispatched at distance 0"
    );
    ensure!(
        r.manager.log()[1].action == DecisionAction::Cancelled,
        "decision {:?}",
        r.manager.log()[1].action
    );
    ensure!(r.state.ledger.identity_holds(), "ledger identity broken");
    Ok(())
}

/// Right prediction with p still executing: t joins v's queue behind p and
/// is not dispatched separately.
pub fn right_prediction_chains() -> Result<(), String> {
    let mut r = rig();
    let (q, v) = r.with_prediction()?;
    r.state.ledger.begin(q).map_err(|e| e.to_string())?;
    r.state.vehicle_mut(v).location = Location::OnArc {
        arc: ArcId(0),
        from: NodeId(0),
        to: NodeId(1),
        progress: 0.3,
    };
    let (t2, fx) = r.arrive(1.0, 4, 0);
    ensure!(fx.chained == Some(v), "chained {:?}", fx.chained);
    let queue: Vec<TaskId> = r.state.vehicle(v).task_queue.iter().copied().collect();
    ensure!(queue == vec![q, t2], "queue {queue:?}");
    ensure!(
        fx.assignments.iter().all(|a| a.task != t2),
        "t was dispatched separately"
    );
    ensure!(
        r.state.ledger.task(q).status == TaskStatus::Executing,
        "p disturbed"
    );
    ensure!(
        r.manager.log()[1].action == DecisionAction::Chained,
        "decision {:?}",
        r.manager.log()[1].action
    );
    Ok(())
}

/// Right prediction with p completed: v waits at s and takes t at distance 0.
pub fn right_prediction_after_completion() -> Result<(), String> {
    let mut r = rig();
    let (q, v) = r.with_prediction()?;
    r.state.ledger.begin(q).map_err(|e| e.to_string())?;
    r.state.ledger.complete(q, 4.0).map_err(|e| e.to_string())?;
    r.state.vehicle_mut(v).task_queue.clear();
    r.state.vehicle_mut(v).location = Location::AtNode(NodeId(4));
    let (t2, fx) = r.arrive(5.0, 4, 0);
    ensure!(
        fx.chained.is_none() && fx.freed.is_none(),
        "unexpected chain or free"
    );
    let a = fx
        .assignments
        .iter()
        .find(|a| a.task == t2)
        .ok_or("t not dispatched")?;
    ensure!(
        a.vehicle == v && a.distance == 0.0,
        "t went to {} at distance {}",
        a.vehicle,
        a.distance
    );
    ensure!(
        r.manager.log()[1].action == DecisionAction::Matched,
        "decision {:?}",
        r.manager.log()[1].action
    );
    Ok(())
}
