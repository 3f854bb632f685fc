use std::fmt::Write as _;

use super::{idle_measure, should_create_predicted, IdleMeasureInputs, PredictionPolicy};
use crate::fleet::{
    dispatch_pending, Assignment, FleetState, Task, TaskId, TaskOrigin, TaskStatus, TravelTimes,
    VehicleId, PREDICTED_PRIORITY,
};
use crate::guidepath::NodeId;
use crate::predictor::{StartPredictor, StationIndex, TaskSequence};

/// The single predicted task awaiting the next operator task.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutstandingPrediction {
    pub task: TaskId,
    pub station: usize,
    pub node: NodeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecisionAction {
    /// a predicted task was created
    Created,
    /// the gate refused at an operator task arrival
    Suppressed,
    /// the outstanding predicted task was dropped before completing
    Cancelled,
    /// right prediction; the operator task joined the predicting vehicle's queue
    Chained,
    /// right prediction, already completed; ordinary dispatch follows
    Matched,
    /// wrong prediction, already completed
    Missed,
}

impl DecisionAction {
    pub fn as_str(self) -> &'static str {
        match self {
            DecisionAction::Created => "created",
            DecisionAction::Suppressed => "suppressed",
            DecisionAction::Cancelled => "cancelled",
            DecisionAction::Chained => "chained",
            DecisionAction::Matched => "matched",
            DecisionAction::Missed => "missed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub time: f64,
    pub idle_measure: f64,
    pub n_idle: usize,
    pub action: DecisionAction,
    pub predicted_node: Option<NodeId>,
    pub actual_node: Option<NodeId>,
}

/// What a handler changed, for the simulator to act on.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Effects {
    /// lost its predicted task while serving it
    pub freed: Option<VehicleId>,
    /// received the operator task behind its predicted task
    pub chained: Option<VehicleId>,
    pub created: Option<TaskId>,
    pub assignments: Vec<Assignment>,
}

#[derive(Clone, Debug)]
pub struct PredictionManager {
    policy: PredictionPolicy,
    stations: StationIndex,
    seq: TaskSequence,
    outstanding: Option<OutstandingPrediction>,
    observed: usize,
    stats: IdleMeasureInputs,
    log: Vec<Decision>,
}

impl PredictionManager {
    pub fn new(policy: PredictionPolicy, stations: StationIndex) -> Self {
        let seq = TaskSequence::new(policy.window.max(1));
        PredictionManager {
            policy,
            stations,
            seq,
            outstanding: None,
            observed: 0,
            stats: IdleMeasureInputs::default(),
            log: Vec::new(),
        }
    }

    pub fn policy(&self) -> &PredictionPolicy {
        &self.policy
    }

    pub fn outstanding(&self) -> Option<OutstandingPrediction> {
        self.outstanding
    }

    pub fn sequence(&self) -> &TaskSequence {
        &self.seq
    }

    pub fn observed(&self) -> usize {
        self.observed
    }

    pub fn log(&self) -> &[Decision] {
        &self.log
    }

    pub fn idle_inputs(&self, now: f64) -> IdleMeasureInputs {
        IdleMeasureInputs {
            elapsed: now,
            ..self.stats
        }
    }

    /// Feeds a completion into the idle measure; predicted tasks are ignored.
    pub fn record_completion(&mut self, task: &Task) {
        if let (TaskOrigin::Operator, Some(d)) = (task.origin, task.duration()) {
            self.stats.completed += 1;
            self.stats.total_duration += d;
        }
    }

    fn note(
        &mut self,
        now: f64,
        state: &FleetState,
        action: DecisionAction,
        predicted: Option<NodeId>,
        actual: Option<NodeId>,
    ) {
        self.log.push(Decision {
            time: now,
            idle_measure: idle_measure(&self.idle_inputs(now)),
            n_idle: state.count_idle(),
            action,
            predicted_node: predicted,
            actual_node: actual,
        });
    }

    /// Handles a freshly created operator task `t` (already in the ledger).
    ///
    /// Records its start, settles the outstanding prediction against it,
    /// dispatches, and then considers creating the next prediction with the
    /// vehicles still idle.
    pub fn on_operator_task_created(
        &mut self,
        now: f64,
        t: TaskId,
        state: &mut FleetState,
        router: &impl TravelTimes,
        predictor: &dyn StartPredictor,
    ) -> Effects {
        let task = state.ledger.task(t).clone();
        debug_assert_eq!(task.origin, TaskOrigin::Operator);
        self.stats.created += 1;
        self.observed += 1;
        if let Ok(k) = self.stations.index_of(task.start) {
            self.seq.push(k);
        }

        let mut effects = Effects::default();
        if let Some(p) = self.outstanding.take() {
            self.settle(now, p, &task, state, &mut effects);
        }
        effects.assignments = dispatch_pending(state, router);
        self.maybe_predict(now, state, router, predictor, true, &mut effects);
        effects
    }

    /// Periodic check: the same creation step with the same guards.
    pub fn on_monitor_tick(
        &mut self,
        now: f64,
        state: &mut FleetState,
        router: &impl TravelTimes,
        predictor: &dyn StartPredictor,
    ) -> Effects {
        let mut effects = Effects::default();
        self.maybe_predict(now, state, router, predictor, false, &mut effects);
        effects
    }

    fn settle(
        &mut self,
        now: f64,
        p: OutstandingPrediction,
        t: &Task,
        state: &mut FleetState,
        effects: &mut Effects,
    ) {
        let predicted = state.ledger.task(p.task).clone();
        let right = p.node == t.start;
        let action = match (predicted.status, predicted.vehicle) {
            (TaskStatus::Completed, _) => {
                if right {
                    DecisionAction::Matched
                } else {
                    DecisionAction::Missed
                }
            }
            (TaskStatus::Assigned | TaskStatus::Executing, Some(v)) if right => {
                state
                    .ledger
                    .assign(t.id, v)
                    .expect("new operator task is pending");
                state.vehicle_mut(v).task_queue.push_back(t.id);
                effects.chained = Some(v);
                DecisionAction::Chained
            }
            (_, vehicle) => {
                if let Some(v) = vehicle {
                    state.vehicle_mut(v).task_queue.retain(|&q| q != p.task);
                    effects.freed = Some(v);
                }
                state
                    .ledger
                    .cancel(p.task)
                    .expect("outstanding prediction is cancellable");
                DecisionAction::Cancelled
            }
        };
        self.note(now, state, action, Some(p.node), Some(t.start));
    }

    fn maybe_predict(
        &mut self,
        now: f64,
        state: &mut FleetState,
        router: &impl TravelTimes,
        predictor: &dyn StartPredictor,
        log_suppressed: bool,
        effects: &mut Effects,
    ) {
        if self.outstanding.is_some() || !self.seq.is_full() {
            return;
        }
        let idle = idle_measure(&self.idle_inputs(now));
        if !should_create_predicted(idle, state.count_idle(), &self.policy) {
            if log_suppressed {
                self.note(now, state, DecisionAction::Suppressed, None, None);
            }
            return;
        }
        let window = self.seq.to_vec();
        let Some(station) = predictor.predict_next(&window, self.observed) else {
            return;
        };
        if station >= self.stations.len() {
            return;
        }
        let node = self.stations.node(station);
        let q = state
            .ledger
            .create(node, node, PREDICTED_PRIORITY, TaskOrigin::Predicted, now);
        self.outstanding = Some(OutstandingPrediction {
            task: q,
            station,
            node,
        });
        self.note(now, state, DecisionAction::Created, Some(node), None);
        effects.created = Some(q);
        effects.assignments.extend(dispatch_pending(state, router));
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `time,idle_measure,n_idle,action,predicted_node,actual_node`
pub fn decision_log_csv(log: &[Decision]) -> String {
    let mut out = String::from("time,idle_measure,n_idle,action,predicted_node,actual_node\n");
    for d in log {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            d.time,
            d.idle_measure,
            d.n_idle,
            d.action.as_str(),
            opt(d.predicted_node),
            opt(d.actual_node)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet::{Location, OPERATOR_PRIORITY};
    use crate::guidepath::{ArcId, DistanceTable, GuidepathGraph};
    use crate::predictor::OraclePredictor;

    struct Fixed(usize);

    impl StartPredictor for Fixed {
        fn predict_next(&self, _: &[usize], _: usize) -> Option<usize> {
            Some(self.0)
        }
    }

    fn line(n: usize) -> GuidepathGraph {
        GuidepathGraph::new(
            n,
            (0..n - 1).flat_map(|i| [(i, i + 1, 1.0), (i + 1, i, 1.0)]),
            None,
        )
        .unwrap()
    }

    fn manager(window: usize, n: usize) -> PredictionManager {
        let policy = PredictionPolicy {
            window,
            required_idle: [0, 0, 0, 0],
            ..Default::default()
        };
        let nodes: Vec<NodeId> = (0..n).map(NodeId).collect();
        PredictionManager::new(policy, StationIndex::new(&nodes))
    }

    fn operator(state: &mut FleetState, start: usize, dest: usize, now: f64) -> TaskId {
        state.ledger.create(
            NodeId(start),
            NodeId(dest),
            OPERATOR_PRIORITY,
            TaskOrigin::Operator,
            now,
        )
    }

    #[test]
    fn below_window_dispatches_without_predicting() {
        let g = line(5);
        let table = DistanceTable::build(&g);
        let mut m = manager(2, 5);
        let mut s = FleetState::new(&[NodeId(0), NodeId(4)]);
        let t = operator(&mut s, 1, 2, 0.0);
        let fx = m.on_operator_task_created(0.0, t, &mut s, &table, &Fixed(3));
        assert_eq!(fx.created, None);
        assert_eq!(fx.assignments.len(), 1);
        assert_eq!(s.ledger.task(t).vehicle, Some(VehicleId(0)));
        assert!(m.log().is_empty());
    }

    #[test]
    fn right_prediction_chains_onto_predicting_vehicle() {
        let g = line(5);
        let table = DistanceTable::build(&g);
        let mut m = manager(1, 5);
        let mut s = FleetState::new(&[NodeId(0), NodeId(2)]);
        let t1 = operator(&mut s, 2, 1, 0.0);
        let fx = m.on_operator_task_created(0.0, t1, &mut s, &table, &Fixed(4));
        let q = fx.created.unwrap();
        let v = s.ledger.task(q).vehicle.unwrap();
        assert_eq!(v, VehicleId(0));
        s.ledger.begin(q).unwrap();
        s.vehicle_mut(v).location = Location::OnArc {
            arc: ArcId(0),
            from: NodeId(0),
            to: NodeId(1),
            progress: 0.5,
        };

        let t2 = operator(&mut s, 4, 0, 1.0);
        let fx = m.on_operator_task_created(1.0, t2, &mut s, &table, &Fixed(4));
        assert_eq!(fx.chained, Some(v));
        assert_eq!(s.ledger.task(t2).vehicle, Some(v));
        assert_eq!(
            s.vehicle(v).task_queue.iter().copied().collect::<Vec<_>>(),
            vec![q, t2]
        );
        assert!(fx.assignments.iter().all(|a| a.task != t2));
        assert_eq!(m.log()[1].action, DecisionAction::Chained);
        assert!(s.ledger.identity_holds());
    }

    #[test]
    fn wrong_prediction_cancels_and_frees() {
        let g = line(5);
        let table = DistanceTable::build(&g);
        let mut m = manager(1, 5);
        let mut s = FleetState::new(&[NodeId(0), NodeId(2)]);
        let t1 = operator(&mut s, 2, 1, 0.0);
        let q = m
            .on_operator_task_created(0.0, t1, &mut s, &table, &Fixed(4))
            .created
            .unwrap();
        let v = s.ledger.task(q).vehicle.unwrap();

        let t2 = operator(&mut s, 0, 3, 1.0);
        let fx = m.on_operator_task_created(1.0, t2, &mut s, &table, &Fixed(4));
        assert_eq!(fx.freed, Some(v));
        assert_eq!(s.ledger.task(q).status, TaskStatus::Cancelled);
        assert!(!s.ledger.active().contains(&q));
        // v is parked at node 0 and free again, so it takes t2 at distance 0
        assert_eq!(s.ledger.task(t2).vehicle, Some(v));
        assert_eq!(m.log()[1].action, DecisionAction::Cancelled);
        assert!(s.ledger.identity_holds());
    }

    #[test]
    fn right_prediction_after_completion_dispatches_normally() {
        let g = line(5);
        let table = DistanceTable::build(&g);
        let mut m = manager(1, 5);
        let mut s = FleetState::new(&[NodeId(0), NodeId(2)]);
        let t1 = operator(&mut s, 2, 1, 0.0);
        let q = m
            .on_operator_task_created(0.0, t1, &mut s, &table, &Fixed(4))
            .created
            .unwrap();
        let v = s.ledger.task(q).vehicle.unwrap();
        s.ledger.begin(q).unwrap();
        s.ledger.complete(q, 4.0).unwrap();
        s.vehicle_mut(v).task_queue.clear();
        s.vehicle_mut(v).location = Location::AtNode(NodeId(4));

        let t2 = operator(&mut s, 4, 0, 5.0);
        let fx = m.on_operator_task_created(5.0, t2, &mut s, &table, &Fixed(4));
        assert_eq!(fx.chained, None);
        let a = fx.assignments.iter().find(|a| a.task == t2).unwrap();
        assert_eq!((a.vehicle, a.distance), (v, 0.0));
        assert_eq!(m.log()[1].action, DecisionAction::Matched);
    }

    #[test]
    fn at_most_one_outstanding() {
        let g = line(5);
        let table = DistanceTable::build(&g);
        let mut m = manager(1, 5);
        let mut s = FleetState::new(&[NodeId(0), NodeId(1), NodeId(2)]);
        let t1 = operator(&mut s, 2, 1, 0.0);
        assert!(m
            .on_operator_task_created(0.0, t1, &mut s, &table, &Fixed(3))
            .created
            .is_some());
        for k in 1..5 {
            assert!(m
                .on_monitor_tick(k as f64, &mut s, &table, &Fixed(3))
                .created
                .is_none());
        }
        let predicted = s
            .ledger
            .all()
            .filter(|t| t.is_predicted() && t.status != TaskStatus::Cancelled)
            .count();
        assert_eq!(predicted, 1);
    }

    #[test]
    fn gate_suppression_is_logged() {
        let g = line(3);
        let table = DistanceTable::build(&g);
        let policy = PredictionPolicy {
            window: 1,
            required_idle: [5, 5, 5, 5],
            ..Default::default()
        };
        let mut m = PredictionManager::new(
            policy,
            StationIndex::new(&[NodeId(0), NodeId(1), NodeId(2)]),
        );
        let mut s = FleetState::new(&[NodeId(0)]);
        let t = operator(&mut s, 1, 2, 0.0);
        let fx = m.on_operator_task_created(
            0.0,
            t,
            &mut s,
            &table,
            &OraclePredictor { starts: vec![1, 2] },
        );
        assert!(fx.created.is_none());
        assert_eq!(m.log()[0].action, DecisionAction::Suppressed);
        let csv = decision_log_csv(m.log());
        assert_eq!(
            csv.lines().next().unwrap(),
            "time,idle_measure,n_idle,action,predicted_node,actual_node"
        );
        assert_eq!(csv.lines().nth(1).unwrap(), "0,0,0,suppressed,,");
    }
}
