//! The discrete-event loop.
//!
//! Events at one instant are handled in `(time, seq)` order, then the fleet
//! is settled: pending tasks are dispatched, vehicles with new work are
//! routed, and lock requests are granted until nothing changes. Idle
//! vehicles wait in a bay beside their node, off the track.

use std::collections::{BTreeMap, HashMap};

use super::config::SchedulerKind;
use super::events::{EventKind, EventQueue};
use super::workload::TaskSpec;
use super::SimError;
use crate::dpstw::{DpstwScheduler, PathPlan, TimeWindow};
use crate::fleet::{
    dispatch_pending, Assignment, FleetState, Location, TaskId, TaskOrigin, TaskStatus, VehicleId,
    OPERATOR_PRIORITY,
};
use crate::greedy::{detect_deadlock, ArcLockState, EntryDecision, LockPosition};
use crate::guidepath::{k_shortest_paths, ArcId, DistanceTable, GuidepathGraph, NodeId, Route};
use crate::prediction::{Decision, Effects, PredictionManager, PredictionPolicy};
use crate::predictor::{StartPredictor, StationIndex};

/// Everything fixed across runs that share a guidepath.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub graph: GuidepathGraph,
    pub stations: Vec<NodeId>,
    /// starting node of each vehicle
    pub placement: Vec<NodeId>,
    pub scheduler: SchedulerKind,
    pub routing_k: usize,
    pub node_clearance: f64,
    pub policy: PredictionPolicy,
    pub distances: DistanceTable,
}

impl Scenario {
    pub fn new(
        graph: GuidepathGraph,
        placement: Vec<NodeId>,
        scheduler: SchedulerKind,
        routing_k: usize,
        node_clearance: f64,
        policy: PredictionPolicy,
    ) -> Result<Self, SimError> {
        if placement.is_empty() {
            return Err(SimError::Config("at least one vehicle is required".into()));
        }
        let distances = DistanceTable::build(&graph);
        let stations = graph.stations().to_vec();
        for &from in stations.iter().chain(&placement) {
            graph
                .contains(from)
                .then_some(())
                .ok_or(SimError::Config(format!("node {from} not in guidepath")))?;
            for &to in &stations {
                if distances.distance(from, to).is_none() {
                    return Err(SimError::Unreachable { from, to });
                }
            }
        }
        Ok(Scenario {
            graph,
            stations,
            placement,
            scheduler,
            routing_k,
            node_clearance,
            policy,
            distances,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InjectedDelay {
    pub vehicle: VehicleId,
    pub at: f64,
    pub duration: f64,
}

#[derive(Default)]
pub struct RunOptions<'p> {
    /// enables prediction when set
    pub predictor: Option<&'p dyn StartPredictor>,
    pub delays: Vec<InjectedDelay>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunOutcome {
    Completed,
    Deadlock {
        time: f64,
        cycles: Vec<Vec<VehicleId>>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskRecord {
    pub id: TaskId,
    pub origin: TaskOrigin,
    pub start: NodeId,
    pub destination: NodeId,
    pub created_at: f64,
    pub completed_at: Option<f64>,
    pub status: TaskStatus,
    pub vehicle: Option<VehicleId>,
}

/// One arc traversal as executed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Traversal {
    pub vehicle: VehicleId,
    pub arc: ArcId,
    pub enter: f64,
    pub exit: f64,
}

/// Time a vehicle spent on the track at a node, `[arrive, leave]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeVisit {
    pub vehicle: VehicleId,
    pub node: NodeId,
    pub arrive: f64,
    pub leave: f64,
    /// entered the track from the bay rather than off an arc
    pub from_bay: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub time: f64,
    pub kind: &'static str,
    pub vehicle: Option<VehicleId>,
    pub task: Option<TaskId>,
    pub node: Option<NodeId>,
    pub arc: Option<(NodeId, NodeId)>,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: RunOutcome,
    /// every task in creation order
    pub tasks: Vec<TaskRecord>,
    /// task id of each issued stream entry
    pub operator_ids: Vec<TaskId>,
    pub log: Vec<LogRow>,
    pub decisions: Vec<Decision>,
    pub traversals: Vec<Traversal>,
    pub node_visits: Vec<NodeVisit>,
    /// every arc window ever committed, including later truncated ones
    pub reservations: Vec<TimeWindow>,
    /// seconds with at least one idle vehicle
    pub idle_time: f64,
    pub end_time: f64,
}

impl RunResult {
    pub fn is_deadlock(&self) -> bool {
        matches!(self.outcome, RunOutcome::Deadlock { .. })
    }

    pub fn idle_fraction(&self) -> f64 {
        if self.end_time > 0.0 {
            self.idle_time / self.end_time
        } else {
            1.0
        }
    }

    pub fn operator_tasks(&self) -> impl Iterator<Item = &TaskRecord> {
        self.tasks
            .iter()
            .filter(|t| t.origin == TaskOrigin::Operator)
    }
}

#[derive(Clone, Debug, Default)]
struct Agent {
    task: Option<TaskId>,
    route: Vec<NodeId>,
    arcs: Vec<ArcId>,
    windows: Vec<TimeWindow>,
    /// route index where the task begins, until it has begun
    pickup: Option<usize>,
    pos: usize,
    on_arc: bool,
    departed: bool,
    epoch: u64,
    delayed: bool,
    pending_delay: f64,
    visit: Option<(NodeId, f64)>,
    enter: f64,
}

enum Backend {
    Dpstw(DpstwScheduler),
    Greedy {
        locks: ArcLockState,
        requests: BTreeMap<VehicleId, (f64, ArcId)>,
    },
}

struct Simulation<'a> {
    sc: &'a Scenario,
    stream: &'a [TaskSpec],
    predictor: Option<&'a dyn StartPredictor>,
    queue: EventQueue,
    state: FleetState,
    agents: Vec<Agent>,
    backend: Backend,
    manager: Option<PredictionManager>,
    routes: HashMap<(NodeId, NodeId), Vec<Route>>,
    operator_ids: Vec<TaskId>,
    open_operator: usize,
    log: Vec<LogRow>,
    traversals: Vec<Traversal>,
    node_visits: Vec<NodeVisit>,
    reservations: Vec<TimeWindow>,
}

/// Runs the stream to completion (or deadlock). Bit-for-bit deterministic.
pub fn simulate(
    sc: &Scenario,
    stream: &[TaskSpec],
    options: RunOptions<'_>,
) -> Result<RunResult, SimError> {
    for t in stream {
        if !sc.graph.contains(t.start) || !sc.graph.contains(t.destination) {
            return Err(SimError::Config(format!(
                "task {}->{} outside the guidepath",
                t.start, t.destination
            )));
        }
        for &v in &sc.placement {
            if sc.distances.distance(v, t.start).is_none()
                || sc.distances.distance(t.start, t.destination).is_none()
            {
                return Err(SimError::Unreachable {
                    from: t.start,
                    to: t.destination,
                });
            }
        }
    }
    let backend = match sc.scheduler {
        SchedulerKind::Dpstw => Backend::Dpstw(DpstwScheduler::new(&sc.graph, sc.node_clearance)),
        SchedulerKind::Greedy => Backend::Greedy {
            locks: ArcLockState::new(&sc.graph, &sc.placement),
            requests: BTreeMap::new(),
        },
    };
    let manager = options
        .predictor
        .map(|_| PredictionManager::new(sc.policy.clone(), StationIndex::new(&sc.stations)));
    let mut sim = Simulation {
        sc,
        stream,
        predictor: options.predictor,
        queue: EventQueue::new(),
        state: FleetState::new(&sc.placement),
        agents: vec![Agent::default(); sc.placement.len()],
        backend,
        manager,
        routes: HashMap::new(),
        operator_ids: Vec::with_capacity(stream.len()),
        open_operator: 0,
        log: Vec::new(),
        traversals: Vec::new(),
        node_visits: Vec::new(),
        reservations: Vec::new(),
    };
    if let Some(first) = stream.first() {
        sim.queue.push(first.created_at, EventKind::TaskCreated(0));
    }
    if sim.manager.is_some() && !stream.is_empty() {
        sim.queue
            .push(sc.policy.monitor_period, EventKind::MonitorTick);
    }
    for d in &options.delays {
        sim.queue.push(
            d.at,
            EventKind::InjectDelay {
                vehicle: d.vehicle,
                duration: d.duration,
            },
        );
    }
    sim.run()
}

impl<'a> Simulation<'a> {
    fn finished(&self) -> bool {
        self.operator_ids.len() == self.stream.len() && self.open_operator == 0
    }

    fn run(mut self) -> Result<RunResult, SimError> {
        let mut outcome = RunOutcome::Completed;
        let mut idle_time = 0.0;
        let mut last = 0.0;
        let mut idle_now = true;
        while let Some(t) = self.queue.peek_time() {
            if idle_now {
                idle_time += t - last;
            }
            last = t;
            while self.queue.peek_time() == Some(t) {
                let event = self.queue.pop().expect("peeked");
                self.handle(t, event.kind)?;
            }
            if let Err(cycles) = self.settle(t)? {
                let detail = cycles
                    .iter()
                    .map(|c| {
                        c.iter()
                            .map(|v| v.to_string())
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .collect::<Vec<_>>()
                    .join(";");
                self.row(t, "deadlock", None, None, None, None, detail);
                outcome = RunOutcome::Deadlock { time: t, cycles };
                break;
            }
            idle_now = self.state.count_idle() > 0;
            if self.finished() {
                break;
            }
        }
        if outcome == RunOutcome::Completed && !self.finished() {
            return Err(SimError::Stalled { time: last });
        }
        self.row(last, "run_end", None, None, None, None, String::new());
        let tasks = self
            .state
            .ledger
            .all()
            .map(|t| TaskRecord {
                id: t.id,
                origin: t.origin,
                start: t.start,
                destination: t.destination,
                created_at: t.created_at,
                completed_at: t.completed_at,
                status: t.status,
                vehicle: t.vehicle,
            })
            .collect();
        Ok(RunResult {
            outcome,
            tasks,
            operator_ids: self.operator_ids,
            log: self.log,
            decisions: self.manager.map(|m| m.log().to_vec()).unwrap_or_default(),
            traversals: self.traversals,
            node_visits: self.node_visits,
            reservations: self.reservations,
            idle_time,
            end_time: last,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn row(
        &mut self,
        time: f64,
        kind: &'static str,
        vehicle: Option<VehicleId>,
        task: Option<TaskId>,
        node: Option<NodeId>,
        arc: Option<ArcId>,
        detail: String,
    ) {
        let arc = arc.map(|a| {
            let a = self.sc.graph.arc(a);
            (a.from, a.to)
        });
        self.log.push(LogRow {
            time,
            kind,
            vehicle,
            task,
            node,
            arc,
            detail,
        });
    }

    fn handle(&mut self, now: f64, kind: EventKind) -> Result<(), SimError> {
        match kind {
            EventKind::TaskCreated(i) => {
                let spec = self.stream[i];
                let id = self.state.ledger.create(
                    spec.start,
                    spec.destination,
                    OPERATOR_PRIORITY,
                    TaskOrigin::Operator,
                    now,
                );
                self.operator_ids.push(id);
                self.open_operator += 1;
                self.row(
                    now,
                    "task_created",
                    None,
                    Some(id),
                    Some(spec.start),
                    None,
                    spec.destination.to_string(),
                );
                if let (Some(manager), Some(predictor)) = (self.manager.as_mut(), self.predictor) {
                    let fx = manager.on_operator_task_created(
                        now,
                        id,
                        &mut self.state,
                        &self.sc.distances,
                        predictor,
                    );
                    self.apply(now, fx);
                }
                if let Some(next) = self.stream.get(i + 1) {
                    self.queue
                        .push(next.created_at.max(now), EventKind::TaskCreated(i + 1));
                }
            }
            EventKind::MonitorTick => {
                if let (Some(manager), Some(predictor)) = (self.manager.as_mut(), self.predictor) {
                    let fx = manager.on_monitor_tick(
                        now,
                        &mut self.state,
                        &self.sc.distances,
                        predictor,
                    );
                    self.apply(now, fx);
                }
                if !self.finished() {
                    self.queue
                        .push(now + self.sc.policy.monitor_period, EventKind::MonitorTick);
                }
            }
            EventKind::WindowStart { vehicle, epoch } => {
                if self.agents[vehicle.0].epoch == epoch {
                    let arc = self.agents[vehicle.0].arcs[self.agents[vehicle.0].pos];
                    let end = self.agents[vehicle.0].windows[self.agents[vehicle.0].pos].end;
                    self.depart(now, vehicle, arc, end);
                }
            }
            EventKind::VehicleArrived { vehicle, epoch } => {
                if self.agents[vehicle.0].epoch == epoch {
                    self.arrive(now, vehicle)?;
                }
            }
            EventKind::Resume { vehicle, epoch } => {
                let agent = &mut self.agents[vehicle.0];
                if agent.epoch == epoch && agent.delayed {
                    agent.delayed = false;
                    let task = agent.task;
                    self.row(
                        now,
                        "resume",
                        Some(vehicle),
                        task,
                        None,
                        None,
                        String::new(),
                    );
                    self.start_trip(now, vehicle)?;
                }
            }
            EventKind::InjectDelay { vehicle, duration } => {
                let agent = &mut self.agents[vehicle.0];
                if agent.task.is_none() || agent.delayed {
                    self.row(
                        now,
                        "delay_ignored",
                        Some(vehicle),
                        None,
                        None,
                        None,
                        duration.to_string(),
                    );
                } else if agent.on_arc {
                    agent.pending_delay += duration;
                } else {
                    self.apply_delay(now, vehicle, duration);
                }
            }
        }
        Ok(())
    }

    fn apply(&mut self, now: f64, fx: Effects) {
        if let Some(v) = fx.freed {
            self.free_vehicle(now, v);
        }
        if let Some(v) = fx.chained {
            let t = *self
                .state
                .vehicle(v)
                .task_queue
                .back()
                .expect("chained task queued");
            self.row(now, "chained", Some(v), Some(t), None, None, String::new());
        }
        if let Some(q) = fx.created {
            let node = self.state.ledger.task(q).start;
            self.row(
                now,
                "predicted_created",
                None,
                Some(q),
                Some(node),
                None,
                String::new(),
            );
        }
        self.log_assignments(now, &fx.assignments);
    }

    fn log_assignments(&mut self, now: f64, assignments: &[Assignment]) {
        for a in assignments {
            self.row(
                now,
                "assigned",
                Some(a.vehicle),
                Some(a.task),
                None,
                None,
                a.distance.to_string(),
            );
        }
    }

    fn close_visit(&mut self, now: f64, vehicle: VehicleId, node: NodeId) {
        let visit = self.agents[vehicle.0].visit.take();
        let (at, arrive) = visit.unwrap_or((node, now));
        self.node_visits.push(NodeVisit {
            vehicle,
            node: at,
            arrive,
            leave: now,
            from_bay: visit.is_none(),
        });
    }

    fn depart(&mut self, now: f64, vehicle: VehicleId, arc: ArcId, arrive_at: f64) {
        let a = *self.sc.graph.arc(arc);
        self.close_visit(now, vehicle, a.from);
        let agent = &mut self.agents[vehicle.0];
        agent.on_arc = true;
        agent.departed = true;
        agent.enter = now;
        let epoch = agent.epoch;
        let task = agent.task;
        self.state.vehicle_mut(vehicle).location = Location::OnArc {
            arc,
            from: a.from,
            to: a.to,
            progress: 0.0,
        };
        self.row(
            now,
            "depart",
            Some(vehicle),
            task,
            None,
            Some(arc),
            String::new(),
        );
        self.queue
            .push(arrive_at, EventKind::VehicleArrived { vehicle, epoch });
    }

    fn arrive(&mut self, now: f64, vehicle: VehicleId) -> Result<(), SimError> {
        let agent = &mut self.agents[vehicle.0];
        let arc = agent.arcs[agent.pos];
        agent.pos += 1;
        agent.on_arc = false;
        let node = agent.route[agent.pos];
        agent.visit = Some((node, now));
        let enter = agent.enter;
        let task = agent.task.expect("moving vehicles carry a task");
        self.traversals.push(Traversal {
            vehicle,
            arc,
            enter,
            exit: now,
        });
        self.state.vehicle_mut(vehicle).location = Location::AtNode(node);
        if let Backend::Greedy { locks, .. } = &mut self.backend {
            locks
                .arrive(&self.sc.graph, vehicle)
                .map_err(|e| SimError::Internal(e.to_string()))?;
        }
        self.row(
            now,
            "arrive",
            Some(vehicle),
            Some(task),
            Some(node),
            None,
            String::new(),
        );

        if self.state.ledger.task(task).status == TaskStatus::Cancelled {
            self.end_trip(now, vehicle);
            return Ok(());
        }
        let agent = &mut self.agents[vehicle.0];
        if agent.pickup == Some(agent.pos) {
            agent.pickup = None;
            self.begin(now, vehicle, task);
        }
        let agent = &mut self.agents[vehicle.0];
        if agent.pos + 1 == agent.route.len() {
            agent.pending_delay = 0.0;
            self.complete(now, vehicle);
        } else if agent.pending_delay > 0.0 {
            let d = std::mem::take(&mut agent.pending_delay);
            self.apply_delay(now, vehicle, d);
        } else {
            self.continue_route(now, vehicle);
        }
        Ok(())
    }

    /// Schedules or requests the next arc of the route from `pos`.
    fn continue_route(&mut self, now: f64, vehicle: VehicleId) {
        let agent = &self.agents[vehicle.0];
        let arc = agent.arcs[agent.pos];
        match &mut self.backend {
            Backend::Dpstw(_) => {
                let start = agent.windows[agent.pos].start;
                let epoch = agent.epoch;
                self.queue
                    .push(start, EventKind::WindowStart { vehicle, epoch });
            }
            Backend::Greedy { requests, .. } => {
                requests.insert(vehicle, (now, arc));
            }
        }
    }

    fn begin(&mut self, now: f64, vehicle: VehicleId, task: TaskId) {
        self.state
            .ledger
            .begin(task)
            .expect("assigned task can begin");
        let node = self.state.ledger.task(task).start;
        self.row(
            now,
            "pickup",
            Some(vehicle),
            Some(task),
            Some(node),
            None,
            String::new(),
        );
    }

    fn complete(&mut self, now: f64, vehicle: VehicleId) {
        let task = self.agents[vehicle.0]
            .task
            .expect("completing vehicle carries a task");
        if self.agents[vehicle.0].pickup.take().is_some() {
            self.begin(now, vehicle, task);
        }
        self.state
            .ledger
            .complete(task, now)
            .expect("executing task completes");
        let record = self.state.ledger.task(task).clone();
        let head = self.state.vehicle_mut(vehicle).task_queue.pop_front();
        debug_assert_eq!(head, Some(task));
        if record.origin == TaskOrigin::Operator {
            self.open_operator -= 1;
        }
        if let Some(m) = self.manager.as_mut() {
            m.record_completion(&record);
        }
        self.row(
            now,
            "completed",
            Some(vehicle),
            Some(task),
            Some(record.destination),
            None,
            String::new(),
        );
        self.end_trip(now, vehicle);
    }

    /// Clears the trip. Under DPSTW the vehicle always pulls into the bay;
    /// under GREEDY only when it has nothing queued.
    fn end_trip(&mut self, now: f64, vehicle: VehicleId) {
        let node = self
            .state
            .vehicle(vehicle)
            .node()
            .expect("trips end at a node");
        let epoch = self.agents[vehicle.0].epoch + 1;
        let visit = self.agents[vehicle.0].visit;
        self.agents[vehicle.0] = Agent {
            epoch,
            visit,
            ..Agent::default()
        };
        let queued = !self.state.vehicle(vehicle).task_queue.is_empty();
        match &mut self.backend {
            Backend::Dpstw(_) => {
                if visit.is_some() {
                    self.close_visit(now, vehicle, node);
                }
            }
            Backend::Greedy { locks, .. } => {
                if !queued {
                    locks.park(vehicle).expect("vehicle at a node can park");
                    if visit.is_some() {
                        self.close_visit(now, vehicle, node);
                    }
                    self.row(
                        now,
                        "park",
                        Some(vehicle),
                        None,
                        Some(node),
                        None,
                        String::new(),
                    );
                }
            }
        }
    }

    /// The vehicle's predicted task was cancelled under it.
    fn free_vehicle(&mut self, now: f64, vehicle: VehicleId) {
        let agent = &mut self.agents[vehicle.0];
        let Some(task) = agent.task else { return };
        self.row(
            now,
            "cancelled",
            Some(vehicle),
            Some(task),
            None,
            None,
            String::new(),
        );
        let agent = &mut self.agents[vehicle.0];
        if agent.on_arc {
            // finish the current arc, then stop
            agent.route.truncate(agent.pos + 2);
            agent.arcs.truncate(agent.pos + 1);
            agent.windows.truncate(agent.pos + 1);
            agent.pickup = None;
            agent.pending_delay = 0.0;
            if let Backend::Dpstw(s) = &mut self.backend {
                let w = agent.windows[agent.pos];
                s.stop_at_node(vehicle, agent.route[agent.pos + 1], w.end, w.end);
            }
            return;
        }
        self.stop_here(now, vehicle);
        let node = self
            .state
            .vehicle(vehicle)
            .node()
            .expect("vehicle at a node");
        let epoch = self.agents[vehicle.0].epoch + 1;
        self.agents[vehicle.0] = Agent {
            epoch,
            ..Agent::default()
        };
        if matches!(self.backend, Backend::Greedy { .. }) {
            self.row(
                now,
                "park",
                Some(vehicle),
                None,
                Some(node),
                None,
                String::new(),
            );
        }
    }

    /// Drops a stationary vehicle's future reservations or requests and
    /// moves it into the bay.
    fn stop_here(&mut self, now: f64, vehicle: VehicleId) {
        let node = self
            .state
            .vehicle(vehicle)
            .node()
            .expect("vehicle at a node");
        let agent = &self.agents[vehicle.0];
        match &mut self.backend {
            Backend::Dpstw(s) => {
                if agent.departed && agent.pos > 0 && !agent.delayed {
                    s.stop_at_node(vehicle, node, agent.windows[agent.pos - 1].end, now);
                } else {
                    s.release_vehicle_from(vehicle, now);
                }
            }
            Backend::Greedy { locks, requests } => {
                requests.remove(&vehicle);
                locks.park(vehicle).expect("stationary vehicle can park");
            }
        }
        if self.agents[vehicle.0].visit.is_some() {
            self.close_visit(now, vehicle, node);
        }
    }

    fn apply_delay(&mut self, now: f64, vehicle: VehicleId, duration: f64) {
        self.stop_here(now, vehicle);
        let agent = &mut self.agents[vehicle.0];
        agent.epoch += 1;
        agent.delayed = true;
        agent.route.clear();
        agent.arcs.clear();
        agent.windows.clear();
        let epoch = agent.epoch;
        let task = agent.task;
        self.row(
            now,
            "delay",
            Some(vehicle),
            task,
            None,
            None,
            duration.to_string(),
        );
        self.queue
            .push(now + duration, EventKind::Resume { vehicle, epoch });
    }

    fn routes(&mut self, from: NodeId, to: NodeId) -> Result<Vec<Route>, SimError> {
        let k = match self.sc.scheduler {
            SchedulerKind::Dpstw => self.sc.routing_k,
            SchedulerKind::Greedy => 1,
        };
        if let Some(r) = self.routes.get(&(from, to)) {
            return Ok(r.clone());
        }
        let r = k_shortest_paths(&self.sc.graph, from, to, k)?;
        if r.is_empty() {
            return Err(SimError::Unreachable { from, to });
        }
        self.routes.insert((from, to), r.clone());
        Ok(r)
    }

    /// Routes the vehicle's head task (or its delayed current task) from
    /// where it stands.
    fn start_trip(&mut self, now: f64, vehicle: VehicleId) -> Result<(), SimError> {
        let task_id = match self.agents[vehicle.0].task {
            Some(t) => t,
            None => *self
                .state
                .vehicle(vehicle)
                .task_queue
                .front()
                .expect("trip needs a task"),
        };
        let task = self.state.ledger.task(task_id).clone();
        let here = self
            .state
            .vehicle(vehicle)
            .node()
            .expect("trips start at a node");
        let picked = task.status == TaskStatus::Executing;

        let legs: Vec<(Vec<NodeId>, Option<usize>)> = if picked {
            self.routes(here, task.destination)?
                .into_iter()
                .map(|r| (r.nodes().to_vec(), None))
                .collect()
        } else {
            let to_start = self.routes(here, task.start)?;
            let deliver = self.routes(task.start, task.destination)?;
            let mut out = Vec::with_capacity(to_start.len() * deliver.len());
            for p in &to_start {
                for d in &deliver {
                    let mut nodes = p.nodes().to_vec();
                    nodes.extend_from_slice(&d.nodes()[1..]);
                    out.push((nodes, Some(p.nodes().len() - 1)));
                }
            }
            out
        };

        let agent = &mut self.agents[vehicle.0];
        agent.task = Some(task_id);
        agent.epoch += 1;
        agent.pos = 0;
        agent.on_arc = false;
        agent.departed = false;

        if legs[0].0.len() == 1 {
            agent.route = legs[0].0.clone();
            agent.arcs.clear();
            agent.windows.clear();
            agent.pickup = legs[0].1;
            self.complete(now, vehicle);
            return Ok(());
        }

        let (route, pickup, windows) = match &mut self.backend {
            Backend::Dpstw(s) => {
                let mut best: Option<(PathPlan, Option<usize>)> = None;
                for (nodes, pickup) in &legs {
                    let plan = s.plan(&self.sc.graph, vehicle, nodes, now);
                    let better = best.as_ref().is_none_or(|(b, _)| {
                        plan.arrival().unwrap_or(now) < b.arrival().unwrap_or(now)
                    });
                    if better {
                        best = Some((plan, *pickup));
                    }
                }
                let (plan, pickup) = best.expect("at least one candidate route");
                s.commit(&plan);
                self.reservations.extend_from_slice(&plan.windows);
                (plan.nodes, pickup, plan.windows)
            }
            Backend::Greedy { .. } => (legs[0].0.clone(), legs[0].1, Vec::new()),
        };
        let arcs: Vec<ArcId> = route
            .windows(2)
            .map(|p| {
                self.sc
                    .graph
                    .arc_between(p[0], p[1])
                    .expect("route follows arcs")
            })
            .collect();
        let agent = &mut self.agents[vehicle.0];
        agent.route = route;
        agent.arcs = arcs;
        agent.windows = windows;
        agent.pickup = pickup;
        if pickup == Some(0) {
            self.agents[vehicle.0].pickup = None;
            self.begin(now, vehicle, task_id);
        }
        self.continue_route(now, vehicle);
        Ok(())
    }

    /// Dispatch, route and grant until a fixed point. Returns the wait-for
    /// cycles if the GREEDY locks are deadlocked.
    fn settle(&mut self, now: f64) -> Result<Result<(), Vec<Vec<VehicleId>>>, SimError> {
        loop {
            let mut changed = false;
            let assigned = dispatch_pending(&mut self.state, &self.sc.distances);
            if !assigned.is_empty() {
                self.log_assignments(now, &assigned);
                changed = true;
            }

            let mut ready: Vec<(i32, f64, VehicleId)> = self
                .state
                .vehicles
                .iter()
                .filter(|v| {
                    let a = &self.agents[v.id.0];
                    a.task.is_none() && !a.delayed && !v.task_queue.is_empty() && !v.is_moving()
                })
                .map(|v| {
                    let t = self.state.ledger.task(v.task_queue[0]);
                    (t.priority, t.created_at, v.id)
                })
                .collect();
            ready.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
            for (_, _, v) in ready {
                self.start_trip(now, v)?;
                changed = true;
            }

            if let Backend::Greedy { locks, requests } = &mut self.backend {
                let mut order: Vec<(f64, VehicleId, ArcId)> = requests
                    .iter()
                    .map(|(v, (since, arc))| (*since, *v, *arc))
                    .collect();
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut granted = Vec::new();
                for (_, v, arc) in order {
                    let decision = locks
                        .try_enter_arc(&self.sc.graph, v, arc)
                        .map_err(|e| SimError::Internal(e.to_string()))?;
                    if decision == EntryDecision::Granted {
                        requests.remove(&v);
                        granted.push((v, arc));
                    }
                }
                for (v, arc) in granted {
                    let w = self.sc.graph.arc(arc).weight;
                    self.depart(now, v, arc, now + w);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        match &mut self.backend {
            Backend::Greedy { locks, requests } => {
                if !requests.is_empty() {
                    let pending: Vec<(VehicleId, ArcId)> =
                        requests.iter().map(|(v, (_, a))| (*v, *a)).collect();
                    let cycles = detect_deadlock(&self.sc.graph, locks, &pending);
                    if !cycles.is_empty() {
                        return Ok(Err(cycles));
                    }
                }
                debug_assert!(self
                    .state
                    .vehicles
                    .iter()
                    .all(|v| match locks.position(v.id) {
                        LockPosition::OnArc(_) => v.is_moving(),
                        _ => !v.is_moving(),
                    }));
            }
            Backend::Dpstw(s) => {
                s.release_completed_windows(now);
            }
        }
        Ok(Ok(()))
    }
}
