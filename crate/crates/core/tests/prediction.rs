mod common;

use fleetlab::fleet::{FleetState, TaskOrigin, VehicleId, OPERATOR_PRIORITY};
use fleetlab::guidepath::NodeId;
use fleetlab::prediction::{
    count_idle_vehicles, idle_measure, should_create_predicted, IdleMeasureInputs, PredictionPolicy,
};
use proptest::prelude::*;

use common::branches;

#[test]
fn idle_measure_examples() {
    let m = idle_measure(&IdleMeasureInputs::from_durations(
        300.0,
        5,
        &[30.0, 60.0, 90.0],
    ));
    assert!((m - 1.0).abs() < 1e-12);
    assert_eq!(
        idle_measure(&IdleMeasureInputs::from_durations(60.0, 1, &[60.0])),
        1.0
    );
    assert_eq!(
        idle_measure(&IdleMeasureInputs::from_durations(60.0, 1, &[])),
        0.0
    );
}

#[test]
fn gate_examples() {
    let p = PredictionPolicy::default();
    let [n1, n2, _, n4] = p.required_idle;
    assert!(should_create_predicted(0.5, n1, &p));
    assert!(!should_create_predicted(1.0, n2 - 1, &p));
    assert!(should_create_predicted(1.6, n4, &p));
    assert!(!should_create_predicted(1.6, n4 - 1, &p));
}

#[test]
fn idle_counts() {
    let mut s = FleetState::new(&[NodeId(0); 8]);
    assert_eq!(count_idle_vehicles(&s), 8);
    for v in 0..5 {
        let t = s.ledger.create(
            NodeId(1),
            NodeId(2),
            OPERATOR_PRIORITY,
            TaskOrigin::Operator,
            0.0,
        );
        s.ledger.assign(t, VehicleId(v)).unwrap();
        s.vehicle_mut(VehicleId(v)).task_queue.push_back(t);
    }
    assert_eq!(count_idle_vehicles(&s), 3);
}

#[test]
fn wrong_prediction_cancels() {
    branches::wrong_prediction_cancels().unwrap();
}

#[test]
fn right_prediction_chains() {
    branches::right_prediction_chains().unwrap();
}

#[test]
fn right_prediction_after_completion() {
    branches::right_prediction_after_completion().unwrap();
}

proptest! {
    /// More idle vehicles never closes an open gate; a quieter system never
    /// needs more idle vehicles.
    #[test]
    fn gate_is_monotone(idle in 0.0f64..3.0, n in 0usize..10, d in 0.0f64..1.0) {
        let p = PredictionPolicy::default();
        if should_create_predicted(idle, n, &p) {
            prop_assert!(should_create_predicted(idle, n + 1, &p));
            prop_assert!(should_create_predicted((idle - d).max(0.0), n, &p));
        }
    }

    #[test]
    fn idle_measure_scales(durations in proptest::collection::vec(1.0f64..100.0, 1..20), extra in 0usize..20) {
        let created = durations.len() + extra;
        let elapsed = 10.0 * created as f64;
        let m = idle_measure(&IdleMeasureInputs::from_durations(elapsed, created, &durations));
        let mean = durations.iter().sum::<f64>() / durations.len() as f64;
        prop_assert!((m - mean / 10.0).abs() < 1e-9);
    }
}
