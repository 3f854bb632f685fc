//! The idle measure and the gate that decides whether a predicted task may
//! be created.
use fleetlab::prediction::{
    idle_measure, should_create_predicted, IdleMeasureInputs, PredictionPolicy,
};

fn main() {
    let policy = PredictionPolicy::default();
    // one hour, mean task duration 60 s
    for created in [20, 45, 60, 90, 120] {
        let durations = vec![60.0; created];
        let idle = idle_measure(&IdleMeasureInputs::from_durations(
            3600.0, created, &durations,
        ));
        let needed = (0..=8).find(|&n| should_create_predicted(idle, n, &policy));
        println!("{created:>3} tasks/h: idle measure {idle:.2}, idle vehicles needed {needed:?}");
    }
}
