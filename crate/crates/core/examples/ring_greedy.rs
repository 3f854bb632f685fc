//! Lock-based scheduling on a one-way ring, and the deadlock the same
//! policy runs into on a bidirectional grid.
use std::path::Path;

use fleetlab::sim::{
    Experiment, GuidepathSource, PredictorKind, RunOutcome, ScenarioConfig, SchedulerKind,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ring = ScenarioConfig {
        guidepath: GuidepathSource::Ring { nodes: 12 },
        scheduler: SchedulerKind::Greedy,
        tasks: 500,
        busyness: 4000.0,
        ..Default::default()
    };
    let grid = ScenarioConfig {
        guidepath: GuidepathSource::Grid {
            width: 5,
            height: 5,
        },
        stations: Some(vec![0, 2, 4, 10, 12, 14, 20, 22, 24]),
        busyness: 5000.0,
        ..ring.clone()
    };
    for (name, config) in [("ring", ring), ("grid", grid)] {
        let exp = Experiment::new(config, Path::new("."))?;
        let busyness = exp.config.busyness;
        let pair = exp.run_pair(busyness, 0, PredictorKind::None, None)?;
        match &pair.baseline.outcome {
            RunOutcome::Completed => {
                println!(
                    "{name}: completed, tau {:.2}",
                    pair.baseline_metrics.tau_complete.unwrap_or(f64::NAN)
                )
            }
            RunOutcome::Deadlock { time, cycles } => {
                println!("{name}: deadlock at t={time:.1}, cycles {cycles:?}")
            }
        }
    }
    Ok(())
}
