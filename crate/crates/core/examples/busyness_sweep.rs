//! Paired baseline and prediction runs over a few busyness values, printed
//! as the metrics CSV.
use std::path::Path;

use fleetlab::sim::{metrics_csv, Experiment, PredictorKind, ScenarioConfig, SweepSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ScenarioConfig {
        tasks: 400,
        predictor: PredictorKind::Markov,
        sweep: SweepSpec {
            busyness: vec![500.0, 1500.0, 3000.0],
            seeds: vec![0, 1],
        },
        ..Default::default()
    };
    let exp = Experiment::new(config, Path::new("."))?;
    print!("{}", metrics_csv(&exp.sweep(None)?));
    Ok(())
}
