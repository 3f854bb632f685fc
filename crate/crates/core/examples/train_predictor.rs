//! Trains the next-start LSTM on a dominant-transition workload and compares
//! it with the transition-count baseline.
use fleetlab::guidepath::NodeId;
use fleetlab::predictor::{
    accuracy, train, Dataset, Hyperparameters, MarkovPredictor, SequenceModel,
};
use fleetlab::sim::{generate_tasks, MarkovTaskGenerator, TransitionMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stations: Vec<NodeId> = (0..6).map(NodeId).collect();
    let matrix = TransitionMatrix::dominant(6, 0.9)?;
    let mut generator = MarkovTaskGenerator::new(stations.clone(), &matrix, 1000.0, None, 7)?;
    let starts: Vec<usize> = generate_tasks(&mut generator, 3000)
        .iter()
        .map(|t| t.start.0)
        .collect();
    let data = Dataset::temporal_split(starts, 0.8);

    let hp = Hyperparameters {
        hidden: 32,
        epochs: 15,
        ..Default::default()
    };
    let mut model = SequenceModel::random(6, hp.hidden, hp.init_scale, hp.seed);
    let report = train(&mut model, data.train(), &hp)?;
    for (epoch, loss) in report.loss_trace.iter().enumerate().step_by(5) {
        println!("epoch {epoch:>2}: loss {loss:.4}");
    }
    let lstm = accuracy(&model, data.test_samples(hp.window))?;
    let markov = MarkovPredictor::fit(6, data.train())
        .accuracy(data.test_samples(1).map(|(w, t)| (w[0], t)));
    println!(
        "test accuracy: lstm {lstm:.3}, markov {markov:.3}, bayes {:.3}",
        matrix.bayes_accuracy()
    );
    Ok(())
}
