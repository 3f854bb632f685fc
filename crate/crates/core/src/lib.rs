pub mod cli;
pub mod dpstw;
pub mod fleet;
pub mod greedy;
pub mod guidepath;
pub mod prediction;
pub mod predictor;
pub mod sim;
