//! Command-line front end: `generate`, `train`, `simulate`, `sweep`.
//!
//! Every command writes into `--out` and leaves the fully resolved config
//! there as `config.resolved.json`. Flags override config file values.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::prediction::decision_log_csv;
use crate::predictor::{accuracy, write_checkpoint, PredictorError};
use crate::sim::{
    event_log_csv, metrics_csv, read_task_csv, write_task_csv, Experiment, MetricsRow,
    PredictorKind, ScenarioConfig, SchedulerKind, SimError,
};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DEADLOCK: u8 = 3;
pub const EXIT_DIVERGED: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "fleetlab", version, about = "AGV fleet simulation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a task stream CSV drawn from the config's workload.
    Generate {
        #[command(flatten)]
        common: Common,
        /// number of tasks; defaults to the config's `tasks`
        #[arg(long)]
        count: Option<usize>,
    },
    /// Train the start predictor on a task CSV.
    Train {
        #[command(flatten)]
        common: Common,
        /// task CSV as written by `generate`
        #[arg(long)]
        input: PathBuf,
    },
    /// Run one scenario and write its event log and metrics.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// enable predicted tasks
        #[arg(long)]
        prediction: bool,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Paired baseline / prediction runs over busyness values and seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// comma-separated busyness values (tasks per hour)
        #[arg(long, value_delimiter = ',')]
        busyness_list: Vec<f64>,
        /// comma-separated seeds
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// scenario config (JSON); defaults apply when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "FLEETLAB_SEED")]
    pub seed: Option<u64>,
    /// output directory, created if missing
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub scheduler: Option<SchedulerKind>,
    #[arg(long, value_enum)]
    pub predictor: Option<PredictorKind>,
    /// operator tasks per hour
    #[arg(long)]
    pub busyness: Option<f64>,
    /// operator tasks per run
    #[arg(long)]
    pub tasks: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{deadlocked} of {rows} sweep rows deadlocked")]
    DeadlockDominated { deadlocked: usize, rows: usize },
}

impl From<PredictorError> for CliError {
    fn from(e: PredictorError) -> Self {
        CliError::Sim(SimError::Predictor(e))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Sim(SimError::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::DeadlockDominated { .. } => EXIT_DEADLOCK,
            CliError::Sim(SimError::Predictor(PredictorError::Diverged { .. })) => EXIT_DIVERGED,
            CliError::Sim(
                SimError::Io(_)
                | SimError::Csv(_)
                | SimError::Internal(_)
                | SimError::Stalled { .. },
            ) => 1,
            CliError::Sim(SimError::Predictor(PredictorError::Io(_))) => 1,
            CliError::Sim(_) => EXIT_CONFIG,
        }
    }
}

/// What a command wrote, for the caller to report.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

impl Common {
    /// The config file with flags applied, and the directory relative
    /// paths resolve against.
    fn resolve(&self) -> Result<(ScenarioConfig, PathBuf), CliError> {
        let (mut config, base) = match &self.config {
            Some(path) => {
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (ScenarioConfig::load(path)?, base)
            }
            None => (ScenarioConfig::default(), PathBuf::from(".")),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(s) = self.scheduler {
            config.scheduler = s;
        }
        if let Some(p) = self.predictor {
            config.predictor = p;
        }
        if let Some(b) = self.busyness {
            config.busyness = b;
        }
        if let Some(t) = self.tasks {
            config.tasks = t;
        }
        config.validate()?;
        Ok((config, base))
    }
}

/// Writes through a temporary file so a crash never leaves a partial file.
fn write_atomic(path: &Path, bytes: &[u8], report: &mut Report) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    report.files.push(path.to_path_buf());
    Ok(())
}

fn prepare_out(out: &Path, config: &ScenarioConfig, report: &mut Report) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    write_atomic(
        &out.join("config.resolved.json"),
        config.to_json().as_bytes(),
        report,
    )
}

pub fn execute(cli: Cli) -> Result<Report, CliError> {
    let mut report = Report::default();
    match cli.command {
        Command::Generate { common, count } => {
            let (mut config, base) = common.resolve()?;
            if let Some(n) = count {
                config.tasks = n;
            }
            let exp = Experiment::new(config, &base)?;
            prepare_out(&common.out, &exp.config, &mut report)?;
            let stream = exp.stream(exp.config.busyness, exp.config.seed)?;
            let mut bytes = Vec::new();
            write_task_csv(&mut bytes, &stream)?;
            write_atomic(&common.out.join("tasks.csv"), &bytes, &mut report)?;
            report.lines.push(format!("tasks={}", stream.len()));
        }
        Command::Train { common, input } => {
            let (config, base) = common.resolve()?;
            let exp = Experiment::new(config, &base)?;
            prepare_out(&common.out, &exp.config, &mut report)?;
            let stream = read_task_csv(BufReader::new(fs::File::open(&input)?))?;
            let (lstm, trained) = exp.train_lstm(&stream)?;
            let data = exp.dataset(&stream)?;
            let acc = accuracy(&lstm.model, data.test_samples(lstm.window))?;
            let mut ckpt = Vec::new();
            write_checkpoint(&mut ckpt, &lstm)?;
            write_atomic(&common.out.join("model.ckpt"), &ckpt, &mut report)?;
            let mut trace = String::from("epoch,loss\n");
            for (epoch, loss) in trained.loss_trace.iter().enumerate() {
                let _ = writeln!(trace, "{epoch},{loss}");
            }
            write_atomic(&common.out.join("loss.csv"), trace.as_bytes(), &mut report)?;
            report.lines.push(format!("test_accuracy={acc}"));
        }
        Command::Simulate {
            common,
            prediction,
            checkpoint,
        } => {
            let (mut config, base) = common.resolve()?;
            config.prediction |= prediction;
            if let Some(path) = checkpoint {
                // flag paths are relative to the working directory, not the config
                config.checkpoint = Some(std::path::absolute(path)?);
            }
            prepare_out(&common.out, &config, &mut report)?;
            let exp = Experiment::new(config, &base)?;
            let c = &exp.config;
            let stream = exp.stream(c.busyness, c.seed)?;
            let kind = if c.prediction {
                c.predictor
            } else {
                PredictorKind::None
            };
            let lstm = if kind == PredictorKind::Lstm {
                Some(exp.load_or_train_lstm()?)
            } else {
                None
            };
            let predictor = exp.predictor(kind, &stream, lstm.as_ref())?;
            let (run, metrics) = exp.run_stream(c.seed, &stream, predictor.as_deref())?;
            write_atomic(
                &common.out.join("events.csv"),
                event_log_csv(&run.log).as_bytes(),
                &mut report,
            )?;
            write_atomic(
                &common.out.join("decisions.csv"),
                decision_log_csv(&run.decisions).as_bytes(),
                &mut report,
            )?;
            let row = MetricsRow {
                scenario: c.name.clone(),
                seed: c.seed,
                busyness: c.busyness,
                scheduler: c.scheduler.as_str(),
                prediction: c.prediction,
                predictor: kind.as_str(),
                tau_complete: metrics.tau_complete.unwrap_or(f64::NAN),
                improvement: f64::NAN,
                idle_fraction: metrics.idle_fraction,
                status: if metrics.deadlock {
                    "deadlock"
                } else {
                    "completed"
                },
            };
            write_atomic(
                &common.out.join("metrics.csv"),
                metrics_csv(&[row]).as_bytes(),
                &mut report,
            )?;
            report.lines.push(format!(
                "status={}",
                if metrics.deadlock {
                    "deadlock"
                } else {
                    "completed"
                }
            ));
            if let Some(tau) = metrics.tau_complete {
                report.lines.push(format!("tau_complete={tau}"));
            }
        }
        Command::Sweep {
            common,
            busyness_list,
            seeds,
            checkpoint,
        } => {
            let (mut config, base) = common.resolve()?;
            if !busyness_list.is_empty() {
                config.sweep.busyness = busyness_list;
            }
            if !seeds.is_empty() {
                config.sweep.seeds = seeds;
            }
            if let Some(path) = checkpoint {
                // flag paths are relative to the working directory, not the config
                config.checkpoint = Some(std::path::absolute(path)?);
            }
            prepare_out(&common.out, &config, &mut report)?;
            let exp = Experiment::new(config, &base)?;
            let lstm = if exp.config.predictor == PredictorKind::Lstm {
                Some(exp.load_or_train_lstm()?)
            } else {
                None
            };
            let rows = exp.sweep(lstm.as_ref())?;
            write_atomic(
                &common.out.join("metrics.csv"),
                metrics_csv(&rows).as_bytes(),
                &mut report,
            )?;
            let deadlocked = rows.iter().filter(|r| r.status == "deadlock").count();
            report
                .lines
                .push(format!("rows={} deadlocked={deadlocked}", rows.len()));
            if 2 * deadlocked > rows.len() {
                return Err(CliError::DeadlockDominated {
                    deadlocked,
                    rows: rows.len(),
                });
            }
        }
    }
    Ok(report)
}

/// Parses `args` (program name first), runs, prints, and maps the result
/// to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match execute(cli) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
