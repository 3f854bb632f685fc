use std::fmt::Write as _;

use thiserror::Error;

use super::engine::{LogRow, RunResult, TaskRecord};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no tasks to average over")]
    EmptySubset,
    #[error("task {0} has not completed")]
    Incomplete(crate::fleet::TaskId),
    #[error("runs did not consume the same task stream")]
    MismatchedStreams,
}

/// Mean creation-to-completion time over `tasks`.
pub fn avg_completion_time(tasks: &[TaskRecord]) -> Result<f64, MetricsError> {
    if tasks.is_empty() {
        return Err(MetricsError::EmptySubset);
    }
    let mut total = 0.0;
    for t in tasks {
        total += t.completed_at.ok_or(MetricsError::Incomplete(t.id))? - t.created_at;
    }
    Ok(total / tasks.len() as f64)
}

/// Operator-task outcomes of one run, with the test suffix marked.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    /// operator tasks in stream order
    pub tasks: Vec<TaskRecord>,
    /// index of the first test task
    pub test_from: usize,
    /// mean completion time over the test tasks, if they all completed
    pub tau_complete: Option<f64>,
    pub idle_fraction: f64,
    pub deadlock: bool,
}

impl MetricsRecord {
    /// The last `1 - train_fraction` of the stream is the test set.
    pub fn from_run(run: &RunResult, stream_len: usize, train_fraction: f64) -> Self {
        let tasks: Vec<TaskRecord> = run.operator_tasks().copied().collect();
        let test_from = ((stream_len as f64) * train_fraction).round() as usize;
        let test_from = test_from.min(stream_len);
        let tau_complete = if tasks.len() == stream_len {
            avg_completion_time(&tasks[test_from..]).ok()
        } else {
            None
        };
        MetricsRecord {
            tasks,
            test_from,
            tau_complete,
            idle_fraction: run.idle_fraction(),
            deadlock: run.is_deadlock(),
        }
    }

    pub fn test_tasks(&self) -> &[TaskRecord] {
        &self.tasks[self.test_from.min(self.tasks.len())..]
    }
}

/// `(baseline - predicted) / baseline`; negative when prediction hurt.
pub fn improvement(
    baseline: &MetricsRecord,
    predicted: &MetricsRecord,
) -> Result<f64, MetricsError> {
    let key = |t: &TaskRecord| (t.created_at.to_bits(), t.start, t.destination);
    if baseline.tasks.len() != predicted.tasks.len()
        || baseline.test_from != predicted.test_from
        || baseline
            .tasks
            .iter()
            .map(key)
            .ne(predicted.tasks.iter().map(key))
    {
        return Err(MetricsError::MismatchedStreams);
    }
    let base = avg_completion_time(baseline.test_tasks())?;
    let pred = avg_completion_time(predicted.test_tasks())?;
    Ok((base - pred) / base)
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `time,kind,vehicle,task,node,arc_from,arc_to,detail`
pub fn event_log_csv(log: &[LogRow]) -> String {
    let mut out = String::from("time,kind,vehicle,task,node,arc_from,arc_to,detail\n");
    for r in log {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.time,
            r.kind,
            opt(r.vehicle),
            opt(r.task),
            opt(r.node),
            opt(r.arc.map(|a| a.0)),
            opt(r.arc.map(|a| a.1)),
            r.detail
        );
    }
    out
}

pub const METRICS_HEADER: &str =
    "scenario,seed,busyness,scheduler,prediction,predictor,tau_complete,improvement,idle_fraction,status";

/// One simulated run in a sweep. `tau_complete` and `improvement` are NaN
/// for deadlocked runs; the baseline row carries improvement 0.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub scenario: String,
    pub seed: u64,
    pub busyness: f64,
    pub scheduler: &'static str,
    pub prediction: bool,
    pub predictor: &'static str,
    pub tau_complete: f64,
    pub improvement: f64,
    pub idle_fraction: f64,
    pub status: &'static str,
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.seed,
            r.busyness,
            r.scheduler,
            r.prediction,
            r.predictor,
            r.tau_complete,
            r.improvement,
            r.idle_fraction,
            r.status
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet::{TaskId, TaskOrigin, TaskStatus};
    use crate::guidepath::NodeId;

    fn rec(id: u64, created: f64, done: Option<f64>) -> TaskRecord {
        TaskRecord {
            id: TaskId(id),
            origin: TaskOrigin::Operator,
            start: NodeId(0),
            destination: NodeId(1),
            created_at: created,
            completed_at: done,
            status: if done.is_some() {
                TaskStatus::Completed
            } else {
                TaskStatus::Assigned
            },
            vehicle: None,
        }
    }

    fn record(durations: &[f64]) -> MetricsRecord {
        let tasks: Vec<_> = durations
            .iter()
            .enumerate()
            .map(|(i, d)| rec(i as u64, i as f64, Some(i as f64 + d)))
            .collect();
        MetricsRecord {
            tasks,
            test_from: 0,
            tau_complete: None,
            idle_fraction: 0.0,
            deadlock: false,
        }
    }

    #[test]
    fn averages() {
        assert_eq!(avg_completion_time(&[rec(0, 0.0, Some(42.0))]), Ok(42.0));
        assert_eq!(
            avg_completion_time(&record(&[10.0, 20.0, 30.0]).tasks),
            Ok(20.0)
        );
        assert_eq!(avg_completion_time(&[]), Err(MetricsError::EmptySubset));
        assert_eq!(
            avg_completion_time(&[rec(3, 0.0, None)]),
            Err(MetricsError::Incomplete(TaskId(3)))
        );
    }

    #[test]
    fn improvement_sign_and_value() {
        let base = record(&[100.0]);
        assert_eq!(improvement(&base, &base), Ok(0.0));
        assert_eq!(improvement(&base, &record(&[75.0])), Ok(0.25));
        assert!(improvement(&base, &record(&[120.0])).unwrap() < 0.0);
        let mut other = record(&[75.0]);
        other.tasks[0].start = NodeId(5);
        assert_eq!(
            improvement(&base, &other),
            Err(MetricsError::MismatchedStreams)
        );
    }
}
