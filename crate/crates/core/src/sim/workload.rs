//! Operator task streams: Poisson arrivals, Markov-chained start stations,
//! uniform destinations.

use std::io::{Read, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::guidepath::NodeId;

/// Column-stochastic matrix: `p(i, j) = Pr(next start = i | last start = j)`,
/// indices into the station list.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    p: Vec<f64>,
}

impl TransitionMatrix {
    /// `rows[i][j]` is `p(i, j)`. Every column must sum to 1 within 1e-9.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SimError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(SimError::Config(
                "transition matrix must be square and non-empty".into(),
            ));
        }
        let p: Vec<f64> = rows.iter().flatten().copied().collect();
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(SimError::Config(
                "transition probabilities must be finite and non-negative".into(),
            ));
        }
        let m = TransitionMatrix { n, p };
        for j in 0..n {
            let sum: f64 = (0..n).map(|i| m.get(i, j)).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(SimError::Config(format!(
                    "column {j} of the transition matrix sums to {sum}"
                )));
            }
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            p[i * n + i] = 1.0;
        }
        TransitionMatrix { n, p }
    }

    /// From `j` the next start is `(j + 1) mod n` with probability `d`, any
    /// other station with equal share of the rest.
    pub fn dominant(n: usize, d: f64) -> Result<Self, SimError> {
        if n == 0 || !(0.0..=1.0).contains(&d) {
            return Err(SimError::Config(format!(
                "dominant transition needs n > 0 and d in [0, 1], got n={n}, d={d}"
            )));
        }
        if n == 1 {
            return Ok(Self::identity(1));
        }
        let rest = (1.0 - d) / (n - 1) as f64;
        let mut p = vec![rest; n * n];
        for j in 0..n {
            p[((j + 1) % n) * n + j] = d;
        }
        Ok(TransitionMatrix { n, p })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Highest attainable top-1 accuracy: the mean over columns of their
    /// largest entry, weighted by the stationary distribution.
    pub fn bayes_accuracy(&self) -> f64 {
        let mut pi = vec![1.0 / self.n as f64; self.n];
        for _ in 0..10_000 {
            let next: Vec<f64> = (0..self.n)
                .map(|i| (0..self.n).map(|j| self.get(i, j) * pi[j]).sum())
                .collect();
            let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            if diff < 1e-14 {
                break;
            }
        }
        (0..self.n)
            .map(|j| pi[j] * self.column(j).into_iter().fold(0.0, f64::max))
            .sum()
    }
}

/// One operator task as issued.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub created_at: f64,
    #[serde(rename = "start_node")]
    pub start: NodeId,
    #[serde(rename = "dest_node")]
    pub destination: NodeId,
}

pub struct MarkovTaskGenerator {
    stations: Vec<NodeId>,
    columns: Vec<WeightedIndex<f64>>,
    arrivals: Exp<f64>,
    rng: ChaCha8Rng,
    last: Option<usize>,
    initial: Option<usize>,
    clock: f64,
}

impl MarkovTaskGenerator {
    /// `busyness` is the mean number of tasks per hour. Without `initial`
    /// the first start is drawn uniformly.
    pub fn new(
        stations: Vec<NodeId>,
        matrix: &TransitionMatrix,
        busyness: f64,
        initial: Option<usize>,
        seed: u64,
    ) -> Result<Self, SimError> {
        if stations.len() < 2 {
            return Err(SimError::Config(
                "a workload needs at least two stations".into(),
            ));
        }
        if matrix.size() != stations.len() {
            return Err(SimError::Config(format!(
                "transition matrix is {0}x{0} but there are {1} stations",
                matrix.size(),
                stations.len()
            )));
        }
        if !(busyness > 0.0 && busyness.is_finite()) {
            return Err(SimError::Config(format!(
                "busyness must be positive, got {busyness}"
            )));
        }
        if initial.is_some_and(|s| s >= stations.len()) {
            return Err(SimError::Config("initial station out of range".into()));
        }
        let columns = (0..matrix.size())
            .map(|j| {
                WeightedIndex::new(matrix.column(j))
                    .map_err(|e| SimError::Config(format!("column {j}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        let arrivals = Exp::new(busyness / 3600.0).map_err(|e| SimError::Config(e.to_string()))?;
        Ok(MarkovTaskGenerator {
            stations,
            columns,
            arrivals,
            rng: ChaCha8Rng::seed_from_u64(seed),
            last: None,
            initial,
            clock: 0.0,
        })
    }

    pub fn stations(&self) -> &[NodeId] {
        &self.stations
    }

    fn next_task(&mut self) -> TaskSpec {
        self.clock += self.arrivals.sample(&mut self.rng);
        let start = match self.last {
            None => self
                .initial
                .unwrap_or_else(|| self.rng.random_range(0..self.stations.len())),
            Some(j) => self.columns[j].sample(&mut self.rng),
        };
        self.last = Some(start);
        // uniform over the other stations
        let mut dest = self.rng.random_range(0..self.stations.len() - 1);
        if dest >= start {
            dest += 1;
        }
        TaskSpec {
            created_at: self.clock,
            start: self.stations[start],
            destination: self.stations[dest],
        }
    }
}

impl Iterator for MarkovTaskGenerator {
    type Item = TaskSpec;

    fn next(&mut self) -> Option<TaskSpec> {
        Some(self.next_task())
    }
}

pub fn generate_tasks(generator: &mut MarkovTaskGenerator, count: usize) -> Vec<TaskSpec> {
    generator.take(count).collect()
}

/// `created_at,start_node,dest_node`
pub fn write_task_csv(out: impl Write, tasks: &[TaskSpec]) -> Result<(), SimError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(["created_at", "start_node", "dest_node"])?;
    for t in tasks {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_task_csv(input: impl Read) -> Result<Vec<TaskSpec>, SimError> {
    let mut r = csv::Reader::from_reader(input);
    let tasks: Vec<TaskSpec> = r.deserialize().collect::<Result<_, _>>()?;
    if tasks.windows(2).any(|p| p[1].created_at < p[0].created_at) {
        return Err(SimError::Config(
            "task CSV is not sorted by created_at".into(),
        ));
    }
    Ok(tasks)
}
