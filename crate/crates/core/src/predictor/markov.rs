/// Empirical first-order transition counts between stations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkovPredictor {
    stations: usize,
    /// `counts[i * stations + j]` = times `j` was followed by `i`
    counts: Vec<u64>,
    totals: Vec<u64>,
}

impl MarkovPredictor {
    pub fn new(stations: usize) -> Self {
        MarkovPredictor {
            stations,
            counts: vec![0; stations * stations],
            totals: vec![0; stations],
        }
    }

    pub fn fit(stations: usize, sequence: &[usize]) -> Self {
        let mut m = Self::new(stations);
        for &s in sequence {
            m.totals[s] += 1;
        }
        for pair in sequence.windows(2) {
            m.observe(pair[0], pair[1]);
        }
        m
    }

    pub fn stations(&self) -> usize {
        self.stations
    }

    pub fn observe(&mut self, prev: usize, next: usize) {
        self.counts[next * self.stations + prev] += 1;
    }

    pub fn count(&self, next: usize, prev: usize) -> u64 {
        self.counts[next * self.stations + prev]
    }

    /// Most frequent station overall, lowest index on ties.
    pub fn global_mode(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.totals.iter().enumerate() {
            if c > self.totals[best] {
                best = i;
            }
        }
        best
    }

    /// `argmax_i count(i, j)`, falling back to the global mode for an unseen `j`.
    pub fn predict(&self, prev: usize) -> usize {
        let column = (0..self.stations).map(|i| self.count(i, prev));
        let mut best: Option<(usize, u64)> = None;
        for (i, c) in column.enumerate() {
            if c > 0 && best.is_none_or(|(_, b)| c > b) {
                best = Some((i, c));
            }
        }
        best.map_or_else(|| self.global_mode(), |(i, _)| i)
    }

    /// Fraction of `(prev, next)` pairs it predicts.
    pub fn accuracy(&self, samples: impl IntoIterator<Item = (usize, usize)>) -> f64 {
        let (mut hit, mut total) = (0usize, 0usize);
        for (prev, next) in samples {
            total += 1;
            hit += usize::from(self.predict(prev) == next);
        }
        if total == 0 {
            0.0
        } else {
            hit as f64 / total as f64
        }
    }
}

pub fn markov_fit_predict(counts: &MarkovPredictor, last: usize) -> usize {
    counts.predict(last)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_argmax() {
        let mut m = MarkovPredictor::new(3);
        for _ in 0..7 {
            m.observe(0, 1);
        }
        m.observe(0, 2);
        m.observe(0, 2);
        assert_eq!(markov_fit_predict(&m, 0), 1);
    }

    #[test]
    fn unseen_column_uses_global_mode() {
        let m = MarkovPredictor::fit(6, &[4, 4, 1, 4, 2, 4]);
        assert_eq!(m.count(4, 1), 1);
        assert_eq!(markov_fit_predict(&m, 5), 4);
    }

    #[test]
    fn ties_take_lowest_index() {
        let mut m = MarkovPredictor::new(3);
        m.observe(1, 2);
        m.observe(1, 0);
        assert_eq!(m.predict(1), 0);
    }
}
