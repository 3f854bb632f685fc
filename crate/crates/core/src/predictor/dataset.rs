/// A task-start stream cut in time into a training prefix and test suffix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    starts: Vec<usize>,
    cut: usize,
}

impl Dataset {
    /// The first `round(len * train_fraction)` starts train, the rest test.
    pub fn temporal_split(starts: Vec<usize>, train_fraction: f64) -> Self {
        let fraction = train_fraction.clamp(0.0, 1.0);
        let cut = ((starts.len() as f64) * fraction).round() as usize;
        Dataset { starts, cut }
    }

    pub fn with_cut(starts: Vec<usize>, cut: usize) -> Self {
        assert!(cut <= starts.len());
        Dataset { starts, cut }
    }

    pub fn all(&self) -> &[usize] {
        &self.starts
    }

    pub fn cut(&self) -> usize {
        self.cut
    }

    pub fn train(&self) -> &[usize] {
        &self.starts[..self.cut]
    }

    pub fn test(&self) -> &[usize] {
        &self.starts[self.cut..]
    }

    /// Windows whose target lies in the test suffix; the first few windows
    /// reach back into the training prefix for context.
    pub fn test_samples(&self, window: usize) -> impl Iterator<Item = (&[usize], usize)> + '_ {
        (self.cut.max(window)..self.starts.len())
            .map(move |i| (&self.starts[i - window..i], self.starts[i]))
    }
}

/// Every `(seq[k..k+r], seq[k+r])`.
pub fn sliding_windows(seq: &[usize], r: usize) -> impl Iterator<Item = (&[usize], usize)> + '_ {
    (r..seq.len()).map(move |i| (&seq[i - r..i], seq[i]))
}
