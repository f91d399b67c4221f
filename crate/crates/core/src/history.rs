use serde::{Deserialize, Serialize};

/// One season's outcome: the rate applied, the yield observed and the profit realized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub arm: f64,
    #[serde(rename = "yield")]
    pub yield_: f64,
    pub profit: f64,
}

/// Ordered bandit feedback.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct History(Vec<Observation>);

impl History {
    pub fn new() -> Self {
        History(Vec::new())
    }

    pub fn push(&mut self, obs: Observation) {
        self.0.push(obs);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Observation> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Observation] {
        &self.0
    }

    /// `(rate, yield)` pairs in observation order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.0.iter().map(|o| (o.arm, o.yield_)).collect()
    }

    pub fn distinct_arms(&self) -> usize {
        distinct_count(self.0.iter().map(|o| o.arm))
    }

    /// Number of times each grid arm was played.
    pub fn counts(&self, arms: &[f64]) -> Vec<usize> {
        arms.iter()
            .map(|a| self.0.iter().filter(|o| o.arm == *a).count())
            .collect()
    }
}

impl From<Vec<Observation>> for History {
    fn from(v: Vec<Observation>) -> Self {
        History(v)
    }
}

impl<'a> IntoIterator for &'a History {
    type Item = &'a Observation;
    type IntoIter = std::slice::Iter<'a, Observation>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

pub(crate) fn distinct_count(xs: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = xs.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}
