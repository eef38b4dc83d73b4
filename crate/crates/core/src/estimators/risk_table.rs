use serde::Serialize;

use crate::error::{Error, Result};

/// Right-censored competing-risks observations of one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSample {
    times: Vec<f64>,
    statuses: Vec<u32>,
    causes: usize,
}

impl GroupSample {
    /// `statuses` use 0 for censoring and `1..=causes` for the event type.
    pub fn new(times: Vec<f64>, statuses: Vec<u32>, causes: usize) -> Result<Self> {
        if times.len() != statuses.len() {
            return Err(Error::Dimension(format!(
                "{} times but {} statuses",
                times.len(),
                statuses.len()
            )));
        }
        if causes == 0 {
            return Err(Error::domain("number of event types must be at least 1"));
        }
        if times.len() < 2 {
            return Err(Error::domain(format!(
                "a group needs at least 2 observations, got {}",
                times.len()
            )));
        }
        if let Some((j, t)) = times.iter().enumerate().find(|(_, t)| !(**t >= 0.0 && t.is_finite())) {
            return Err(Error::domain(format!("observation {j}: time {t} is not finite and nonnegative")));
        }
        if let Some((j, s)) = statuses.iter().enumerate().find(|(_, s)| **s as usize > causes) {
            return Err(Error::domain(format!("observation {j}: status {s} exceeds the {causes} event types")));
        }
        Ok(GroupSample {
            times,
            statuses,
            causes,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn statuses(&self) -> &[u32] {
        &self.statuses
    }

    pub fn causes(&self) -> usize {
        self.causes
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn observations(&self) -> impl Iterator<Item = (f64, u32)> + '_ {
        self.times.iter().copied().zip(self.statuses.iter().copied())
    }

    /// Same observations with every time multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        GroupSample::new(self.times.iter().map(|t| t * factor).collect(), self.statuses.clone(), self.causes)
    }

    /// Same observations with cause labels mapped through `relabel`
    /// (`relabel[m - 1]` is the new label of cause `m`).
    pub fn relabeled(&self, relabel: &[u32]) -> Result<Self> {
        let statuses = self
            .statuses
            .iter()
            .map(|&s| if s == 0 { 0 } else { relabel[s as usize - 1] })
            .collect();
        GroupSample::new(self.times.clone(), statuses, self.causes)
    }
}

/// Counting-process summary at the distinct observed times of one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskTable {
    times: Vec<f64>,
    at_risk: Vec<u32>,
    /// Row-major `times.len() x causes` event counts.
    events: Vec<u32>,
    censored: Vec<u32>,
    size: usize,
    causes: usize,
}

impl RiskTable {
    /// Builds the table from unsorted observations.
    pub fn from_observations(times: &[f64], statuses: &[u32], causes: usize) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::domain("cannot build a risk table from an empty sample"));
        }
        if times.len() != statuses.len() {
            return Err(Error::Dimension("times and statuses differ in length".into()));
        }
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        Ok(Self::from_sorted(
            order.into_iter().map(|j| (times[j], statuses[j])),
            causes,
        ))
    }

    /// Builds the table from observations already sorted by time.
    pub(crate) fn from_sorted(sorted: impl Iterator<Item = (f64, u32)>, causes: usize) -> Self {
        let mut times = Vec::new();
        let mut events: Vec<u32> = Vec::new();
        let mut censored = Vec::new();
        for (t, s) in sorted {
            if times.last() != Some(&t) {
                times.push(t);
                events.extend(std::iter::repeat_n(0, causes));
                censored.push(0);
            }
            let row = times.len() - 1;
            if s == 0 {
                censored[row] += 1;
            } else {
                events[row * causes + s as usize - 1] += 1;
            }
        }
        let mut at_risk = vec![0u32; times.len()];
        let mut remaining = 0u32;
        for j in (0..times.len()).rev() {
            remaining += censored[j] + events[j * causes..(j + 1) * causes].iter().sum::<u32>();
            at_risk[j] = remaining;
        }
        RiskTable {
            size: remaining as usize,
            times,
            at_risk,
            events,
            censored,
            causes,
        }
    }

    pub fn from_sample(sample: &GroupSample) -> Self {
        Self::from_observations(sample.times(), sample.statuses(), sample.causes())
            .expect("a validated sample is never empty")
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn at_risk(&self) -> &[u32] {
        &self.at_risk
    }

    /// Event counts of `cause` (1-based) at each distinct time.
    pub fn events_of(&self, cause: usize) -> Vec<u32> {
        (0..self.times.len())
            .map(|j| self.events[j * self.causes + cause - 1])
            .collect()
    }

    pub(crate) fn event_row(&self, j: usize) -> &[u32] {
        &self.events[j * self.causes..(j + 1) * self.causes]
    }

    pub fn total_events(&self, j: usize) -> u32 {
        self.event_row(j).iter().sum()
    }

    pub fn censored(&self) -> &[u32] {
        &self.censored
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn causes(&self) -> usize {
        self.causes
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `Y(t)`: number of observations with time `>= t`.
    pub fn at_risk_at(&self, t: f64) -> u32 {
        match self.times.partition_point(|&x| x < t) {
            j if j == self.times.len() => 0,
            j => self.at_risk[j],
        }
    }
}

pub fn build_risk_table(sample: &GroupSample) -> RiskTable {
    RiskTable::from_sample(sample)
}
