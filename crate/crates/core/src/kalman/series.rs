use chrono::{Days, NaiveDate};

use crate::ingest::IceObservation;

/// A gap-aware daily series: `values[i]` belongs to `start + i` days.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub start: NaiveDate,
    pub values: Vec<Option<f64>>,
}

impl DailySeries {
    /// Lay out observations of a single point on a daily axis from the first
    /// to the last observed day. Missing days become `None`; no values are
    /// invented.
    pub fn from_observations(records: &[IceObservation]) -> Option<Self> {
        let first = records.iter().map(IceObservation::day).min()?;
        let last = records.iter().map(IceObservation::day).max()?;
        let len = (last - first).num_days() as usize + 1;
        let mut values = vec![None; len];
        for r in records {
            values[(r.day() - first).num_days() as usize] = Some(r.concentration);
        }
        Some(Self {
            start: first,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn observed(&self) -> usize {
        self.values.iter().flatten().count()
    }

    pub fn date_of(&self, index: usize) -> NaiveDate {
        self.start + Days::new(index as u64)
    }

    /// Day of the final entry.
    pub fn end(&self) -> NaiveDate {
        self.date_of(self.len().saturating_sub(1))
    }
}
