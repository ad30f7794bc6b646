//! Observed censored data.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One subject: observed time `min(T, C)`, event flag, forcing value and
/// treatment indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObservedRecord {
    pub time_obs: f64,
    /// `true` when the failure was observed (`T <= C`).
    pub event: bool,
    pub forcing: f64,
    pub treated: bool,
}

impl ObservedRecord {
    pub fn new(time_obs: f64, event: bool, forcing: f64, treated: bool) -> Self {
        Self {
            time_obs,
            event,
            forcing,
            treated,
        }
    }

    fn check(&self) -> core::result::Result<(), &'static str> {
        if !(self.time_obs > 0.0) || !self.time_obs.is_finite() {
            return Err("observed time must be positive and finite");
        }
        if !self.forcing.is_finite() {
            return Err("forcing value must be finite");
        }
        Ok(())
    }
}

/// A validated, nonempty collection of records in input order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ObservedSample {
    records: Vec<ObservedRecord>,
}

impl ObservedSample {
    pub fn new(records: Vec<ObservedRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptySample);
        }
        for (index, r) in records.iter().enumerate() {
            r.check().map_err(|reason| Error::InvalidRecord { index, reason })?;
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[ObservedRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Always false; construction rejects empty samples.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, ObservedRecord> {
        self.records.iter()
    }

    pub fn into_records(self) -> Vec<ObservedRecord> {
        self.records
    }

    /// Fraction of records whose failure time is censored.
    pub fn censoring_rate(&self) -> f64 {
        let censored = self.records.iter().filter(|r| !r.event).count();
        censored as f64 / self.records.len() as f64
    }

    pub fn max_time(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.time_obs)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn forcing_range(&self) -> (f64, f64) {
        self.records
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.forcing), hi.max(r.forcing))
            })
    }

    /// Sharp assignment: sets `treated = forcing >= cutoff` on every record.
    pub fn assign_sharp_treatment(&mut self, cutoff: f64) {
        for r in &mut self.records {
            r.treated = r.forcing >= cutoff;
        }
    }

    /// Resample with the given record indices (bootstrap draws).
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            records: indices.iter().map(|&i| self.records[i]).collect(),
        }
    }
}

impl<'a> IntoIterator for &'a ObservedSample {
    type Item = &'a ObservedRecord;
    type IntoIter = core::slice::Iter<'a, ObservedRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}
