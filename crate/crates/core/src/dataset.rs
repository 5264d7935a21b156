//! Long-format longitudinal data: one value per (subject, session, measure).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub subject: String,
    pub session: u32,
    pub measure: String,
    pub value: f64,
}

/// Session → subject → value for one measure.
pub type SessionTable = BTreeMap<u32, BTreeMap<String, f64>>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LongitudinalDataset {
    measures: BTreeMap<String, SessionTable>,
    session_times: Option<BTreeMap<u32, f64>>,
}

impl LongitudinalDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records<I: IntoIterator<Item = Record>>(records: I) -> Result<Self> {
        let mut data = Self::new();
        for r in records {
            data.insert(r)?;
        }
        Ok(data)
    }

    /// Adds one observation. Duplicate keys and non-finite values are rejected.
    pub fn insert(&mut self, record: Record) -> Result<()> {
        let Record {
            subject,
            session,
            measure,
            value,
        } = record;
        if !value.is_finite() {
            return Err(Error::domain(format!(
                "non-finite value for subject `{subject}`, session {session}, measure `{measure}`"
            )));
        }
        let slot = self
            .measures
            .entry(measure.clone())
            .or_default()
            .entry(session)
            .or_default();
        if slot.contains_key(&subject) {
            return Err(Error::domain(format!(
                "duplicate observation for subject `{subject}`, session {session}, measure `{measure}`"
            )));
        }
        slot.insert(subject, value);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.measures.values().flat_map(|s| s.values()).map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Measure names in sorted order.
    pub fn measures(&self) -> impl Iterator<Item = &str> {
        self.measures.keys().map(String::as_str)
    }

    pub fn measure(&self, name: &str) -> Result<&SessionTable> {
        self.measures
            .get(name)
            .ok_or_else(|| Error::UnknownMeasure(name.to_string()))
    }

    /// Distinct subjects across all measures and sessions.
    pub fn subject_count(&self) -> usize {
        let mut subjects: Vec<&str> = self
            .measures
            .values()
            .flat_map(|s| s.values())
            .flat_map(|m| m.keys().map(String::as_str))
            .collect();
        subjects.sort_unstable();
        subjects.dedup();
        subjects.len()
    }

    /// All values of a measure, ordered by session then subject.
    pub fn pooled(&self, name: &str) -> Result<Vec<f64>> {
        Ok(pooled(self.measure(name)?))
    }

    /// Replaces the values of a measure with `values`, given in the order of
    /// [`pooled`](Self::pooled).
    pub fn replace_pooled(&mut self, name: &str, values: &[f64]) -> Result<()> {
        let table = self
            .measures
            .get_mut(name)
            .ok_or_else(|| Error::UnknownMeasure(name.to_string()))?;
        let expected = table.values().map(BTreeMap::len).sum();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                left: expected,
                right: values.len(),
            });
        }
        for (slot, &v) in table.values_mut().flat_map(|s| s.values_mut()).zip(values) {
            *slot = v;
        }
        Ok(())
    }

    /// Records ordered by measure, session, subject.
    pub fn records(&self) -> impl Iterator<Item = Record> + '_ {
        self.measures.iter().flat_map(|(measure, sessions)| {
            sessions.iter().flat_map(move |(&session, subjects)| {
                subjects.iter().map(move |(subject, &value)| Record {
                    subject: subject.clone(),
                    session,
                    measure: measure.clone(),
                    value,
                })
            })
        })
    }

    pub fn session_times(&self) -> Option<&BTreeMap<u32, f64>> {
        self.session_times.as_ref()
    }

    /// Days since the first session, keyed by session index.
    pub fn set_session_times(&mut self, times: BTreeMap<u32, f64>) {
        self.session_times = Some(times);
    }
}

pub(crate) fn pooled(table: &SessionTable) -> Vec<f64> {
    table.values().flat_map(|s| s.values().copied()).collect()
}
