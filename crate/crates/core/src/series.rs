use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Sampled times with named real traces in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    traces: Vec<(String, Vec<f64>)>,
    pub metadata: BTreeMap<String, String>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>) -> Self {
        Self { times, traces: Vec::new(), metadata: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Adds or replaces a trace.
    pub fn push_trace(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if values.len() != self.times.len() {
            return Err(Error::DimensionMismatch { expected: self.times.len(), found: values.len() });
        }
        let name = name.into();
        match self.traces.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = values,
            None => self.traces.push((name, values)),
        }
        Ok(())
    }

    pub fn trace(&self, name: &str) -> Option<&[f64]> {
        self.traces.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn traces(&self) -> &[(String, Vec<f64>)] {
        &self.traces
    }

    pub fn trace_names(&self) -> impl Iterator<Item = &str> {
        self.traces.iter().map(|(n, _)| n.as_str())
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.insert(key.into(), value.into());
    }

    /// Uniform sample spacing (assumes at least two samples).
    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insertion_order_and_replace() {
        let mut s = TimeSeries::new(alloc::vec![0.0, 1.0]);
        s.push_trace("b", alloc::vec![1.0, 2.0]).unwrap();
        s.push_trace("a", alloc::vec![3.0, 4.0]).unwrap();
        s.push_trace("b", alloc::vec![5.0, 6.0]).unwrap();
        assert_eq!(s.trace_names().collect::<Vec<_>>(), ["b", "a"]);
        assert_eq!(s.trace("b").unwrap(), [5.0, 6.0]);
        assert!(s.push_trace("c", alloc::vec![1.0]).is_err());
    }
}
