//! Equal-width histograms for plot data.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` strictly increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// `bins` equal-width bins spanning the data. The last bin is closed on
    /// the right; a constant sample gets the range `value ± 0.5`.
    pub fn new(values: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::domain("histogram needs at least one bin"));
        }
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::DomainAt {
                index,
                value,
                reason: "histogram values must be finite",
            });
        }
        let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins)
            .map(|k| if k == bins { hi } else { lo + k as f64 * width })
            .collect();
        if !width.is_finite() || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Degenerate(format!(
                "range [{lo}, {hi}] is too narrow for {bins} bins"
            )));
        }
        let mut counts = vec![0; bins];
        for &v in values {
            // position estimate, then nudge against the stored edges
            let mut k = (((v - lo) / width) as usize).min(bins - 1);
            while k > 0 && v < edges[k] {
                k -= 1;
            }
            while k + 1 < bins && v >= edges[k + 1] {
                k += 1;
            }
            counts[k] += 1;
        }
        Ok(Histogram { edges, counts })
    }

    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        self.edges.windows(2).zip(&self.counts).map(|(e, &c)| (e[0], e[1], c))
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}
