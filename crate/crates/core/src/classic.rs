//! Logarithm, logit and Box-Cox transforms, and Box-Cox parameter fitting by
//! maximizing the Anderson–Darling p-value over a parameter grid.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::normality::{ad_p_value_sorted, MIN_TEST_SIZE};
use crate::special::Probability;

/// Below this |λ1| the log branch is taken.
pub const LOG_BRANCH_THRESHOLD: f64 = 1e-9;

fn elementwise(
    values: &[f64],
    reason: &'static str,
    ok: impl Fn(f64) -> bool,
    f: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if ok(value) {
                Ok(f(value))
            } else {
                Err(Error::DomainAt { index, value, reason })
            }
        })
        .collect()
}

/// Natural logarithm of every value; all values must be positive.
pub fn log_transform(values: &[f64]) -> Result<Vec<f64>> {
    elementwise(
        values,
        "log needs positive values",
        |v| v > 0.0 && v.is_finite(),
        f64::ln,
    )
}

/// `ln(x / (1 - x))` of every value; all values must lie in (0, 1).
pub fn logit_transform(values: &[f64]) -> Result<Vec<f64>> {
    elementwise(
        values,
        "logit needs values in (0, 1)",
        |v| v > 0.0 && v < 1.0,
        |v| (v / (1.0 - v)).ln(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxCoxParams {
    /// Power.
    pub lambda1: f64,
    /// Shift applied before the power.
    pub lambda2: f64,
}

impl BoxCoxParams {
    pub fn new(lambda1: f64, lambda2: f64) -> Self {
        BoxCoxParams { lambda1, lambda2 }
    }

    fn shifted(&self, y: f64) -> Option<f64> {
        let u = y + self.lambda2;
        (u > 0.0 && u.is_finite()).then_some(u)
    }
}

// (u^λ - 1)/λ, written with expm1 so it stays accurate as λ → 0.
#[inline]
fn power_branch(u: f64, lambda: f64) -> f64 {
    if lambda.abs() < LOG_BRANCH_THRESHOLD {
        u.ln()
    } else {
        (lambda * u.ln()).exp_m1() / lambda
    }
}

/// Two-parameter Box-Cox transform of a single value.
pub fn boxcox(y: f64, params: BoxCoxParams) -> Result<f64> {
    match params.shifted(y) {
        Some(u) => Ok(power_branch(u, params.lambda1)),
        None => Err(Error::domain(format!(
            "Box-Cox needs y + lambda2 > 0 (y = {y}, lambda2 = {})",
            params.lambda2
        ))),
    }
}

/// Box-Cox transform divided by `λ1·gm^(λ1-1)`, where `gm` is the geometric
/// mean of the shifted sample; the λ1 → 0 limit is `gm·ln(y + λ2)`.
pub fn boxcox_scaled(values: &[f64], params: BoxCoxParams) -> Result<Vec<f64>> {
    let logs = values
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            params.shifted(value).map(f64::ln).ok_or(Error::DomainAt {
                index,
                value,
                reason: "Box-Cox needs y + lambda2 > 0",
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if logs.is_empty() {
        return Ok(Vec::new());
    }
    let log_gm = logs.iter().sum::<f64>() / logs.len() as f64;
    let l1 = params.lambda1;
    Ok(if l1.abs() < LOG_BRANCH_THRESHOLD {
        let gm = log_gm.exp();
        logs.iter().map(|l| gm * l).collect()
    } else {
        let denom = l1 * ((l1 - 1.0) * log_gm).exp();
        logs.iter().map(|l| (l1 * l).exp_m1() / denom).collect()
    })
}

/// Inclusive arithmetic range `min:step:max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRange {
    pub min: f64,
    pub step: f64,
    pub max: f64,
}

impl GridRange {
    pub fn new(min: f64, step: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && step.is_finite() && max.is_finite()) || step <= 0.0 || max < min {
            return Err(Error::domain(format!(
                "grid range needs min <= max and step > 0 (got {min}:{step}:{max})"
            )));
        }
        if (max - min) / step > 1e6 {
            return Err(Error::domain("grid range has more than a million points"));
        }
        Ok(GridRange { min, step, max })
    }

    /// Grid points, rounded to 12 decimals so that e.g. 0 comes out as 0.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| {
                let v = self.min + k as f64 * self.step;
                (v * 1e12).round() / 1e12
            })
            .collect()
    }
}

impl FromStr for GridRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(Error::domain(format!("expected min:step:max, got `{s}`")));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::domain(format!("bad number `{t}` in grid `{s}`")))
        };
        GridRange::new(num(a)?, num(b)?, num(c)?)
    }
}

impl fmt::Display for GridRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.step, self.max)
    }
}

/// Candidate shifts for the fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ShiftGrid {
    /// `count` evenly spaced shifts scaled to the data: from `-0.99·min` to
    /// the sample span when every value is positive, otherwise from
    /// `-min + 0.01·span` to `-min + span`. For positive data the unshifted
    /// transform (λ2 = 0) is added as well.
    DataRelative {
        count: usize,
    },
    Explicit(Vec<f64>),
}

impl ShiftGrid {
    pub fn values(&self, data: &[f64]) -> Vec<f64> {
        match self {
            ShiftGrid::Explicit(v) => v.clone(),
            ShiftGrid::DataRelative { count } => {
                let min = data.iter().copied().fold(f64::INFINITY, f64::min);
                let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let span = max - min;
                let (lo, hi) = if min > 0.0 {
                    (-0.99 * min, span)
                } else {
                    (-min + 0.01 * span, -min + span)
                };
                let mut v: Vec<f64> = match count {
                    0 => Vec::new(),
                    1 => vec![lo],
                    _ => (0..*count)
                        .map(|k| lo + (hi - lo) * k as f64 / (*count - 1) as f64)
                        .collect(),
                };
                if min > 0.0 && *count > 0 && !v.contains(&0.0) {
                    v.push(0.0);
                }
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCoxGrid {
    pub lambda1: GridRange,
    pub lambda2: ShiftGrid,
}

impl Default for BoxCoxGrid {
    /// λ1 from -2 to 3 in steps of 0.05; 41 data-relative shifts.
    fn default() -> Self {
        BoxCoxGrid {
            lambda1: GridRange {
                min: -2.0,
                step: 0.05,
                max: 3.0,
            },
            lambda2: ShiftGrid::DataRelative { count: 41 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxCoxFit {
    pub params: BoxCoxParams,
    pub ad_p_value: Probability,
    /// Candidate pairs on the grid, feasible or not.
    pub grid_evaluations: usize,
    /// Candidate pairs for which every `y + λ2 > 0`.
    pub feasible_evaluations: usize,
}

// Higher p first, then smaller |λ1|, then smaller |λ2|; the signed values
// settle exact magnitude ties so the winner never depends on evaluation order.
fn better(a: &(f64, f64, f64), b: &(f64, f64, f64)) -> Ordering {
    b.2.total_cmp(&a.2)
        .then(a.0.abs().total_cmp(&b.0.abs()))
        .then(a.1.abs().total_cmp(&b.1.abs()))
        .then(a.0.total_cmp(&b.0))
        .then(a.1.total_cmp(&b.1))
}

/// Box-Cox parameters on `grid` maximizing the AD p-value of the transformed
/// sample. Infeasible pairs (some `y + λ2 <= 0`) are skipped.
pub fn fit_boxcox(values: &[f64], grid: &BoxCoxGrid) -> Result<BoxCoxFit> {
    if values.len() < MIN_TEST_SIZE {
        return Err(Error::SampleTooSmall {
            given: values.len(),
            needed: MIN_TEST_SIZE,
        });
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::DomainAt {
            index,
            value,
            reason: "observations must be finite",
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let l1s = grid.lambda1.values();
    let l2s = grid.lambda2.values(&sorted);
    let total = l1s.len() * l2s.len();
    if total == 0 {
        return Err(Error::domain("Box-Cox grid is empty"));
    }
    let min = sorted[0];

    // Box-Cox is increasing in y, so the transformed data stay sorted.
    let candidates: Vec<(f64, f64, f64)> = l2s
        .par_iter()
        .filter(|&&l2| min + l2 > 0.0)
        .flat_map_iter(|&l2| {
            let logs: Vec<f64> = sorted.iter().map(|y| (y + l2).ln()).collect();
            let mut buf = vec![0.0; logs.len()];
            l1s.iter()
                .filter_map(|&l1| {
                    for (b, &l) in buf.iter_mut().zip(&logs) {
                        *b = if l1.abs() < LOG_BRANCH_THRESHOLD {
                            l
                        } else {
                            (l1 * l).exp_m1() / l1
                        };
                    }
                    ad_p_value_sorted(&buf).map(|p| (l1, l2, p))
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let feasible = candidates.len();
    let best = candidates
        .into_iter()
        .min_by(better)
        .ok_or(Error::InfeasibleGrid { evaluated: total })?;
    Ok(BoxCoxFit {
        params: BoxCoxParams::new(best.0, best.1),
        ad_p_value: Probability::new(best.2)?,
        grid_evaluations: total,
        feasible_evaluations: feasible,
    })
}
