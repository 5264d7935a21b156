//! Goodness-of-fit tests for composite normality (mean and sd estimated from
//! the sample) and moment diagnostics.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::standard_normal;
use crate::error::{Error, Result};
use crate::special::{norm_cdf, Probability};

/// Smallest sample size either test accepts.
pub const MIN_TEST_SIZE: usize = 8;
/// Reported p-values never go below this.
pub const P_FLOOR: f64 = 1e-16;
pub const DEFAULT_KS_REPLICATES: usize = 10_000;
pub const DEFAULT_KS_SEED: u64 = 0x5eed_4b53;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TestMethod {
    #[serde(rename = "anderson-darling")]
    AndersonDarling,
    #[serde(rename = "kolmogorov-smirnov")]
    KolmogorovSmirnov,
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestMethod::AndersonDarling => "anderson-darling",
            TestMethod::KolmogorovSmirnov => "kolmogorov-smirnov",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestReport {
    pub method: TestMethod,
    pub statistic: f64,
    pub p_value: Probability,
    pub n: usize,
    pub estimated_mean: f64,
    pub estimated_sd: f64,
}

impl TestReport {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value.value() < alpha
    }
}

/// Sorted copy plus mean and (n - 1)-denominator sd, with the shared
/// preconditions of both tests checked.
fn standardized(values: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    if values.len() < MIN_TEST_SIZE {
        return Err(Error::SampleTooSmall {
            given: values.len(),
            needed: MIN_TEST_SIZE,
        });
    }
    let (mean, sd) = mean_sd(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((sorted, mean, sd))
}

fn mean_sd(values: &[f64]) -> Result<(f64, f64)> {
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::DomainAt {
            index,
            value,
            reason: "observations must be finite",
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    let sd = (ss / (n - 1.0)).sqrt();
    if sd.is_nan() || sd <= 0.0 || sd <= mean.abs() * 1e-14 {
        return Err(Error::Degenerate("sample has zero variance".into()));
    }
    Ok((mean, sd))
}

fn ln_cdf(z: f64) -> f64 {
    norm_cdf(z).max(f64::MIN_POSITIVE).ln()
}

/// A² of a sorted sample against N(mean, sd²).
fn ad_statistic(sorted: &[f64], mean: f64, sd: f64) -> f64 {
    let n = sorted.len();
    let s: f64 = (0..n)
        .map(|i| {
            let lo = (sorted[i] - mean) / sd;
            let hi = (sorted[n - 1 - i] - mean) / sd;
            (2 * i + 1) as f64 * (ln_cdf(lo) + ln_cdf(-hi))
        })
        .sum();
    -(n as f64) - s / n as f64
}

/// Small-sample corrected statistic `A*² = A²(1 + 0.75/n + 2.25/n²)`.
pub fn ad_adjusted(a2: f64, n: usize) -> f64 {
    let n = n as f64;
    a2 * (1.0 + 0.75 / n + 2.25 / (n * n))
}

/// p-value of the composite-normal AD test from the adjusted statistic
/// (D'Agostino & Stephens 1986, Table 4.9).
///
/// The published fit jumps upward by ~0.0026 at A*² = 0.6; the upper branch
/// is capped at the lower branch's limit there so p stays non-increasing.
pub fn ad_p_value(a_star: f64) -> f64 {
    let a = a_star;
    let mid = |a: f64| (0.9177 - 4.279 * a - 1.38 * a * a).exp();
    let p = if a < 0.2 {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    } else if a < 0.34 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else if a < 0.6 {
        mid(a)
    } else if a < 10.0 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp().min(mid(0.6))
    } else {
        0.0
    };
    if p.is_nan() {
        P_FLOOR
    } else {
        p.clamp(P_FLOOR, 1.0)
    }
}

/// AD p-value of data already in ascending order; `None` when the variance
/// vanishes or a value is not finite.
pub(crate) fn ad_p_value_sorted(sorted: &[f64]) -> Option<f64> {
    let (mean, sd) = mean_sd(sorted).ok()?;
    let a2 = ad_statistic(sorted, mean, sd);
    Some(ad_p_value(ad_adjusted(a2, sorted.len())))
}

/// Anderson–Darling test for normality with estimated mean and sd.
///
/// `statistic` is the uncorrected A²; the p-value uses the corrected A*².
pub fn anderson_darling(values: &[f64]) -> Result<TestReport> {
    let (sorted, mean, sd) = standardized(values)?;
    let a2 = ad_statistic(&sorted, mean, sd);
    let p = ad_p_value(ad_adjusted(a2, sorted.len()));
    Ok(TestReport {
        method: TestMethod::AndersonDarling,
        statistic: a2,
        p_value: Probability::new(p)?,
        n: sorted.len(),
        estimated_mean: mean,
        estimated_sd: sd,
    })
}

/// KS distance of a sorted sample from N(mean, sd²).
fn ks_statistic(sorted: &[f64], mean: f64, sd: f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = norm_cdf((x - mean) / sd);
            let i = i as f64;
            ((i + 1.0) / n - f).max(f - i / n)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KsOptions {
    /// Monte Carlo replicates in the null table.
    pub replicates: usize,
    pub seed: u64,
}

impl Default for KsOptions {
    fn default() -> Self {
        KsOptions {
            replicates: DEFAULT_KS_REPLICATES,
            seed: DEFAULT_KS_SEED,
        }
    }
}

type NullKey = (usize, usize, u64);

fn null_cache() -> &'static Mutex<HashMap<NullKey, Arc<Vec<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<NullKey, Arc<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Sorted null distribution of the estimated-parameter KS statistic for
/// samples of size `n`. Replicate `r` draws from ChaCha stream `r` of the
/// seed, so the table is identical however the work is scheduled.
pub fn ks_null_table(n: usize, options: KsOptions) -> Arc<Vec<f64>> {
    let key = (n, options.replicates, options.seed);
    if let Some(t) = null_cache().lock().expect("cache poisoned").get(&key) {
        return Arc::clone(t);
    }
    let mut table: Vec<f64> = (0..options.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(r as u64);
            let mut draws: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
            draws.sort_by(f64::total_cmp);
            let m = draws.iter().sum::<f64>() / n as f64;
            let ss: f64 = draws.iter().map(|x| (x - m).powi(2)).sum();
            ks_statistic(&draws, m, (ss / (n as f64 - 1.0)).sqrt())
        })
        .collect();
    table.sort_by(f64::total_cmp);
    let table = Arc::new(table);
    null_cache()
        .lock()
        .expect("cache poisoned")
        .insert(key, Arc::clone(&table));
    table
}

/// Kolmogorov–Smirnov test for normality with estimated parameters, p-value
/// from a Monte Carlo null table (Lilliefors construction).
pub fn ks_normality(values: &[f64]) -> Result<TestReport> {
    ks_normality_with(values, KsOptions::default())
}

pub fn ks_normality_with(values: &[f64], options: KsOptions) -> Result<TestReport> {
    if options.replicates == 0 {
        return Err(Error::domain("KS null table needs at least one replicate"));
    }
    let (sorted, mean, sd) = standardized(values)?;
    let d = ks_statistic(&sorted, mean, sd);
    let table = ks_null_table(sorted.len(), options);
    let at_least = table.len() - table.partition_point(|&t| t < d);
    let p = (at_least + 1) as f64 / (table.len() + 1) as f64;
    Ok(TestReport {
        method: TestMethod::KolmogorovSmirnov,
        statistic: d,
        p_value: Probability::new(p)?,
        n: sorted.len(),
        estimated_mean: mean,
        estimated_sd: sd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    /// (n - 1)-denominator standard deviation.
    pub sd: f64,
    /// `m3 / m2^1.5` with population central moments.
    pub skewness: f64,
    /// `m4 / m2² - 3`; needs at least four observations.
    pub excess_kurtosis: Option<f64>,
}

pub fn moments(values: &[f64]) -> Result<Moments> {
    if values.len() < 2 {
        return Err(Error::SampleTooSmall {
            given: values.len(),
            needed: 2,
        });
    }
    let (mean, sd) = mean_sd(values)?;
    let n = values.len() as f64;
    let (m2, m3, m4) = values.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &x| {
        let d = x - mean;
        let d2 = d * d;
        (a + d2, b + d2 * d, c + d2 * d2)
    });
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    Ok(Moments {
        mean,
        sd,
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: (values.len() >= 4).then(|| m4 / (m2 * m2) - 3.0),
    })
}
