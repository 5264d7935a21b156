//! Analytic source distributions and the exact normalizing transform
//! `y(x) = Φ⁻¹(F(x))` for laws whose CDF is known in closed form.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_quantile, Probability};

/// A continuous law described by its density, distribution and quantile.
///
/// Implementors only need `cdf` and `quantile` to be usable as a source or
/// target of a transform; `sf` should be overridden whenever `1 - cdf` loses
/// precision in the upper tail.
pub trait ContinuousDistribution: Send + Sync {
    fn pdf(&self, x: f64) -> Result<f64>;

    fn cdf(&self, x: f64) -> Result<Probability>;

    /// Survival function `1 - F(x)`.
    fn sf(&self, x: f64) -> Result<Probability> {
        Ok(self.cdf(x)?.complement())
    }

    fn quantile(&self, p: Probability) -> Result<f64>;

    fn median(&self) -> f64 {
        self.quantile(Probability::HALF)
            .expect("median of a continuous law is finite")
    }
}

fn finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("argument {x} is not finite")))
    }
}

fn prob(v: f64) -> Probability {
    Probability::new(v.clamp(0.0, 1.0)).expect("clamped")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mean: f64,
    pub sd: f64,
}

impl NormalParams {
    pub const STANDARD: NormalParams = NormalParams { mean: 0.0, sd: 1.0 };

    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::domain(format!(
                "normal parameters need finite mean and sd > 0 (got {mean}, {sd})"
            )));
        }
        Ok(NormalParams { mean, sd })
    }
}

impl Default for NormalParams {
    fn default() -> Self {
        Self::STANDARD
    }
}

impl ContinuousDistribution for NormalParams {
    fn pdf(&self, x: f64) -> Result<f64> {
        finite(x)?;
        let z = (x - self.mean) / self.sd;
        Ok((-0.5 * z * z).exp() / (self.sd * (2.0 * std::f64::consts::PI).sqrt()))
    }

    fn cdf(&self, x: f64) -> Result<Probability> {
        finite(x)?;
        Ok(prob(norm_cdf((x - self.mean) / self.sd)))
    }

    fn sf(&self, x: f64) -> Result<Probability> {
        finite(x)?;
        Ok(prob(norm_cdf((self.mean - x) / self.sd)))
    }

    fn quantile(&self, p: Probability) -> Result<f64> {
        let z = open_quantile(p)?;
        Ok(self.mean + self.sd * z)
    }
}

fn open_quantile(p: Probability) -> Result<f64> {
    let z = norm_quantile(p.value());
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::domain(format!(
            "quantile at probability {} is unbounded",
            p.value()
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalParams {
    pub log_mean: f64,
    pub log_sd: f64,
}

impl LognormalParams {
    pub fn new(log_mean: f64, log_sd: f64) -> Result<Self> {
        if !log_mean.is_finite() || !(log_sd > 0.0 && log_sd.is_finite()) {
            return Err(Error::domain(format!(
                "lognormal parameters need finite log_mean and log_sd > 0 (got {log_mean}, {log_sd})"
            )));
        }
        Ok(LognormalParams { log_mean, log_sd })
    }

    fn z(&self, x: f64) -> Result<f64> {
        finite(x)?;
        if x < 0.0 {
            return Err(Error::domain(format!("lognormal support is x >= 0, got {x}")));
        }
        Ok((x.ln() - self.log_mean) / self.log_sd)
    }
}

impl ContinuousDistribution for LognormalParams {
    fn pdf(&self, x: f64) -> Result<f64> {
        let z = self.z(x)?;
        if x == 0.0 {
            return Ok(0.0);
        }
        Ok((-0.5 * z * z).exp() / (x * self.log_sd * (2.0 * std::f64::consts::PI).sqrt()))
    }

    fn cdf(&self, x: f64) -> Result<Probability> {
        Ok(prob(norm_cdf(self.z(x)?)))
    }

    fn sf(&self, x: f64) -> Result<Probability> {
        Ok(prob(norm_cdf(-self.z(x)?)))
    }

    fn quantile(&self, p: Probability) -> Result<f64> {
        if p.value() == 0.0 {
            return Ok(0.0);
        }
        Ok((self.log_mean + self.log_sd * open_quantile(p)?).exp())
    }
}

/// Two-parameter Weibull: density `a b^-a x^(a-1) exp(-(x/b)^a)` on `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub shape: f64,
    pub scale: f64,
}

impl WeibullParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(shape) || !ok(scale) {
            return Err(Error::domain(format!(
                "Weibull parameters must be positive (got shape {shape}, scale {scale})"
            )));
        }
        Ok(WeibullParams { shape, scale })
    }

    fn hazard_integral(&self, x: f64) -> Result<f64> {
        finite(x)?;
        if x < 0.0 {
            return Err(Error::domain(format!("Weibull support is x >= 0, got {x}")));
        }
        Ok((x / self.scale).powf(self.shape))
    }
}

impl ContinuousDistribution for WeibullParams {
    fn pdf(&self, x: f64) -> Result<f64> {
        let h = self.hazard_integral(x)?;
        let (a, b) = (self.shape, self.scale);
        Ok(a / b * (x / b).powf(a - 1.0) * (-h).exp())
    }

    fn cdf(&self, x: f64) -> Result<Probability> {
        Ok(prob(-(-self.hazard_integral(x)?).exp_m1()))
    }

    fn sf(&self, x: f64) -> Result<Probability> {
        Ok(prob((-self.hazard_integral(x)?).exp()))
    }

    fn quantile(&self, p: Probability) -> Result<f64> {
        if p.value() == 1.0 {
            return Err(Error::domain("Weibull quantile at 1 is unbounded"));
        }
        Ok(self.scale * (-(-p.value()).ln_1p()).powf(1.0 / self.shape))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformParams {
    pub low: f64,
    pub high: f64,
}

impl UniformParams {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(Error::domain(format!(
                "uniform bounds need low < high (got {low}, {high})"
            )));
        }
        Ok(UniformParams { low, high })
    }

    fn check(&self, x: f64) -> Result<()> {
        finite(x)?;
        if x < self.low || x > self.high {
            return Err(Error::domain(format!(
                "{x} outside uniform support [{}, {}]",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

impl ContinuousDistribution for UniformParams {
    fn pdf(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(1.0 / (self.high - self.low))
    }

    fn cdf(&self, x: f64) -> Result<Probability> {
        self.check(x)?;
        Ok(prob((x - self.low) / (self.high - self.low)))
    }

    fn sf(&self, x: f64) -> Result<Probability> {
        self.check(x)?;
        Ok(prob((self.high - x) / (self.high - self.low)))
    }

    fn quantile(&self, p: Probability) -> Result<f64> {
        Ok(self.low + p.value() * (self.high - self.low))
    }
}

/// One of the built-in laws, parsed from `name:p1,p2`
/// (`normal:0,1`, `lognormal:0,1`, `weibull:9,1`, `uniform:0,1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Marginal {
    Normal(NormalParams),
    Lognormal(LognormalParams),
    Weibull(WeibullParams),
    Uniform(UniformParams),
}

impl Marginal {
    fn as_dyn(&self) -> &dyn ContinuousDistribution {
        match self {
            Marginal::Normal(d) => d,
            Marginal::Lognormal(d) => d,
            Marginal::Weibull(d) => d,
            Marginal::Uniform(d) => d,
        }
    }
}

impl ContinuousDistribution for Marginal {
    fn pdf(&self, x: f64) -> Result<f64> {
        self.as_dyn().pdf(x)
    }
    fn cdf(&self, x: f64) -> Result<Probability> {
        self.as_dyn().cdf(x)
    }
    fn sf(&self, x: f64) -> Result<Probability> {
        self.as_dyn().sf(x)
    }
    fn quantile(&self, p: Probability) -> Result<f64> {
        self.as_dyn().quantile(p)
    }
}

impl FromStr for Marginal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let params = args
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::domain(format!("bad distribution parameter `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let two = |default: (f64, f64)| -> Result<(f64, f64)> {
            match params.as_slice() {
                [] => Ok(default),
                [a, b] => Ok((*a, *b)),
                _ => Err(Error::domain(format!(
                    "distribution `{name}` takes two parameters, got {}",
                    params.len()
                ))),
            }
        };
        match name.trim().to_ascii_lowercase().as_str() {
            "normal" => {
                let (m, s) = two((0.0, 1.0))?;
                Ok(Marginal::Normal(NormalParams::new(m, s)?))
            }
            "lognormal" => {
                let (m, s) = two((0.0, 1.0))?;
                Ok(Marginal::Lognormal(LognormalParams::new(m, s)?))
            }
            "weibull" => {
                let (a, b) = two((9.0, 1.0))?;
                Ok(Marginal::Weibull(WeibullParams::new(a, b)?))
            }
            "uniform" => {
                let (lo, hi) = two((0.0, 1.0))?;
                Ok(Marginal::Uniform(UniformParams::new(lo, hi)?))
            }
            other => Err(Error::domain(format!("unknown distribution `{other}`"))),
        }
    }
}

impl fmt::Display for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marginal::Normal(p) => write!(f, "normal:{},{}", p.mean, p.sd),
            Marginal::Lognormal(p) => write!(f, "lognormal:{},{}", p.log_mean, p.log_sd),
            Marginal::Weibull(p) => write!(f, "weibull:{},{}", p.shape, p.scale),
            Marginal::Uniform(p) => write!(f, "uniform:{},{}", p.low, p.high),
        }
    }
}

/// Maps `x` through its own CDF and then the standard normal quantile.
///
/// Above the median the survival function is used instead of the CDF so that
/// upper-tail values keep their precision.
pub fn analytic_gaussianize<D>(x: f64, dist: &D) -> Result<f64>
where
    D: ContinuousDistribution + ?Sized,
{
    let p = dist.cdf(x)?.value();
    let y = if p <= 0.5 {
        norm_quantile(p)
    } else {
        -norm_quantile(dist.sf(x)?.value())
    };
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::Overflow { index: None, value: x })
    }
}

/// [`analytic_gaussianize`] over a slice, rescaled to `target`.
pub fn analytic_gaussianize_all<D>(values: &[f64], dist: &D, target: NormalParams) -> Result<Vec<f64>>
where
    D: ContinuousDistribution + ?Sized,
{
    values
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            analytic_gaussianize(x, dist)
                .map(|y| target.mean + target.sd * y)
                .map_err(|e| match e {
                    Error::Overflow { value, .. } => Error::Overflow { index: Some(i), value },
                    Error::Domain(reason) => Error::domain(format!("index {i}: {reason}")),
                    other => other,
                })
        })
        .collect()
}

/// A uniform draw on the open interval (0, 1).
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// A standard normal draw by inversion.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    norm_quantile(open_uniform(rng))
}

/// `n` draws from `dist` by inverse-CDF sampling.
pub fn sample<D, R>(dist: &D, n: usize, rng: &mut R) -> Vec<f64>
where
    D: ContinuousDistribution + ?Sized,
    R: Rng + ?Sized,
{
    (0..n)
        .map(|_| {
            let p = Probability::new(open_uniform(rng)).expect("open interval");
            dist.quantile(p).expect("quantile finite on (0, 1)")
        })
        .collect()
}
