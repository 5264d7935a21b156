//! Bivariate normal ↔ unit square maps by sequential conditioning.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_quantile, Probability};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BivariateNormalParams {
    pub mean1: f64,
    pub mean2: f64,
    pub sd1: f64,
    pub sd2: f64,
    pub rho: f64,
}

impl BivariateNormalParams {
    pub fn new(mean1: f64, mean2: f64, sd1: f64, sd2: f64, rho: f64) -> Result<Self> {
        if !(mean1.is_finite() && mean2.is_finite()) {
            return Err(Error::domain("means must be finite"));
        }
        if !(sd1 > 0.0 && sd1.is_finite() && sd2 > 0.0 && sd2.is_finite()) {
            return Err(Error::domain(format!(
                "standard deviations must be positive (got {sd1}, {sd2})"
            )));
        }
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::domain(format!("correlation must lie in (-1, 1), got {rho}")));
        }
        Ok(BivariateNormalParams {
            mean1,
            mean2,
            sd1,
            sd2,
            rho,
        })
    }

    /// Standard margins with correlation `rho`.
    pub fn standard(rho: f64) -> Result<Self> {
        Self::new(0.0, 0.0, 1.0, 1.0, rho)
    }

    fn conditional_sd(&self) -> f64 {
        self.sd2 * (1.0 - self.rho * self.rho).sqrt()
    }
}

/// Maps `(y1, y2)` to `(Φ(z1), Φ(r))`, where `z1` is the standardized first
/// coordinate and `r` the standardized residual of `y2` given `y1`.
pub fn forward(y1: f64, y2: f64, p: &BivariateNormalParams) -> Result<(Probability, Probability)> {
    if !(y1.is_finite() && y2.is_finite()) {
        return Err(Error::domain(format!("inputs must be finite (got {y1}, {y2})")));
    }
    let d1 = y1 - p.mean1;
    let cond_mean = p.mean2 + p.rho * (p.sd2 / p.sd1) * d1;
    let x1 = norm_cdf(d1 / p.sd1);
    let x2 = norm_cdf((y2 - cond_mean) / p.conditional_sd());
    Ok((Probability::new(x1)?, Probability::new(x2)?))
}

/// Inverse of [`forward`]; both probabilities must lie strictly inside (0, 1).
pub fn inverse(x1: Probability, x2: Probability, p: &BivariateNormalParams) -> Result<(f64, f64)> {
    let interior = |x: Probability| x.value() > 0.0 && x.value() < 1.0;
    if !(interior(x1) && interior(x2)) {
        return Err(Error::domain(format!(
            "probabilities must lie in (0, 1) (got {}, {})",
            x1.value(),
            x2.value()
        )));
    }
    let z1 = norm_quantile(x1.value());
    let w = norm_quantile(x2.value());
    let y1 = p.mean1 + p.sd1 * z1;
    let y2 = p.mean2 + p.rho * p.sd2 * z1 + p.conditional_sd() * w;
    Ok((y1, y2))
}
