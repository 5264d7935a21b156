//! Seeded Gaussian-copula generator of longitudinal datasets.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{LongitudinalDataset, Record};
use crate::distributions::{standard_normal, Marginal};
use crate::error::{Error, Result};
use crate::special::norm_cdf;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub n_sessions: usize,
    /// Correlation of the latent normals between any two sessions.
    pub rho: f64,
    pub marginal: Marginal,
    pub seed: u64,
    pub measure: String,
}

impl SynthConfig {
    pub fn new(n_subjects: usize, n_sessions: usize, rho: f64, marginal: Marginal, seed: u64) -> Self {
        SynthConfig {
            n_subjects,
            n_sessions,
            rho,
            marginal,
            seed,
            measure: "value".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 3 {
            return Err(Error::domain(format!(
                "need at least 3 subjects, got {}",
                self.n_subjects
            )));
        }
        if self.n_sessions < 1 {
            return Err(Error::domain("need at least 1 session"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::domain(format!(
                "latent correlation must lie in [0, 1], got {}",
                self.rho
            )));
        }
        if self.measure.is_empty() {
            return Err(Error::domain("measure name is empty"));
        }
        Ok(())
    }
}

/// Maps a standard normal value to `marginal` through quantile∘Φ, using the
/// closed forms so both tails stay finite.
pub fn from_latent(marginal: &Marginal, z: f64) -> f64 {
    match marginal {
        Marginal::Normal(d) => d.mean + d.sd * z,
        Marginal::Lognormal(d) => (d.log_mean + d.log_sd * z).exp(),
        Marginal::Weibull(d) => {
            // -ln S(x) with S = Φ(-z), written to keep precision on both sides
            let h = if z > 0.0 {
                -norm_cdf(-z).ln()
            } else {
                -(-norm_cdf(z)).ln_1p()
            };
            d.scale * h.powf(1.0 / d.shape)
        }
        Marginal::Uniform(d) => d.low + (d.high - d.low) * norm_cdf(z),
    }
}

/// Draws a latent trait per subject and, per session, `√ρ·trait + √(1-ρ)·noise`,
/// then maps each value through the marginal. Sessions are numbered from 1
/// and spaced a week apart.
pub fn generate(config: &SynthConfig) -> Result<LongitudinalDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (a, b) = (config.rho.sqrt(), (1.0 - config.rho).sqrt());
    let width = config.n_subjects.to_string().len();
    let mut data = LongitudinalDataset::new();
    for i in 1..=config.n_subjects {
        let subject = format!("S{i:0width$}");
        let trait_ = standard_normal(&mut rng);
        for session in 1..=config.n_sessions as u32 {
            let z = a * trait_ + b * standard_normal(&mut rng);
            data.insert(Record {
                subject: subject.clone(),
                session,
                measure: config.measure.clone(),
                value: from_latent(&config.marginal, z),
            })?;
        }
    }
    data.set_session_times(
        (1..=config.n_sessions as u32)
            .map(|s| (s, 7.0 * f64::from(s - 1)))
            .collect::<BTreeMap<_, _>>(),
    );
    Ok(data)
}
