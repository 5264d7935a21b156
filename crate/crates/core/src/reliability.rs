//! Test-retest reliability: correlations between repeated sessions, their
//! average over session pairs, and the paired t-test comparing measure-wise
//! reliabilities before and after a transform.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::classic::{boxcox_scaled, fit_boxcox, log_transform, logit_transform, BoxCoxGrid, BoxCoxParams};
use crate::dataset::{pooled, LongitudinalDataset, SessionTable};
use crate::distributions::NormalParams;
use crate::error::{Error, Result};
use crate::rank::{gaussianize, midranks, Sample};
use crate::special::Probability;

/// Fewest subjects with data at both sessions for a pair to count.
pub const MIN_PAIR_SUBJECTS: usize = 3;

pub const INDEPENDENCE_CAVEAT: &str = "the per-measure correlations share subjects and sessions, \
so they are not independent observations; read the p-value as descriptive";

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::SampleTooSmall {
            given: x.len(),
            needed: 3,
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let flat = |ss: f64, m: f64| ss.is_nan() || ss <= 0.0 || (ss / n).sqrt() <= m.abs() * 1e-14;
    if flat(sxx, mx) || flat(syy, my) {
        return Err(Error::Degenerate("correlation of a constant sequence".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of midranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    pearson(&midranks(x), &midranks(y))
}

/// Which sessions of a measure enter the average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(into = "String")]
pub enum SessionWindow {
    #[default]
    All,
    /// The `k` lowest session indices present.
    First(usize),
}

impl SessionWindow {
    fn select(&self, mut sessions: Vec<u32>) -> Vec<u32> {
        sessions.sort_unstable();
        if let SessionWindow::First(k) = *self {
            sessions.truncate(k);
        }
        sessions
    }
}

impl FromStr for SessionWindow {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(SessionWindow::All);
        }
        let k = s
            .strip_prefix("first:")
            .and_then(|k| k.parse::<usize>().ok())
            .ok_or_else(|| Error::domain(format!("expected `all` or `first:k`, got `{s}`")))?;
        if k < 2 {
            return Err(Error::domain("a session window needs at least 2 sessions"));
        }
        Ok(SessionWindow::First(k))
    }
}

impl From<SessionWindow> for String {
    fn from(w: SessionWindow) -> String {
        w.to_string()
    }
}

impl fmt::Display for SessionWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionWindow::All => f.write_str("all"),
            SessionWindow::First(k) => write!(f, "first:{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// Every unordered pair of sessions.
    #[default]
    All,
    /// Each session with the next one.
    Consecutive,
}

impl Pairing {
    fn pairs(&self, sessions: &[u32]) -> Vec<(u32, u32)> {
        match self {
            Pairing::All => sessions
                .iter()
                .enumerate()
                .flat_map(|(i, &a)| sessions[i + 1..].iter().map(move |&b| (a, b)))
                .collect(),
            Pairing::Consecutive => sessions.windows(2).map(|w| (w[0], w[1])).collect(),
        }
    }
}

impl FromStr for Pairing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Pairing::All),
            "consecutive" => Ok(Pairing::Consecutive),
            _ => Err(Error::domain(format!("unknown pairing `{s}`"))),
        }
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pairing::All => "all",
            Pairing::Consecutive => "consecutive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    #[default]
    Arithmetic,
    /// Mean of atanh(r), mapped back with tanh.
    FisherZ,
}

impl Averaging {
    fn mean(&self, rs: &[f64]) -> f64 {
        let n = rs.len() as f64;
        match self {
            Averaging::Arithmetic => rs.iter().sum::<f64>() / n,
            Averaging::FisherZ => {
                let lim = 1.0 - 1e-15;
                (rs.iter().map(|r| r.clamp(-lim, lim).atanh()).sum::<f64>() / n).tanh()
            }
        }
    }
}

impl FromStr for Averaging {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arithmetic" => Ok(Averaging::Arithmetic),
            "fisher-z" => Ok(Averaging::FisherZ),
            _ => Err(Error::domain(format!("unknown averaging `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct AverageOptions {
    pub window: SessionWindow,
    pub pairing: Pairing,
    pub averaging: Averaging,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCorrelation {
    pub sessions: (u32, u32),
    /// Subjects observed at both sessions.
    pub subjects: usize,
    /// `None` when the pair was skipped (too few subjects or no variance).
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestRetest {
    pub mean_r: f64,
    /// Pairs that entered the mean.
    pub pair_count: usize,
    pub pairs: Vec<PairCorrelation>,
}

fn average_table(
    measure: &str,
    table: &SessionTable,
    options: AverageOptions,
    corr: fn(&[f64], &[f64]) -> Result<f64>,
) -> Result<TestRetest> {
    let sessions = options.window.select(table.keys().copied().collect());
    if sessions.len() < 2 {
        return Err(Error::NoValidPair {
            measure: measure.to_string(),
            counts: format!("{} session(s) in window", sessions.len()),
        });
    }
    let pairs: Vec<PairCorrelation> = options
        .pairing
        .pairs(&sessions)
        .into_iter()
        .map(|(a, b)| {
            let (sa, sb) = (&table[&a], &table[&b]);
            let (x, y): (Vec<f64>, Vec<f64>) = sa
                .iter()
                .filter_map(|(subject, &va)| sb.get(subject).map(|&vb| (va, vb)))
                .unzip();
            let r = if x.len() >= MIN_PAIR_SUBJECTS {
                corr(&x, &y).ok()
            } else {
                None
            };
            PairCorrelation {
                sessions: (a, b),
                subjects: x.len(),
                r,
            }
        })
        .collect();
    let rs: Vec<f64> = pairs.iter().filter_map(|p| p.r).collect();
    if rs.is_empty() {
        let counts = pairs
            .iter()
            .map(|p| format!("{}-{}: {}", p.sessions.0, p.sessions.1, p.subjects))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(Error::NoValidPair {
            measure: measure.to_string(),
            counts,
        });
    }
    Ok(TestRetest {
        mean_r: options.averaging.mean(&rs),
        pair_count: rs.len(),
        pairs,
    })
}

/// Mean Pearson correlation across subjects over the session pairs of a
/// measure. Subjects missing either session are dropped for that pair only.
pub fn average_test_retest(data: &LongitudinalDataset, measure: &str, options: AverageOptions) -> Result<TestRetest> {
    average_table(measure, data.measure(measure)?, options, pearson)
}

/// As [`average_test_retest`] with Spearman correlations.
pub fn average_spearman(data: &LongitudinalDataset, measure: &str, options: AverageOptions) -> Result<TestRetest> {
    average_table(measure, data.measure(measure)?, options, spearman)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTTest {
    pub t: f64,
    #[serde(rename = "p")]
    pub p_value: Probability,
    pub df: usize,
    pub mean_before: f64,
    pub mean_after: f64,
}

/// Two-sided paired-samples t-test on `after - before`.
pub fn paired_t_test(before: &[f64], after: &[f64]) -> Result<PairedTTest> {
    if before.len() != after.len() {
        return Err(Error::LengthMismatch {
            left: before.len(),
            right: after.len(),
        });
    }
    let n = before.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { given: n, needed: 2 });
    }
    if let Some(v) = before.iter().chain(after).find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite value {v} in paired t-test")));
    }
    let nf = n as f64;
    let d: Vec<f64> = before.iter().zip(after).map(|(b, a)| a - b).collect();
    let mean_d = d.iter().sum::<f64>() / nf;
    let sd_d = (d.iter().map(|x| (x - mean_d).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    let scale = before
        .iter()
        .chain(after)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    if sd_d <= 1e-12 * scale {
        return Err(Error::Degenerate("paired differences have zero variance".into()));
    }
    let t = mean_d / (sd_d / nf.sqrt());
    let df = n - 1;
    let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::domain(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(PairedTTest {
        t,
        p_value: Probability::new(p)?,
        df,
        mean_before: before.iter().sum::<f64>() / nf,
        mean_after: after.iter().sum::<f64>() / nf,
    })
}

/// Transforms compared in a reliability study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyTransform {
    RankNormal,
    Log,
    Logit,
    #[serde(rename = "boxcox")]
    BoxCox,
}

impl StudyTransform {
    pub const ALL: [StudyTransform; 4] = [
        StudyTransform::Log,
        StudyTransform::Logit,
        StudyTransform::BoxCox,
        StudyTransform::RankNormal,
    ];

    /// Fits on `values` and transforms them. Returns fitted Box-Cox
    /// parameters when applicable.
    fn apply(&self, values: &[f64], grid: &BoxCoxGrid) -> Result<(Vec<f64>, Option<BoxCoxParams>)> {
        match self {
            StudyTransform::RankNormal => {
                let sample = Sample::new(values.to_vec())?;
                Ok((gaussianize(&sample, NormalParams::STANDARD).0.into_vec(), None))
            }
            StudyTransform::Log => Ok((log_transform(values)?, None)),
            StudyTransform::Logit => Ok((logit_transform(values)?, None)),
            StudyTransform::BoxCox => {
                let fit = fit_boxcox(values, grid)?;
                Ok((boxcox_scaled(values, fit.params)?, Some(fit.params)))
            }
        }
    }
}

impl FromStr for StudyTransform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rank-normal" => Ok(StudyTransform::RankNormal),
            "log" => Ok(StudyTransform::Log),
            "logit" => Ok(StudyTransform::Logit),
            "boxcox" => Ok(StudyTransform::BoxCox),
            _ => Err(Error::domain(format!("unknown transform `{s}`"))),
        }
    }
}

impl fmt::Display for StudyTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyTransform::RankNormal => "rank-normal",
            StudyTransform::Log => "log",
            StudyTransform::Logit => "logit",
            StudyTransform::BoxCox => "boxcox",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    pub average: AverageOptions,
    pub transforms: Vec<StudyTransform>,
    /// Fit each session separately instead of the pooled values. With the
    /// rank-normal transform this forces identical score sets per session
    /// and inflates r.
    pub per_session_fit: bool,
    pub boxcox_grid: BoxCoxGrid,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            average: AverageOptions::default(),
            transforms: vec![StudyTransform::RankNormal],
            per_session_fit: false,
            boxcox_grid: BoxCoxGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformReliability {
    pub transform: StudyTransform,
    /// Mean r after transforming; `None` when the transform does not apply
    /// to this measure (see `skipped`).
    pub mean_r: Option<f64>,
    pub pair_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boxcox: Option<BoxCoxParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureReliability {
    pub measure: String,
    pub raw: TestRetest,
    pub transformed: Vec<TransformReliability>,
    pub spearman: TestRetest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub transform: StudyTransform,
    pub measures: usize,
    /// `None` when the test could not be computed (see `note`).
    pub test: Option<PairedTTest>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityReport {
    pub window: SessionWindow,
    pub pairing: Pairing,
    pub averaging: Averaging,
    pub per_session_fit: bool,
    pub measures: Vec<MeasureReliability>,
    /// Raw vs rank-normal reliabilities across measures.
    pub comparison: Option<Comparison>,
}

fn transformed_table(
    table: &SessionTable,
    transform: StudyTransform,
    per_session: bool,
    grid: &BoxCoxGrid,
) -> Result<(SessionTable, Option<BoxCoxParams>)> {
    let mut out = table.clone();
    if per_session {
        let mut last = None;
        for subjects in out.values_mut() {
            let values: Vec<f64> = subjects.values().copied().collect();
            let (t, params) = transform.apply(&values, grid)?;
            subjects.values_mut().zip(t).for_each(|(slot, v)| *slot = v);
            last = params.or(last);
        }
        Ok((out, last))
    } else {
        let (t, params) = transform.apply(&pooled(table), grid)?;
        out.values_mut()
            .flat_map(|s| s.values_mut())
            .zip(t)
            .for_each(|(slot, v)| *slot = v);
        Ok((out, params))
    }
}

fn study_measure(data: &LongitudinalDataset, measure: &str, options: &StudyOptions) -> Result<MeasureReliability> {
    let table = data.measure(measure)?;
    let avg = options.average;
    let raw = average_table(measure, table, avg, pearson)?;
    let spearman = average_table(measure, table, avg, spearman)?;
    let transformed = options
        .transforms
        .iter()
        .map(|&transform| {
            let outcome = transformed_table(table, transform, options.per_session_fit, &options.boxcox_grid)
                .and_then(|(t, params)| Ok((average_table(measure, &t, avg, pearson)?, params)));
            match outcome {
                Ok((tr, boxcox)) => TransformReliability {
                    transform,
                    mean_r: Some(tr.mean_r),
                    pair_count: tr.pair_count,
                    boxcox,
                    skipped: None,
                },
                Err(e) => TransformReliability {
                    transform,
                    mean_r: None,
                    pair_count: 0,
                    boxcox: None,
                    skipped: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(MeasureReliability {
        measure: measure.to_string(),
        raw,
        transformed,
        spearman,
    })
}

/// Raw, transformed and Spearman reliabilities of every measure, plus a
/// paired t-test of raw against rank-normal reliabilities across measures.
///
/// A transform that does not apply to a measure (e.g. log of negative
/// values) is reported as skipped; any other failure aborts the study and
/// names the measure.
pub fn reliability_study(data: &LongitudinalDataset, options: &StudyOptions) -> Result<ReliabilityReport> {
    let names: Vec<&str> = data.measures().collect();
    let measures = names
        .par_iter()
        .map(|m| study_measure(data, m, options).map_err(|e| e.in_measure(m)))
        .collect::<Result<Vec<_>>>()?;

    let comparison = options.transforms.contains(&StudyTransform::RankNormal).then(|| {
        let (before, after): (Vec<f64>, Vec<f64>) = measures
            .iter()
            .filter_map(|m| {
                m.transformed
                    .iter()
                    .find(|t| t.transform == StudyTransform::RankNormal)
                    .and_then(|t| t.mean_r)
                    .map(|after| (m.raw.mean_r, after))
            })
            .unzip();
        let (test, note) = match paired_t_test(&before, &after) {
            Ok(t) => (Some(t), INDEPENDENCE_CAVEAT.to_string()),
            Err(e) => (None, e.to_string()),
        };
        Comparison {
            transform: StudyTransform::RankNormal,
            measures: before.len(),
            test,
            note,
        }
    });

    Ok(ReliabilityReport {
        window: options.average.window,
        pairing: options.average.pairing,
        averaging: options.average.averaging,
        per_session_fit: options.per_session_fit,
        measures,
        comparison,
    })
}
