//! Rank-based inverse normal transform.
//!
//! Every observation is replaced by its adjusted empirical CDF value,
//! `(r - 1/2) / N` for midrank `r`, which runs from `1/(2N)` to `1 - 1/(2N)`
//! in steps of `1/N` for untied data, and then by the quantile of the target
//! law at that probability. For a normal target with no ties the output is
//! exactly the set of normal scores `Φ⁻¹((2i - 1)/(2N))`, whatever the shape of
//! the input distribution.

use std::ops::Deref;

use serde::Serialize;

use crate::distributions::{ContinuousDistribution, NormalParams};
use crate::error::{Error, Result};
use crate::special::{norm_quantile, Probability};

/// A non-empty collection of finite observations.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Sample(Vec<f64>);

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::DomainAt {
                index,
                value,
                reason: "observations must be finite",
            });
        }
        Ok(Sample(values))
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Sample {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Sample::new(v)
    }
}

impl TryFrom<&[f64]> for Sample {
    type Error = Error;
    fn try_from(v: &[f64]) -> Result<Self> {
        Sample::new(v.to_vec())
    }
}

/// Adjusted EDF values, one per observation in input order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EdfValues(Vec<f64>);

impl EdfValues {
    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for EdfValues {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Indices that sort `values` ascending (NaN-free input assumed).
fn sort_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

/// Calls `f(positions_in_order, midrank)` for each run of tied values.
fn for_each_tie_group(values: &[f64], order: &[usize], mut f: impl FnMut(&[usize], f64)) {
    let mut start = 0;
    while start < order.len() {
        let v = values[order[start]];
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == v {
            end += 1;
        }
        // ranks start+1 ..= end, averaged
        let midrank = (start + 1 + end) as f64 / 2.0;
        f(&order[start..end], midrank);
        start = end;
    }
}

/// 1-based ranks with ties replaced by the mean of the positions they occupy.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let order = sort_order(values);
    let mut ranks = vec![0.0; values.len()];
    for_each_tie_group(values, &order, |group, r| {
        for &i in group {
            ranks[i] = r;
        }
    });
    ranks
}

/// Adjusted EDF: `(r - 1/2)/N` for midrank `r`.
pub fn edf(sample: &Sample) -> EdfValues {
    let n = sample.len() as f64;
    EdfValues(midranks(sample).into_iter().map(|r| (r - 0.5) / n).collect())
}

/// Standard normal score for midrank `r` of `n`, evaluated on the nearer tail
/// so that scores for mirrored ranks are exact negatives of each other.
fn normal_score(midrank: f64, n: usize) -> f64 {
    let n = n as f64;
    let lower = (midrank - 0.5) / n;
    let upper = (n - midrank + 0.5) / n;
    if lower <= upper {
        norm_quantile(lower)
    } else {
        -norm_quantile(upper)
    }
}

/// A fitted rank-normal transform: sorted distinct training values and the
/// standard normal scores they were assigned.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankTransformSpec {
    breakpoints: Vec<f64>,
    scores: Vec<f64>,
    n: usize,
    target: NormalParams,
}

/// Output of [`RankTransformSpec::apply`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Applied {
    pub values: Vec<f64>,
    /// Number of inputs outside the training range (mapped to an extreme score).
    pub clamped: usize,
}

impl RankTransformSpec {
    /// Builds a spec from its parts, checking every invariant.
    pub fn from_parts(breakpoints: Vec<f64>, scores: Vec<f64>, n: usize, target: NormalParams) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::domain("rank transform needs at least one breakpoint"));
        }
        if breakpoints.len() != scores.len() {
            return Err(Error::LengthMismatch {
                left: breakpoints.len(),
                right: scores.len(),
            });
        }
        if n < breakpoints.len() {
            return Err(Error::domain(format!(
                "training size {n} smaller than breakpoint count {}",
                breakpoints.len()
            )));
        }
        let target = NormalParams::new(target.mean, target.sd)?;
        let strictly_increasing = |v: &[f64]| v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1]);
        if !strictly_increasing(&breakpoints) {
            return Err(Error::domain("breakpoints must be finite and strictly increasing"));
        }
        if !strictly_increasing(&scores) {
            return Err(Error::domain("scores must be finite and strictly increasing"));
        }
        Ok(RankTransformSpec {
            breakpoints,
            scores,
            n,
            target,
        })
    }

    pub fn fit(sample: &Sample, target: NormalParams) -> Self {
        let order = sort_order(sample);
        let mut breakpoints = Vec::new();
        let mut scores = Vec::new();
        for_each_tie_group(sample, &order, |group, r| {
            breakpoints.push(sample[group[0]]);
            scores.push(normal_score(r, sample.len()));
        });
        RankTransformSpec {
            breakpoints,
            scores,
            n: sample.len(),
            target,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Standard (mean 0, sd 1) scores matching [`Self::breakpoints`].
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Size of the training sample.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn target(&self) -> NormalParams {
        self.target
    }

    /// Transformed value of one input and whether it fell outside the
    /// training range.
    pub fn apply_one(&self, x: f64) -> (f64, bool) {
        let bp = &self.breakpoints;
        let last = bp.len() - 1;
        let (z, clamped) = if x < bp[0] {
            (self.scores[0], true)
        } else if x > bp[last] {
            (self.scores[last], true)
        } else {
            let hi = bp.partition_point(|&b| b < x);
            if bp[hi] == x {
                (self.scores[hi], false)
            } else {
                let lo = hi - 1;
                let t = (x - bp[lo]) / (bp[hi] - bp[lo]);
                (self.scores[lo] + t * (self.scores[hi] - self.scores[lo]), false)
            }
        };
        (self.target.mean + self.target.sd * z, clamped)
    }

    /// Applies the fitted map to new values. NaN inputs stay NaN and are not
    /// counted as clamped.
    pub fn apply(&self, values: &[f64]) -> Applied {
        let mut clamped = 0;
        let values = values
            .iter()
            .map(|&x| {
                if x.is_nan() {
                    return f64::NAN;
                }
                let (y, c) = self.apply_one(x);
                clamped += usize::from(c);
                y
            })
            .collect();
        Applied { values, clamped }
    }
}

/// Rank-normal transform of `sample` onto `N(target.mean, target.sd²)`,
/// returning the transformed values and the fitted spec.
pub fn gaussianize(sample: &Sample, target: NormalParams) -> (Sample, RankTransformSpec) {
    let spec = RankTransformSpec::fit(sample, target);
    let out = midranks(sample)
        .into_iter()
        .map(|r| target.mean + target.sd * normal_score(r, sample.len()))
        .collect();
    (Sample(out), spec)
}

/// Maps the adjusted EDF of `sample` through an arbitrary quantile function.
pub fn transform_to_target<F>(sample: &Sample, quantile: F) -> Result<Vec<f64>>
where
    F: Fn(Probability) -> Result<f64>,
{
    edf(sample)
        .iter()
        .enumerate()
        .map(|(index, &p)| {
            let overflow = || Error::Overflow {
                index: Some(index),
                value: sample[index],
            };
            let p = Probability::new(p)?;
            match quantile(p) {
                Ok(y) if y.is_finite() => Ok(y),
                _ => Err(overflow()),
            }
        })
        .collect()
}

/// [`transform_to_target`] with the quantile of a [`ContinuousDistribution`].
pub fn transform_to_distribution<D>(sample: &Sample, dist: &D) -> Result<Vec<f64>>
where
    D: ContinuousDistribution + ?Sized,
{
    transform_to_target(sample, |p| dist.quantile(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::WeibullParams;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn s(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sample_validation() {
        assert_eq!(Sample::new(vec![]), Err(Error::EmptySample));
        assert!(matches!(
            Sample::new(vec![1.0, f64::NAN]),
            Err(Error::DomainAt { index: 1, .. })
        ));
        assert!(Sample::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn edf_examples() {
        assert_eq!(&*edf(&s(&[3.2, 1.1, 7.5, 4.4])), &[0.375, 0.125, 0.875, 0.625]);
        assert_eq!(&*edf(&s(&[5.0])), &[0.5]);
        let tied = edf(&s(&[2.0, 2.0, 9.0]));
        assert_abs_diff_eq!(tied[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tied[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tied[2], 5.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn gaussianize_examples() {
        let (out, _) = gaussianize(&s(&[3.2, 1.1, 7.5, 4.4]), NormalParams::STANDARD);
        let expect = [
            -0.318_639_363_964_375_1,
            -1.150_349_380_376_008,
            1.150_349_380_376_008,
            0.318_639_363_964_375_1,
        ];
        for (a, b) in out.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let (one, _) = gaussianize(&s(&[5.0]), NormalParams::STANDARD);
        assert_eq!(&*one, &[0.0]);
    }

    #[test]
    fn gaussianize_rescales_to_target() {
        let target = NormalParams::new(10.0, 2.0).unwrap();
        let (out, spec) = gaussianize(&s(&[1.0, 2.0, 3.0]), target);
        assert_eq!(out[1], 10.0);
        assert!(out[0] < 10.0 && out[2] > 10.0);
        assert_eq!(spec.target(), target);
        assert_eq!(spec.apply(&[1.0, 2.0, 3.0]).values, out.into_vec());
    }

    #[test]
    fn spec_apply_rules() {
        let train = s(&[5.0, 1.0, 3.0, 9.0, 7.0]);
        let (_, spec) = gaussianize(&train, NormalParams::STANDARD);
        // median hits the middle score exactly
        assert_eq!(spec.apply_one(5.0), (0.0, false));
        let below = spec.apply(&[-100.0]);
        assert_eq!(below.values, vec![spec.scores()[0]]);
        assert_eq!(below.clamped, 1);
        let mid = spec.apply_one(4.0).0;
        assert_abs_diff_eq!(mid, 0.5 * (spec.scores()[1] + spec.scores()[2]), epsilon = 1e-15);
        let above = spec.apply(&[1e9, 9.0, f64::NAN]);
        assert_eq!(above.clamped, 1);
        assert!(above.values[2].is_nan());
    }

    #[test]
    fn spec_ties_collapse_to_distinct_breakpoints() {
        let (_, spec) = gaussianize(&s(&[2.0, 2.0, 9.0]), NormalParams::STANDARD);
        assert_eq!(spec.breakpoints(), &[2.0, 9.0]);
        assert_eq!(spec.n(), 3);
        assert_abs_diff_eq!(spec.scores()[0], norm_quantile(1.0 / 3.0), epsilon = 1e-15);
    }

    #[test]
    fn from_parts_rejects_bad_specs() {
        let t = NormalParams::STANDARD;
        assert!(RankTransformSpec::from_parts(vec![], vec![], 0, t).is_err());
        assert!(RankTransformSpec::from_parts(vec![1.0, 1.0], vec![-1.0, 1.0], 2, t).is_err());
        assert!(RankTransformSpec::from_parts(vec![1.0, 2.0], vec![1.0, -1.0], 2, t).is_err());
        assert!(RankTransformSpec::from_parts(vec![1.0, 2.0], vec![-1.0], 2, t).is_err());
        assert!(RankTransformSpec::from_parts(vec![1.0, 2.0], vec![-1.0, 1.0], 1, t).is_err());
        let bad_target = NormalParams { mean: 0.0, sd: 0.0 };
        assert!(RankTransformSpec::from_parts(vec![1.0], vec![0.0], 1, bad_target).is_err());
        assert!(RankTransformSpec::from_parts(vec![1.0, 2.0], vec![-1.0, 1.0], 2, t).is_ok());
    }

    #[test]
    fn target_identity_and_weibull() {
        let x = s(&[0.3, 0.1, 0.2]);
        let u = transform_to_target(&x, |p| Ok(p.value())).unwrap();
        assert_eq!(u, edf(&x).into_vec());

        let w = WeibullParams::new(9.0, 1.0).unwrap();
        let out = transform_to_distribution(&s(&[1.0, 2.0, 3.0]), &w).unwrap();
        let expect = [
            (6.0f64 / 5.0).ln().powf(1.0 / 9.0),
            2.0f64.ln().powf(1.0 / 9.0),
            6.0f64.ln().powf(1.0 / 9.0),
        ];
        for (a, b) in out.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }

        let std = transform_to_distribution(&x, &NormalParams::STANDARD).unwrap();
        let (g, _) = gaussianize(&x, NormalParams::STANDARD);
        for (a, b) in std.iter().zip(g.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-14);
        }
    }

    #[test]
    fn target_overflow_names_observation() {
        let x = s(&[4.0, 8.0]);
        let err = transform_to_target(&x, |p| Ok(if p.value() > 0.5 { f64::INFINITY } else { 0.0 })).unwrap_err();
        assert_eq!(
            err,
            Error::Overflow {
                index: Some(1),
                value: 8.0
            }
        );
    }

    fn distinct_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::btree_set(-1_000_000i64..1_000_000, 1..120)
            .prop_map(|set| set.into_iter().map(|v| v as f64 / 1000.0).collect::<Vec<_>>())
            .prop_shuffle()
    }

    proptest! {
        #[test]
        fn monotone_invariance(v in distinct_vec()) {
            let x = Sample::new(v.clone()).unwrap();
            let gx = Sample::new(v.iter().map(|t| (t / 100.0).exp() + t.powi(3)).collect()).unwrap();
            let (a, _) = gaussianize(&x, NormalParams::STANDARD);
            let (b, _) = gaussianize(&gx, NormalParams::STANDARD);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn exact_scores_and_zero_mean(v in distinct_vec()) {
            let n = v.len();
            let (out, _) = gaussianize(&Sample::new(v).unwrap(), NormalParams::STANDARD);
            let mut sorted = out.to_vec();
            sorted.sort_by(f64::total_cmp);
            for (i, y) in sorted.iter().enumerate() {
                let p = (2.0 * (i + 1) as f64 - 1.0) / (2.0 * n as f64);
                prop_assert!((y - norm_quantile(p)).abs() < 1e-10);
            }
            let mean = out.iter().sum::<f64>() / n as f64;
            prop_assert!(mean.abs() < 1e-10);
        }

        #[test]
        fn idempotent(v in distinct_vec()) {
            let (once, _) = gaussianize(&Sample::new(v).unwrap(), NormalParams::STANDARD);
            let (twice, _) = gaussianize(&once, NormalParams::STANDARD);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn edf_invariants(v in prop::collection::vec(-50i32..50, 1..80)) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let n = v.len() as f64;
            let p = edf(&Sample::new(v.clone()).unwrap());
            for i in 0..v.len() {
                prop_assert!(p[i] >= 0.5 / n && p[i] <= 1.0 - 0.5 / n);
                for j in 0..v.len() {
                    if v[i] < v[j] { prop_assert!(p[i] < p[j]); }
                    if v[i] == v[j] { prop_assert_eq!(p[i], p[j]); }
                }
            }
        }

        #[test]
        fn apply_is_monotone(v in distinct_vec(), probes in prop::collection::vec(-2000.0f64..2000.0, 2..40)) {
            let (_, spec) = gaussianize(&Sample::new(v).unwrap(), NormalParams::STANDARD);
            let mut probes = probes;
            probes.sort_by(f64::total_cmp);
            let out = spec.apply(&probes).values;
            prop_assert!(out.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
