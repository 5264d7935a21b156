//! Error function, its inverse, and the standard normal CDF and quantile.
//!
//! `erf` and `erfc` are evaluated through the regularized incomplete gamma
//! function `P(1/2, x²)` / `Q(1/2, x²)`: a positive-term power series below
//! `x = sqrt(3/2)` and a Lentz-evaluated continued fraction above it. Neither
//! branch suffers cancellation, so `erf` is accurate to a few ulp in absolute
//! terms and `erfc` keeps full relative accuracy far into the upper tail.
//!
//! The inverses start from Giles' rational approximation ("Approximating the
//! erfinv function", GPU Computing Gems, 2011) and are polished by Halley
//! steps against the functions above (Newton on `ln erfc` in the far tail).
//!
//! The checked entry points return [`Result`]. [`norm_cdf`] and
//! [`norm_quantile`] are the unchecked hot-loop variants and return NaN on
//! invalid input.

use std::f64::consts::{FRAC_2_SQRT_PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
/// Series / continued-fraction switch point, x² = a + 1 with a = 1/2.
const SWITCH: f64 = 1.224_744_871_391_589;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 500;

/// A value in the closed unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const HALF: Probability = Probability(0.5);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!("probability {value} outside [0, 1]")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 - p`.
    #[inline]
    pub fn complement(self) -> Probability {
        Probability(1.0 - self.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Probability::new(v)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

fn require_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what}: argument {x} is not finite")))
    }
}

// P(1/2, x²) for 0 <= x < SWITCH.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 1.0;
    for _ in 0..MAX_ITER {
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term < sum * f64::EPSILON {
            break;
        }
        k += 1.0;
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

// Q(1/2, x²) for x >= SWITCH, modified Lentz.
fn erfc_cont_frac(x: f64) -> f64 {
    let z = x * x;
    let a = 0.5;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    (-z).exp() * x * FRAC_1_SQRT_PI * h
}

#[inline]
fn erf_raw(x: f64) -> f64 {
    if x < 0.0 {
        -erf_raw(-x)
    } else if x < SWITCH {
        erf_series(x)
    } else if x > 6.0 {
        1.0
    } else {
        1.0 - erfc_cont_frac(x)
    }
}

#[inline]
fn erfc_raw(x: f64) -> f64 {
    if x < 0.0 {
        1.0 + erf_raw(-x)
    } else if x < SWITCH {
        1.0 - erf_series(x)
    } else if x > 27.3 {
        0.0
    } else {
        erfc_cont_frac(x)
    }
}

/// Error function.
pub fn erf(x: f64) -> Result<f64> {
    require_finite(x, "erf")?;
    Ok(erf_raw(x))
}

/// Complementary error function `1 - erf(x)`, relatively accurate for large `x`.
pub fn erfc(x: f64) -> Result<f64> {
    require_finite(x, "erfc")?;
    Ok(erfc_raw(x))
}

// Giles' single-precision erfinv approximation, parameterized by
// w = -ln((1 - x)(1 + x)) so callers can form w without cancellation.
fn giles_guess(w: f64, x: f64) -> f64 {
    let p = if w < 5.0 {
        let w = w - 2.5;
        let mut p = 2.810_226_36e-08;
        p = 3.432_739_39e-07 + p * w;
        p = -3.523_387_7e-06 + p * w;
        p = -4.391_506_54e-06 + p * w;
        p = 0.000_218_580_87 + p * w;
        p = -0.001_253_725_03 + p * w;
        p = -0.004_177_681_64 + p * w;
        p = 0.246_640_727 + p * w;
        1.501_409_41 + p * w
    } else {
        let w = w.sqrt() - 3.0;
        let mut p = -0.000_200_214_257;
        p = 0.000_100_950_558 + p * w;
        p = 0.001_349_343_22 + p * w;
        p = -0.003_673_428_44 + p * w;
        p = 0.005_739_507_73 + p * w;
        p = -0.007_622_461_3 + p * w;
        p = 0.009_438_870_47 + p * w;
        p = 1.001_674_06 + p * w;
        2.832_976_82 + p * w
    };
    p * x
}

// erf_inv for 0 <= x <= 0.5.
fn erf_inv_central(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let w = -((1.0 - x) * (1.0 + x)).ln();
    let mut y = giles_guess(w, x);
    for _ in 0..4 {
        let f = erf_raw(y) - x;
        let fp = FRAC_2_SQRT_PI * (-y * y).exp();
        let step = f / (fp + y * f);
        y -= step;
        if step.abs() <= f64::EPSILON * y.abs() {
            break;
        }
    }
    y
}

// erfc_inv for 0 < q < 0.5 (result > 0.4769).
fn erfc_inv_tail(q: f64) -> f64 {
    let w = -(q * (2.0 - q)).ln();
    let mut y = if w <= 16.0 {
        giles_guess(w, 1.0 - q)
    } else {
        // erfc(y) ~ exp(-y²) / (y sqrt(pi))
        let lq = q.ln();
        let mut y = (-lq).sqrt();
        for _ in 0..3 {
            y = (-lq - (y / FRAC_1_SQRT_PI).ln()).sqrt();
        }
        y
    };
    // Newton on ln erfc, which is concave, so the iteration cannot oscillate.
    let lq = q.ln();
    for _ in 0..50 {
        let c = erfc_raw(y);
        if c <= 0.0 {
            y *= 0.999;
            continue;
        }
        let h = c.ln() - lq;
        let hp = -FRAC_2_SQRT_PI * (-y * y).exp() / c;
        let step = h / hp;
        y -= step;
        if step.abs() <= 2.0 * f64::EPSILON * y.abs() {
            break;
        }
    }
    y
}

#[inline]
fn erf_inv_raw(x: f64) -> f64 {
    if x < 0.0 {
        -erf_inv_raw(-x)
    } else if x <= 0.5 {
        erf_inv_central(x)
    } else {
        erfc_inv_tail(1.0 - x)
    }
}

#[inline]
fn erfc_inv_raw(q: f64) -> f64 {
    if q > 1.0 {
        -erfc_inv_raw(2.0 - q)
    } else if q >= 0.5 {
        erf_inv_central(1.0 - q)
    } else {
        erfc_inv_tail(q)
    }
}

/// Inverse error function on the open interval (-1, 1).
pub fn erf_inv(x: f64) -> Result<f64> {
    if x.is_nan() || x.abs() >= 1.0 {
        return Err(Error::domain(format!("erf_inv: argument {x} outside (-1, 1)")));
    }
    Ok(erf_inv_raw(x))
}

/// Inverse complementary error function on the open interval (0, 2).
pub fn erfc_inv(q: f64) -> Result<f64> {
    if q.is_nan() || q <= 0.0 || q >= 2.0 {
        return Err(Error::domain(format!("erfc_inv: argument {q} outside (0, 2)")));
    }
    Ok(erfc_inv_raw(q))
}

/// Standard normal CDF; NaN in, NaN out.
#[inline]
pub fn norm_cdf(y: f64) -> f64 {
    if y < 0.0 {
        0.5 * erfc_raw(-y / SQRT_2)
    } else if y >= 0.0 {
        0.5 * (1.0 + erf_raw(y / SQRT_2))
    } else {
        f64::NAN
    }
}

/// Standard normal quantile; returns ±∞ at 0 and 1, NaN outside [0, 1].
#[inline]
pub fn norm_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        f64::NAN
    } else if p == 0.0 {
        f64::NEG_INFINITY
    } else if p == 1.0 {
        f64::INFINITY
    } else if p < 0.5 {
        -SQRT_2 * erfc_inv_raw(2.0 * p)
    } else if p > 0.5 {
        SQRT_2 * erfc_inv_raw(2.0 * (1.0 - p))
    } else {
        0.0
    }
}

/// `Φ(y)`, the standard normal CDF.
pub fn std_normal_cdf(y: f64) -> Result<Probability> {
    require_finite(y, "std_normal_cdf")?;
    Ok(Probability(norm_cdf(y)))
}

/// `Φ⁻¹(p) = √2·erf⁻¹(2p − 1)`, evaluated through `erfc⁻¹` on the nearer tail.
pub fn std_normal_quantile(p: Probability) -> Result<f64> {
    let p = p.value();
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::domain(format!(
            "std_normal_quantile: probability {p} must lie strictly inside (0, 1)"
        )));
    }
    Ok(norm_quantile(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn erf_basic_values() {
        assert_eq!(erf(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(erf(10.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(erf(1.0).unwrap(), 0.842_700_792_949_715, epsilon = 1e-15);
        assert!(erf(f64::NAN).is_err());
        assert!(erf(f64::INFINITY).is_err());
    }

    #[test]
    fn erfc_tail_is_relatively_accurate() {
        // erfc(5) = 1.5374597944280348e-12
        let v = erfc(5.0).unwrap();
        assert!((v / 1.537_459_794_428_034_8e-12 - 1.0).abs() < 1e-13);
        assert_eq!(erfc(30.0).unwrap(), 0.0);
        assert_abs_diff_eq!(erfc(-3.0).unwrap(), 2.0 - erfc(3.0).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn erf_is_continuous_at_switch() {
        let below = erf_series(SWITCH);
        let above = 1.0 - erfc_cont_frac(SWITCH);
        assert_abs_diff_eq!(below, above, epsilon = 1e-14);
    }

    #[test]
    fn erf_inv_values_and_domain() {
        assert_eq!(erf_inv(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(erf_inv(erf(1.0).unwrap()).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(erf_inv(0.5).unwrap(), 0.476_936_276_204_470, epsilon = 1e-14);
        assert!(erf_inv(1.0).is_err());
        assert!(erf_inv(-1.0).is_err());
        assert!(erf_inv(f64::NAN).is_err());
        assert!(erfc_inv(0.0).is_err());
        assert!(erfc_inv(2.0).is_err());
    }

    #[test]
    fn erfc_inv_deep_tail() {
        for &q in &[1e-20, 1e-50, 1e-100, 1e-250, 1e-300] {
            let y = erfc_inv(q).unwrap();
            let back = erfc(y).unwrap();
            assert!((back / q - 1.0).abs() < 1e-12, "q={q} y={y} back={back}");
        }
    }

    #[test]
    fn normal_cdf_and_quantile() {
        assert_eq!(std_normal_cdf(0.0).unwrap().value(), 0.5);
        assert_abs_diff_eq!(std_normal_cdf(1.959_963_985).unwrap().value(), 0.975, epsilon = 1e-9);
        assert_eq!(std_normal_quantile(Probability::HALF).unwrap(), 0.0);
        assert_abs_diff_eq!(
            std_normal_quantile(Probability::new(0.125).unwrap()).unwrap(),
            -1.150_349_380_376_008,
            epsilon = 1e-13
        );
        let p = std_normal_cdf(2.5).unwrap();
        assert_abs_diff_eq!(std_normal_quantile(p).unwrap(), 2.5, epsilon = 1e-9);
        assert!(std_normal_quantile(Probability::new(0.0).unwrap()).is_err());
        assert!(std_normal_quantile(Probability::new(1.0).unwrap()).is_err());
        assert!(std_normal_cdf(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn probability_rejects_out_of_range() {
        assert!(Probability::new(-1e-18).is_err());
        assert!(Probability::new(1.0 + 1e-15).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert!(Probability::new(1.0).is_ok());
    }

    #[test]
    fn raw_helpers_handle_edges() {
        assert!(norm_cdf(f64::NAN).is_nan());
        assert_eq!(norm_quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(norm_quantile(1.0), f64::INFINITY);
        assert!(norm_quantile(1.5).is_nan());
    }
}
