//! Nonnegative reals stored by their natural logarithm.
//!
//! A value `a ∈ [0, ∞]` is held as `x = ln a ∈ [-∞, +∞]`. Products and
//! quotients are sums and differences of logs; sums and differences use
//!
//! ```text
//! ln(a + b) = x + ln(1 + e^(y - x))      (x ≥ y)
//! ln(a - b) = x + ln(1 - e^(y - x))      (x ≥ y)
//! ```
//!
//! so no intermediate is ever exponentiated out of range. [`LogInterval`]
//! carries outward-rounded bounds on the log and is used for tracked runs.
//! Both implement [`LogNum`], which is what the inference algorithms are
//! written against.

mod interval;
pub mod round;

pub use interval::{interval_op, IntervalOp, LogInterval, Partial};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Floating-point format used for every stored log value.
pub type Real = f64;

/// Significand precision of [`Real`], in bits.
pub const PRECISION_BITS: u32 = Real::MANTISSA_DIGITS;

/// A nonnegative real represented by its natural logarithm.
#[derive(Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);
    pub const INFINITY: LogValue = LogValue(f64::INFINITY);

    /// Wrap a log value. Panics on NaN, which never denotes a nonnegative real.
    #[inline]
    pub fn from_ln(ln: f64) -> Self {
        assert!(!ln.is_nan(), "LogValue cannot hold NaN");
        LogValue(ln)
    }

    pub fn try_from_ln(ln: f64) -> Result<Self> {
        if ln.is_nan() {
            Err(Error::domain("LogValue", "NaN log value"))
        } else {
            Ok(LogValue(ln))
        }
    }

    /// Log representation of a nonnegative real.
    pub fn from_real(a: f64) -> Result<Self> {
        if a.is_nan() || a < 0.0 {
            return Err(Error::domain("LogValue::from_real", format!("{a} is not in [0, inf]")));
        }
        Ok(LogValue(a.ln()))
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    /// `e^x`; may overflow or underflow for extreme logs.
    #[inline]
    pub fn to_real(self) -> f64 {
        self.0.exp()
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogValue({})", self.0)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({})", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MulDiv {
    Mul,
    Div,
}

/// `ln(e^x + e^y)`.
#[inline]
pub fn log_add(x: LogValue, y: LogValue) -> LogValue {
    LogValue(ln_add(x.0, y.0))
}

#[inline]
pub(crate) fn ln_add(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if hi.is_infinite() || lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 - e^d)` for `d ≤ 0`, switching formulation at `d = -ln 2` to limit
/// cancellation.
#[inline]
pub(crate) fn ln1m_exp(d: f64) -> f64 {
    if d > -std::f64::consts::LN_2 {
        (-d.exp_m1()).ln()
    } else {
        (-d.exp()).ln_1p()
    }
}

/// `ln(e^x - e^y)`; requires `x ≥ y`.
pub fn log_sub(x: LogValue, y: LogValue) -> Result<LogValue> {
    ln_sub(x.0, y.0).map(LogValue)
}

pub(crate) fn ln_sub(x: f64, y: f64) -> Result<f64> {
    if x < y {
        return Err(Error::domain("log_sub", format!("e^{x} - e^{y} is negative")));
    }
    if y == f64::NEG_INFINITY {
        return Ok(x);
    }
    if x == f64::INFINITY {
        if y == f64::INFINITY {
            return Err(Error::domain("log_sub", "inf - inf is indeterminate"));
        }
        return Ok(x);
    }
    if x == y {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(x + ln1m_exp(y - x))
}

/// Multiplication (`x + y`) or division (`x - y`) in the log domain.
pub fn log_mul_div(x: LogValue, y: LogValue, mode: MulDiv) -> Result<LogValue> {
    let r = match mode {
        MulDiv::Mul => x.0 + y.0,
        MulDiv::Div => x.0 - y.0,
    };
    if r.is_nan() {
        let what = match mode {
            MulDiv::Mul => "0 * inf is indeterminate",
            MulDiv::Div => "0/0 or inf/inf is indeterminate",
        };
        return Err(Error::domain("log_mul_div", what));
    }
    Ok(LogValue(r))
}

/// Log-sum-exp of a slice of logs.
pub fn ln_sum(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// A real number with a sign, magnitude stored as a log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedLog {
    /// -1, 0 or 1.
    pub sign: i8,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn new(sign: i8, ln_abs: f64) -> Self {
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            SignedLog::ZERO
        } else {
            SignedLog {
                sign: sign.signum(),
                ln_abs,
            }
        }
    }

    /// `e^pos - e^neg` as a signed value.
    pub fn difference(pos: f64, neg: f64) -> Self {
        if pos >= neg {
            SignedLog::new(1, ln_sub(pos, neg).unwrap_or(f64::NEG_INFINITY))
        } else {
            SignedLog::new(-1, ln_sub(neg, pos).unwrap_or(f64::NEG_INFINITY))
        }
    }

    pub fn to_real(self) -> f64 {
        f64::from(self.sign) * self.ln_abs.exp()
    }
}

/// Arithmetic the inference algorithms need, implemented for point values
/// ([`LogValue`]) and for tracked intervals ([`LogInterval`]).
///
/// Inputs created through [`LogNum::exact`] are taken to be exact; every
/// subsequent operation on intervals is outward rounded.
pub trait LogNum: Copy + Send + Sync + fmt::Debug + 'static {
    const TRACKED: bool;

    fn zero() -> Self;
    fn one() -> Self;
    /// An input whose log is known exactly.
    fn exact(ln: f64) -> Self;
    /// A value whose log lies in `[lo, hi]`; `point` is the round-to-nearest
    /// estimate used by untracked arithmetic.
    fn bracket(lo: f64, point: f64, hi: f64) -> Self;
    /// `ln(a)` for a real `a > 0` given exactly as an `f64`.
    fn ln_of(a: f64) -> Self;
    /// `ln(a + b)` for exact `a, b ≥ 0`, with the sum itself rounded outward.
    fn ln_of_sum(a: f64, b: f64) -> Self;
    /// `min(self, 1)`.
    fn min_one(self) -> Self;

    fn add(self, rhs: Self) -> Self;
    /// Product with the convention `0 * inf = 0`.
    fn mul(self, rhs: Self) -> Self;
    fn div(self, rhs: Self) -> Result<Self>;
    /// Difference; intervals where only some member pairs are negative are
    /// clipped below at zero rather than rejected.
    fn sub(self, rhs: Self) -> Result<Self>;
    /// `self^p` for `p ≥ 0`.
    fn powf(self, p: f64) -> Self;

    fn lo(self) -> f64;
    fn hi(self) -> f64;
    fn point(self) -> f64;

    fn sum<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        iter.into_iter().fold(Self::zero(), Self::add)
    }
}

#[inline]
fn mul_ln(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        x + y
    }
}

impl LogNum for LogValue {
    const TRACKED: bool = false;

    #[inline]
    fn zero() -> Self {
        LogValue::ZERO
    }
    #[inline]
    fn one() -> Self {
        LogValue::ONE
    }
    #[inline]
    fn exact(ln: f64) -> Self {
        LogValue::from_ln(ln)
    }
    #[inline]
    fn bracket(_lo: f64, point: f64, _hi: f64) -> Self {
        LogValue::from_ln(point)
    }
    #[inline]
    fn ln_of(a: f64) -> Self {
        LogValue(a.ln())
    }
    #[inline]
    fn ln_of_sum(a: f64, b: f64) -> Self {
        LogValue((a + b).ln())
    }
    #[inline]
    fn min_one(self) -> Self {
        LogValue(self.0.min(0.0))
    }
    #[inline]
    fn add(self, rhs: Self) -> Self {
        log_add(self, rhs)
    }
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        LogValue(mul_ln(self.0, rhs.0))
    }
    #[inline]
    fn div(self, rhs: Self) -> Result<Self> {
        log_mul_div(self, rhs, MulDiv::Div)
    }
    #[inline]
    fn sub(self, rhs: Self) -> Result<Self> {
        log_sub(self, rhs)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        if p == 0.0 {
            return LogValue::ONE;
        }
        LogValue(self.0 * p)
    }
    #[inline]
    fn lo(self) -> f64 {
        self.0
    }
    #[inline]
    fn hi(self) -> f64 {
        self.0
    }
    #[inline]
    fn point(self) -> f64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn lv(x: f64) -> LogValue {
        LogValue::from_ln(x)
    }

    #[test]
    fn add_special_cases() {
        assert_eq!(log_add(LogValue::ZERO, LogValue::ZERO), LogValue::ZERO);
        assert_eq!(log_add(LogValue::INFINITY, LogValue::INFINITY), LogValue::INFINITY);
        assert_eq!(log_add(lv(0.0), lv(0.0)).ln(), LN_2);
        let big = log_add(lv(700.0), lv(700.0)).ln();
        assert!((big - (700.0 + LN_2)).abs() < 1e-12);
        assert_eq!(log_add(lv(3.5), LogValue::ZERO).ln(), 3.5);
    }

    #[test]
    fn sub_special_cases() {
        assert_eq!(log_sub(LogValue::ZERO, LogValue::ZERO).unwrap(), LogValue::ZERO);
        let r = log_sub(lv(3f64.ln()), lv(0.0)).unwrap().ln();
        assert!((r - LN_2).abs() < 1e-15);
        assert!(log_sub(lv(2f64.ln()), lv(3f64.ln())).is_err());
        assert_eq!(log_sub(lv(1.25), lv(1.25)).unwrap(), LogValue::ZERO);
        assert!(log_sub(LogValue::INFINITY, LogValue::INFINITY).is_err());
    }

    #[test]
    fn sub_near_cancellation_is_accurate() {
        // e^x - e^(x - h) = e^x (1 - e^-h) ≈ e^x h for tiny h
        let h = 1e-12;
        let y = 5.0 - h;
        let d = y - 5.0; // exact
        let r = log_sub(lv(5.0), lv(y)).unwrap().ln();
        let expected = 5.0 + (-d.exp_m1()).ln();
        assert!((r - expected).abs() < 1e-12);
    }

    #[test]
    fn mul_div() {
        let six = log_mul_div(lv(2f64.ln()), lv(3f64.ln()), MulDiv::Mul).unwrap();
        assert!((six.ln() - 6f64.ln()).abs() < 1e-15);
        let two = log_mul_div(lv(6f64.ln()), lv(3f64.ln()), MulDiv::Div).unwrap();
        assert!((two.ln() - LN_2).abs() < 1e-15);
        assert_eq!(
            log_mul_div(LogValue::ZERO, lv(1.0), MulDiv::Div).unwrap(),
            LogValue::ZERO
        );
        assert!(log_mul_div(LogValue::ZERO, LogValue::INFINITY, MulDiv::Mul).is_err());
        assert!(log_mul_div(LogValue::ZERO, LogValue::ZERO, MulDiv::Div).is_err());
        assert!(log_mul_div(LogValue::INFINITY, LogValue::INFINITY, MulDiv::Div).is_err());
    }

    #[test]
    fn nan_rejected() {
        assert!(LogValue::try_from_ln(f64::NAN).is_err());
        assert!(LogValue::from_real(-1.0).is_err());
    }

    #[test]
    fn signed_difference() {
        let d = SignedLog::difference(2f64.ln(), 3f64.ln());
        assert_eq!(d.sign, -1);
        assert!((d.to_real() + 1.0).abs() < 1e-15);
        assert_eq!(SignedLog::difference(1.0, 1.0), SignedLog::ZERO);
    }

    #[test]
    fn ln_sum_matches_pairwise() {
        let v = [-1.0, -2.0, -3.0];
        let expected = ((-1f64).exp() + (-2f64).exp() + (-3f64).exp()).ln();
        assert!((ln_sum(&v) - expected).abs() < 1e-15);
        assert_eq!(ln_sum(&[]), f64::NEG_INFINITY);
    }
}
