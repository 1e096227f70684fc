use super::round::{self, Dir};
use super::{LogNum, LogValue, MulDiv};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

/// Guaranteed bounds `[lo, hi]` on the log of a nonnegative real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogInterval {
    lo: f64,
    hi: f64,
}

/// Result of an interval operation that was only defined for some members
/// of its inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partial<T> {
    pub value: T,
    /// Some member pairs had no valid result and were excluded.
    pub partial: bool,
}

impl LogInterval {
    pub const ZERO: LogInterval = LogInterval {
        lo: f64::NEG_INFINITY,
        hi: f64::NEG_INFINITY,
    };
    pub const ONE: LogInterval = LogInterval { lo: 0.0, hi: 0.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::domain("LogInterval::new", format!("invalid bounds [{lo}, {hi}]")));
        }
        Ok(LogInterval { lo, hi })
    }

    pub fn point(x: LogValue) -> Self {
        LogInterval { lo: x.ln(), hi: x.ln() }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Width of the log bracket.
    pub fn width(&self) -> f64 {
        if self.lo == self.hi {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    /// Width of the bracket on the linear scale, `e^hi - e^lo`.
    pub fn linear_width(&self) -> f64 {
        if self.lo == self.hi {
            0.0
        } else {
            self.hi.exp() - self.lo.exp()
        }
    }

    pub fn contains(&self, ln: f64) -> bool {
        self.lo <= ln && ln <= self.hi
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, rhs: Self) -> Self {
        LogInterval {
            lo: ln_add_dir(self.lo, rhs.lo, Dir::Down),
            hi: ln_add_dir(self.hi, rhs.hi, Dir::Up),
        }
    }

    /// `self - rhs`. Fails only when every member pair would be negative;
    /// when some pairs are negative the lower bound drops to zero and the
    /// result is flagged partial.
    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, rhs: Self) -> Result<Partial<Self>> {
        if self.hi < rhs.lo {
            return Err(Error::domain(
                "LogInterval::sub",
                format!("[{}, {}] < [{}, {}]: result negative for all members", self.lo, self.hi, rhs.lo, rhs.hi),
            ));
        }
        let hi = ln_sub_dir(self.hi, rhs.lo, Dir::Up)?;
        let (lo, partial) = if self.lo >= rhs.hi {
            (ln_sub_dir(self.lo, rhs.hi, Dir::Down)?, false)
        } else {
            (f64::NEG_INFINITY, true)
        };
        Ok(Partial {
            value: LogInterval { lo, hi: hi.max(lo) },
            partial,
        })
    }

    pub fn mul_div(self, rhs: Self, mode: MulDiv) -> Result<Partial<Self>> {
        let (lo, hi) = match mode {
            MulDiv::Mul => (
                round::add(self.lo, rhs.lo, Dir::Down),
                round::add(self.hi, rhs.hi, Dir::Up),
            ),
            MulDiv::Div => (
                round::sub(self.lo, rhs.hi, Dir::Down),
                round::sub(self.hi, rhs.lo, Dir::Up),
            ),
        };
        match (lo.is_nan(), hi.is_nan()) {
            (true, true) => Err(Error::domain("LogInterval::mul_div", "indeterminate for all members")),
            (true, false) => Ok(Partial {
                value: LogInterval { lo: f64::NEG_INFINITY, hi },
                partial: true,
            }),
            (false, true) => Ok(Partial {
                value: LogInterval { lo, hi: f64::INFINITY },
                partial: true,
            }),
            (false, false) => Ok(Partial {
                value: LogInterval { lo, hi },
                partial: false,
            }),
        }
    }
}

/// Apply a scalar log-domain operation to intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn interval_op(x: LogInterval, y: LogInterval, op: IntervalOp) -> Result<Partial<LogInterval>> {
    match op {
        IntervalOp::Add => Ok(Partial {
            value: x.add(y),
            partial: false,
        }),
        IntervalOp::Sub => x.sub(y),
        IntervalOp::Mul => x.mul_div(y, MulDiv::Mul),
        IntervalOp::Div => x.mul_div(y, MulDiv::Div),
    }
}

/// `ln(e^x + e^y)` rounded in direction `dir`.
pub(crate) fn ln_add_dir(x: f64, y: f64, dir: Dir) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if hi.is_infinite() || lo == f64::NEG_INFINITY {
        return hi;
    }
    // every step is increasing in its argument, so round all in `dir`
    let d = round::sub(lo, hi, dir);
    let e = round::exp(d, dir);
    let l = round::ln_1p(e, dir);
    round::add(hi, l, dir)
}

/// `ln(e^x - e^y)` for `x ≥ y`, rounded in direction `dir`.
pub(crate) fn ln_sub_dir(x: f64, y: f64, dir: Dir) -> Result<f64> {
    if x < y {
        return Err(Error::domain("log_sub", "negative result"));
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
    // ln(1 - e^d) decreases in d: round d against `dir`.
    let d = round::sub(y, x, dir.flip());
    let l = if d > -LN_2 {
        // -expm1(d) rounded in dir  <=>  expm1(d) rounded against dir
        let t = -round::expm1(d, dir.flip());
        if t <= 0.0 {
            f64::NEG_INFINITY
        } else {
            round::ln(t, dir)
        }
    } else {
        let e = round::exp(d, dir.flip());
        round::ln_1p(-e, dir)
    };
    Ok(round::add(x, l, dir))
}

impl LogNum for LogInterval {
    const TRACKED: bool = true;

    #[inline]
    fn zero() -> Self {
        LogInterval::ZERO
    }
    #[inline]
    fn one() -> Self {
        LogInterval::ONE
    }
    #[inline]
    fn exact(ln: f64) -> Self {
        assert!(!ln.is_nan());
        LogInterval { lo: ln, hi: ln }
    }
    #[inline]
    fn bracket(lo: f64, _point: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        LogInterval { lo, hi }
    }
    #[inline]
    fn ln_of(a: f64) -> Self {
        LogInterval {
            lo: round::ln(a, Dir::Down),
            hi: round::ln(a, Dir::Up),
        }
    }
    #[inline]
    fn ln_of_sum(a: f64, b: f64) -> Self {
        LogInterval {
            lo: round::ln(round::add(a, b, Dir::Down), Dir::Down),
            hi: round::ln(round::add(a, b, Dir::Up), Dir::Up),
        }
    }
    #[inline]
    fn min_one(self) -> Self {
        LogInterval {
            lo: self.lo.min(0.0),
            hi: self.hi.min(0.0),
        }
    }
    #[inline]
    fn add(self, rhs: Self) -> Self {
        LogInterval::add(self, rhs)
    }
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let lo = if self.lo == f64::NEG_INFINITY || rhs.lo == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            round::add(self.lo, rhs.lo, Dir::Down)
        };
        let hi = if self.hi == f64::NEG_INFINITY || rhs.hi == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            round::add(self.hi, rhs.hi, Dir::Up)
        };
        LogInterval { lo, hi }
    }
    #[inline]
    fn div(self, rhs: Self) -> Result<Self> {
        self.mul_div(rhs, MulDiv::Div).map(|p| p.value)
    }
    #[inline]
    fn sub(self, rhs: Self) -> Result<Self> {
        LogInterval::sub(self, rhs).map(|p| p.value)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        debug_assert!(p >= 0.0);
        if p == 0.0 {
            return LogInterval::ONE;
        }
        LogInterval {
            lo: round::mul(self.lo, p, Dir::Down),
            hi: round::mul(self.hi, p, Dir::Up),
        }
    }
    #[inline]
    fn lo(self) -> f64 {
        self.lo
    }
    #[inline]
    fn hi(self) -> f64 {
        self.hi
    }
    #[inline]
    fn point(self) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else if self.lo == f64::NEG_INFINITY {
            self.hi
        } else {
            0.5 * (self.lo + self.hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lognum::{log_add, log_sub};

    fn pt(x: f64) -> LogInterval {
        LogInterval::exact(x)
    }

    #[test]
    fn add_of_ones_is_ln2_within_an_ulp() {
        let r = pt(0.0).add(pt(0.0));
        assert!(r.lo() <= LN_2 && LN_2 <= r.hi());
        assert!(r.lo() >= LN_2.next_down());
        assert!(r.hi() <= LN_2.next_up());
    }

    #[test]
    fn overlapping_sub_is_partial() {
        let x = LogInterval::new(1.0, 2.0).unwrap();
        let y = LogInterval::new(1.5, 1.6).unwrap();
        let r = x.sub(y).unwrap();
        assert!(r.partial);
        assert_eq!(r.value.lo(), f64::NEG_INFINITY);
        assert!(r.value.hi() > 1.0);
    }

    #[test]
    fn all_negative_sub_is_error() {
        let x = LogInterval::new(1.0, 1.1).unwrap();
        let y = LogInterval::new(1.5, 1.6).unwrap();
        assert!(x.sub(y).is_err());
    }

    #[test]
    fn scalar_inside_interval() {
        let pairs = [(0.3, -2.0), (100.0, 99.9999), (-5.0, -5.0), (1e-3, 2e-3)];
        for (a, b) in pairs {
            let s = log_add(LogValue::from_ln(a), LogValue::from_ln(b)).ln();
            assert!(pt(a).add(pt(b)).contains(s));
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            let d = log_sub(LogValue::from_ln(hi), LogValue::from_ln(lo)).unwrap().ln();
            assert!(pt(hi).sub(pt(lo)).unwrap().value.contains(d));
        }
    }

    #[test]
    fn mul_div_intervals() {
        let two = LogInterval::ln_of(2.0);
        let three = LogInterval::ln_of(3.0);
        let six = two.mul_div(three, MulDiv::Mul).unwrap().value;
        assert!(six.contains(6f64.ln()));
        let zero_over = LogInterval::ZERO.mul_div(three, MulDiv::Div).unwrap().value;
        assert_eq!(zero_over, LogInterval::ZERO);
        assert!(LogInterval::ZERO
            .mul_div(LogInterval::ZERO, MulDiv::Div)
            .is_err());
    }

    #[test]
    fn powf_brackets() {
        let x = LogInterval::ln_of(3.0);
        let r = LogNum::powf(x, 0.3);
        assert!(r.lo() <= 0.3 * 3f64.ln() && 0.3 * 3f64.ln() <= r.hi());
    }
}
