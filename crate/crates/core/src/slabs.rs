//! Slab densities `g` and their convolutions with the standard normal kernel.
//!
//! ```text
//! ψ(y)    = ∫ φ(y - t) g(t) dt
//! ζ(y)    = ∫ t φ(y - t) g(t) dt
//! ψ(y, u) = ∫_{-∞}^{u} φ(y - t) g(t) dt
//! ```
//!
//! Laplace and Gaussian slabs have closed forms in terms of the normal CDF;
//! the rest go through adaptive quadrature.

use crate::error::{Error, Result};
use crate::lognum::{ln_add, ln_sub, LogValue, SignedLog};
use crate::quad::{self, QuadConfig};
use serde::{Deserialize, Serialize};
use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::Arc;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;

/// `ln φ(x)` for the standard normal density.
#[inline]
pub fn ln_phi(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Mills ratio `Φ(-x)/φ(x)` for `x ≥ 5` by its continued fraction, split
/// as `R = 1/(x + u)` so that `1 - xR = u/(x + u)` stays accurate.
fn mills_parts(x: f64) -> (f64, f64) {
    let mut f = x;
    for k in (2..=120).rev() {
        f = x + k as f64 / f;
    }
    let u = 1.0 / f;
    (u, x + u)
}

/// `ln Φ(x)`, accurate in both tails.
pub fn ln_ndtr(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if x == f64::INFINITY {
        0.0
    } else if x > 0.0 {
        (-0.5 * erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else if x > -5.0 {
        (0.5 * erfc(-x * FRAC_1_SQRT_2)).ln()
    } else {
        let (_, d) = mills_parts(-x);
        ln_phi(x) - d.ln()
    }
}

/// `ln(Φ(b) - Φ(a))` for `a ≤ b`.
pub fn ln_ndtr_diff(a: f64, b: f64) -> f64 {
    if a >= b {
        return f64::NEG_INFINITY;
    }
    let r = if a > 0.0 {
        ln_sub(ln_ndtr(-a), ln_ndtr(-b))
    } else {
        ln_sub(ln_ndtr(b), ln_ndtr(a))
    };
    r.unwrap_or(f64::NEG_INFINITY)
}

/// `ln ∫_0^∞ t φ(t - μ) dt = ln(μΦ(μ) + φ(μ))`.
fn ln_partial_mean(mu: f64) -> f64 {
    if mu >= 0.0 {
        ln_add(mu.ln() + ln_ndtr(mu), ln_phi(mu))
    } else {
        let x = -mu;
        if x >= 5.0 {
            let (u, d) = mills_parts(x);
            ln_phi(x) + u.ln() - d.ln()
        } else {
            // φ(x)(1 - x Φ(-x)/φ(x)); mild cancellation for x < 5
            let r = (ln_ndtr(-x) - ln_phi(x)).exp();
            ln_phi(x) + (1.0 - x * r).ln()
        }
    }
}

/// A user supplied slab density.
#[derive(Clone)]
pub struct CustomSlab {
    pub name: String,
    ln_density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Closed support `[lo, hi]`; use infinities for unbounded densities.
    pub support: (f64, f64),
    /// Extra break points for quadrature (kinks, modes).
    pub breaks: Vec<f64>,
    pub quad: QuadConfig,
}

impl CustomSlab {
    /// Wrap a log density, checking that it integrates to one.
    pub fn new(
        name: impl Into<String>,
        ln_density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: (f64, f64),
        breaks: Vec<f64>,
    ) -> Result<Self> {
        let slab = CustomSlab {
            name: name.into(),
            ln_density: Arc::new(ln_density),
            support,
            breaks,
            quad: QuadConfig::default(),
        };
        let mut pts = vec![support.0, support.1];
        pts.extend(slab.breaks.iter().copied().filter(|b| *b > support.0 && *b < support.1));
        if support.0 < 0.0 && support.1 > 0.0 {
            pts.push(0.0);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let f = |t: f64| (slab.ln_density)(t).exp();
        let mass = quad::integrate(&f, &pts, QuadConfig { rel_tol: 1e-10, ..slab.quad })?;
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "custom slab '{}' integrates to {mass}, not 1",
                slab.name
            )));
        }
        Ok(slab)
    }

    /// Uniform density on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("uniform slab needs lo < hi, got [{lo}, {hi}]")));
        }
        let ld = -(hi - lo).ln();
        CustomSlab::new(format!("uniform({lo},{hi})"), move |_| ld, (lo, hi), Vec::new())
    }

    pub fn ln_density(&self, t: f64) -> f64 {
        if t < self.support.0 || t > self.support.1 {
            f64::NEG_INFINITY
        } else {
            (self.ln_density)(t)
        }
    }
}

impl fmt::Debug for CustomSlab {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSlab")
            .field("name", &self.name)
            .field("support", &self.support)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SlabFamily {
    /// `g(x) = (a/2) e^{-a|x|}`.
    Laplace { a: f64 },
    /// `N(0, v)`.
    Gaussian { v: f64 },
    /// Cauchy with scale `gamma`, centered at zero.
    Cauchy { gamma: f64 },
}

/// A slab distribution with the functionals the posterior needs.
#[derive(Debug, Clone)]
pub enum SlabModel {
    Builtin(SlabFamily),
    Custom(CustomSlab),
}

impl From<SlabFamily> for SlabModel {
    fn from(f: SlabFamily) -> Self {
        SlabModel::Builtin(f)
    }
}

impl SlabModel {
    pub fn laplace(a: f64) -> Result<Self> {
        positive("laplace scale", a)?;
        Ok(SlabModel::Builtin(SlabFamily::Laplace { a }))
    }

    pub fn gaussian(v: f64) -> Result<Self> {
        positive("gaussian variance", v)?;
        Ok(SlabModel::Builtin(SlabFamily::Gaussian { v }))
    }

    pub fn cauchy(gamma: f64) -> Result<Self> {
        positive("cauchy scale", gamma)?;
        Ok(SlabModel::Builtin(SlabFamily::Cauchy { gamma }))
    }

    pub fn name(&self) -> String {
        match self {
            SlabModel::Builtin(SlabFamily::Laplace { a }) => format!("laplace({a})"),
            SlabModel::Builtin(SlabFamily::Gaussian { v }) => format!("gaussian({v})"),
            SlabModel::Builtin(SlabFamily::Cauchy { gamma }) => format!("cauchy({gamma})"),
            SlabModel::Custom(c) => c.name.clone(),
        }
    }

    /// Whether `g(-x) = g(x)`, which makes `ζ` odd and `ψ` even.
    pub fn is_symmetric(&self) -> bool {
        matches!(self, SlabModel::Builtin(_))
    }

    pub fn ln_density(&self, t: f64) -> f64 {
        match self {
            SlabModel::Builtin(SlabFamily::Laplace { a }) => (a / 2.0).ln() - a * t.abs(),
            SlabModel::Builtin(SlabFamily::Gaussian { v }) => -0.5 * t * t / v - 0.5 * (2.0 * PI * v).ln(),
            SlabModel::Builtin(SlabFamily::Cauchy { gamma }) => {
                let z = t / gamma;
                -(PI * gamma).ln() - (z * z).ln_1p()
            }
            SlabModel::Custom(c) => c.ln_density(t),
        }
    }

    /// `ψ(y)`.
    pub fn psi(&self, y: f64) -> Result<LogValue> {
        finite("psi", y)?;
        let ln = match self {
            SlabModel::Builtin(SlabFamily::Laplace { a }) => {
                let a = *a;
                (a / 2.0).ln()
                    + 0.5 * a * a
                    + ln_add(-a * y + ln_ndtr(y - a), a * y + ln_ndtr(-y - a))
            }
            SlabModel::Builtin(SlabFamily::Gaussian { v }) => {
                let s2 = 1.0 + v;
                -0.5 * y * y / s2 - 0.5 * s2.ln() - LN_SQRT_2PI
            }
            _ => {
                let (neg, pos) = self.quad_parts(y, f64::INFINITY, false)?;
                ln_add(neg, pos)
            }
        };
        Ok(LogValue::from_ln(ln))
    }

    /// `ζ(y)` as a signed log value.
    pub fn zeta(&self, y: f64) -> Result<SignedLog> {
        finite("zeta", y)?;
        match self {
            SlabModel::Builtin(SlabFamily::Laplace { a }) => {
                let a = *a;
                let c = (a / 2.0).ln() + 0.5 * a * a;
                let pos = c - a * y + ln_partial_mean(y - a);
                let neg = c + a * y + ln_partial_mean(-y - a);
                Ok(SignedLog::difference(pos, neg))
            }
            SlabModel::Builtin(SlabFamily::Gaussian { v }) => {
                let psi = self.psi(y)?.ln();
                let shrink = v / (1.0 + v);
                if y == 0.0 {
                    return Ok(SignedLog::ZERO);
                }
                Ok(SignedLog::new(y.signum() as i8, psi + (y.abs() * shrink).ln()))
            }
            _ => {
                let (neg, pos) = self.quad_parts(y, f64::INFINITY, true)?;
                Ok(SignedLog::difference(pos, neg))
            }
        }
    }

    /// `ψ(y, u)`.
    pub fn psi_partial(&self, y: f64, u: f64) -> Result<LogValue> {
        finite("psi_partial", y)?;
        if u.is_nan() {
            return Err(Error::domain("psi_partial", "NaN bound"));
        }
        if u == f64::NEG_INFINITY {
            return Ok(LogValue::ZERO);
        }
        if u == f64::INFINITY {
            return self.psi(y);
        }
        let ln = match self {
            SlabModel::Builtin(SlabFamily::Laplace { a }) => {
                let a = *a;
                let c = (a / 2.0).ln() + 0.5 * a * a;
                if u <= 0.0 {
                    c + a * y + ln_ndtr(u - y - a)
                } else {
                    let left = c + a * y + ln_ndtr(-y - a);
                    let right = c - a * y + ln_ndtr_diff(a - y, u - y + a);
                    ln_add(left, right)
                }
            }
            SlabModel::Builtin(SlabFamily::Gaussian { v }) => {
                let m = y * v / (1.0 + v);
                let s = (v / (1.0 + v)).sqrt();
                self.psi(y)?.ln() + ln_ndtr((u - m) / s)
            }
            _ => {
                let (neg, pos) = self.quad_parts(y, u, false)?;
                ln_add(neg, pos)
            }
        };
        Ok(LogValue::from_ln(ln))
    }

    /// The `u` with `ψ(y, u)/ψ(y) = v`; `-∞` for `v ≤ 0` and `+∞` for `v ≥ 1`.
    pub fn h_inverse(&self, y: f64, v: f64) -> Result<f64> {
        if v.is_nan() {
            return Err(Error::domain("h_inverse", "NaN level"));
        }
        if v <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if v >= 1.0 {
            return Ok(f64::INFINITY);
        }
        let total = self.psi(y)?.ln();
        let target = v.ln();
        let err = std::cell::Cell::new(None);
        let f = |u: f64| match self.psi_partial(y, u) {
            Ok(p) => p.ln() - total - target,
            Err(e) => {
                err.set(Some(e));
                f64::NAN
            }
        };
        let (mut lo, mut hi) = (y - 1.0, y + 1.0);
        if let SlabModel::Custom(c) = self {
            lo = lo.max(c.support.0);
            hi = hi.min(c.support.1);
        }
        let mut step = 1.0;
        while f(lo) > 0.0 {
            step *= 2.0;
            lo -= step;
            if step > 1e12 {
                break;
            }
        }
        step = 1.0;
        while f(hi) < 0.0 {
            step *= 2.0;
            hi += step;
            if step > 1e12 {
                break;
            }
        }
        let r = quad::find_root(&f, lo, hi, 1e-10);
        if let Some(e) = err.take() {
            return Err(e);
        }
        r
    }

    /// Quadrature of `t^k φ(y - t) g(t)` split into the parts over `t < 0`
    /// and `t > 0` (as logs of nonnegative numbers), truncated at `u`.
    fn quad_parts(&self, y: f64, u: f64, first_moment: bool) -> Result<(f64, f64)> {
        let (support, extra, cfg) = match self {
            SlabModel::Custom(c) => (c.support, c.breaks.clone(), c.quad),
            SlabModel::Builtin(SlabFamily::Cauchy { gamma }) => {
                ((f64::NEG_INFINITY, f64::INFINITY), vec![-*gamma, *gamma], QuadConfig::default())
            }
            _ => ((f64::NEG_INFINITY, f64::INFINITY), Vec::new(), QuadConfig::default()),
        };
        let hi_lim = support.1.min(u);
        // log-scale shift so the integrand peaks near one
        let mut shift = f64::NEG_INFINITY;
        for t in [0.0, y, 0.5 * y, support.0, support.1] {
            if t.is_finite() && t >= support.0 && t <= support.1 {
                shift = shift.max(ln_phi(y - t) + self.ln_density(t));
            }
        }
        if shift == f64::NEG_INFINITY {
            shift = 0.0;
        }
        let integrand = |t: f64| {
            let mut l = ln_phi(y - t) + self.ln_density(t) - shift;
            if first_moment {
                l += t.abs().ln();
            }
            l.exp()
        };
        let side = |lo: f64, hi: f64, reflect: bool| -> Result<f64> {
            if !(lo < hi) {
                return Ok(f64::NEG_INFINITY);
            }
            let mut pts = vec![lo, hi];
            for p in [y, y - 8.0, y + 8.0].into_iter().chain(extra.iter().copied()) {
                let p = if reflect { -p } else { p };
                if p > lo && p < hi {
                    pts.push(p);
                }
            }
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let v = if reflect {
                let g = |s: f64| integrand(-s);
                quad::integrate(&g, &pts, cfg)?
            } else {
                quad::integrate(&integrand, &pts, cfg)?
            };
            Ok(if v > 0.0 { v.ln() + shift } else { f64::NEG_INFINITY })
        };
        // negative side integrated over s = -t ∈ (max(0,-hi_lim), -support.0)
        let neg = side((-hi_lim).max(0.0), -support.0, true)?;
        let pos = side(support.0.max(0.0), hi_lim, false)?;
        Ok((neg, pos))
    }
}

fn positive(what: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be positive and finite, got {x}")))
    }
}

fn finite(op: &'static str, y: f64) -> Result<()> {
    if y.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("observation {y} is not finite")))
    }
}
