//! Dimension priors `π_n` on `{0, …, n}`, mixing priors on `α`, and the
//! hidden-state transition law derived from them.

use crate::error::{Error, Result};
use crate::lognum::{ln_sum, LogNum};
use crate::quad::{self, QuadConfig};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// `ln Γ(x)` for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln B(a, b)` for `a, b > 0`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln C(n, k)` via log-gamma.
pub fn ln_binom(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PriorFamily {
    BetaBinomial { kappa: f64, lambda: f64 },
    Binomial { p: f64 },
    PoissonTrunc { rate: f64 },
    /// `π(0) ∝ 1`, `π(s) ∝ s^{-exponent}`.
    PolyTail { exponent: f64 },
    /// `π(s) ∝ exp(-s^exponent)`.
    SubExp { exponent: f64 },
    /// Weights supplied by the caller.
    CustomVector,
}

/// A prior on the number of nonzero coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSelectionPrior {
    n: usize,
    log_pmf: Vec<f64>,
    family: PriorFamily,
}

impl ModelSelectionPrior {
    pub fn new(family: PriorFamily, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let raw: Vec<f64> = match family {
            PriorFamily::BetaBinomial { kappa, lambda } => {
                if !(kappa >= 0.0 && lambda >= 0.0) || !(kappa + lambda > 0.0) || !kappa.is_finite() || !lambda.is_finite() {
                    return bad(format!("beta-binomial needs kappa, lambda >= 0 (not both 0), got ({kappa}, {lambda})"));
                }
                if kappa == 0.0 {
                    point_mass(n, 0)
                } else if lambda == 0.0 {
                    point_mass(n, n)
                } else {
                    let b0 = ln_beta(kappa, lambda);
                    (0..=n)
                        .map(|s| ln_binom(n, s) + ln_beta(kappa + s as f64, lambda + (n - s) as f64) - b0)
                        .collect()
                }
            }
            PriorFamily::Binomial { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("binomial p must lie in [0, 1], got {p}"));
                }
                if p == 0.0 {
                    point_mass(n, 0)
                } else if p == 1.0 {
                    point_mass(n, n)
                } else {
                    let (lp, lq) = (p.ln(), (-p).ln_1p());
                    (0..=n)
                        .map(|s| ln_binom(n, s) + s as f64 * lp + (n - s) as f64 * lq)
                        .collect()
                }
            }
            PriorFamily::PoissonTrunc { rate } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return bad(format!("poisson rate must be positive, got {rate}"));
                }
                let lr = rate.ln();
                (0..=n).map(|s| s as f64 * lr - ln_gamma(s as f64 + 1.0)).collect()
            }
            PriorFamily::PolyTail { exponent } => {
                if !(exponent > 0.0 && exponent.is_finite()) {
                    return bad(format!("polynomial tail exponent must be positive, got {exponent}"));
                }
                (0..=n)
                    .map(|s| if s == 0 { 0.0 } else { -exponent * (s as f64).ln() })
                    .collect()
            }
            PriorFamily::SubExp { exponent } => {
                if !(exponent > 0.0 && exponent.is_finite()) {
                    return bad(format!("sub-exponential exponent must be positive, got {exponent}"));
                }
                (0..=n).map(|s| -(s as f64).powf(exponent)).collect()
            }
            PriorFamily::CustomVector => {
                return bad("use ModelSelectionPrior::from_weights for custom vectors".into());
            }
        };
        Ok(ModelSelectionPrior {
            n,
            log_pmf: normalize(raw)?,
            family,
        })
    }

    /// Build from nonnegative weights `w[0..=n]`, normalized internally.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidParameter("need weights for s = 0..=n with n >= 1".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight {w} is not a finite nonnegative number")));
        }
        Self::from_log_weights(&weights.iter().map(|w| w.ln()).collect::<Vec<_>>())
    }

    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self> {
        if log_weights.len() < 2 {
            return Err(Error::InvalidParameter("need weights for s = 0..=n with n >= 1".into()));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::InvalidParameter("log weights must be < +inf and not NaN".into()));
        }
        Ok(ModelSelectionPrior {
            n: log_weights.len() - 1,
            log_pmf: normalize(log_weights.to_vec())?,
            family: PriorFamily::CustomVector,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &PriorFamily {
        &self.family
    }

    pub fn log_pmf(&self) -> &[f64] {
        &self.log_pmf
    }

    pub fn pmf(&self) -> Vec<f64> {
        self.log_pmf.iter().map(|l| l.exp()).collect()
    }

    /// `ln(π(s)/C(n, s))`, the prior probability of one particular support
    /// set of size `s`.
    pub fn ln_subset_weights(&self) -> Vec<f64> {
        let n = self.n;
        match self.beta_params() {
            Some((kappa, lambda)) => {
                let b0 = ln_beta(kappa, lambda);
                (0..=n)
                    .map(|s| ln_beta(kappa + s as f64, lambda + (n - s) as f64) - b0)
                    .collect()
            }
            None => (0..=n).map(|s| self.log_pmf[s] - ln_binom(n, s)).collect(),
        }
    }

    /// Smallest and largest `s` with positive prior mass.
    pub fn support(&self) -> (usize, usize) {
        let lo = self.log_pmf.iter().position(|l| *l > f64::NEG_INFINITY).unwrap_or(0);
        let hi = self.log_pmf.iter().rposition(|l| *l > f64::NEG_INFINITY).unwrap_or(self.n);
        (lo, hi)
    }

    /// `Π(B_i = 1) = Σ_s π(s) s/n`, the same for every coordinate.
    pub fn marginal_inclusion(&self) -> f64 {
        let n = self.n as f64;
        self.pmf().iter().enumerate().map(|(s, p)| p * s as f64 / n).sum()
    }

    /// Beta parameters when this is a beta-binomial prior with `κ, λ > 0`.
    pub fn beta_params(&self) -> Option<(f64, f64)> {
        match self.family {
            PriorFamily::BetaBinomial { kappa, lambda } if kappa > 0.0 && lambda > 0.0 => Some((kappa, lambda)),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match &self.family {
            PriorFamily::BetaBinomial { kappa, lambda } => format!("beta-binomial({kappa},{lambda})"),
            PriorFamily::Binomial { p } => format!("binomial({p})"),
            PriorFamily::PoissonTrunc { rate } => format!("poisson({rate})"),
            PriorFamily::PolyTail { exponent } => format!("poly({exponent})"),
            PriorFamily::SubExp { exponent } => format!("subexp({exponent})"),
            PriorFamily::CustomVector => format!("custom(n={})", self.n),
        }
    }
}

fn point_mass(n: usize, at: usize) -> Vec<f64> {
    (0..=n).map(|s| if s == at { 0.0 } else { f64::NEG_INFINITY }).collect()
}

fn normalize(mut raw: Vec<f64>) -> Result<Vec<f64>> {
    let total = ln_sum(&raw);
    if !total.is_finite() {
        return Err(Error::InvalidParameter("prior weights have zero or infinite total mass".into()));
    }
    for w in &mut raw {
        *w -= total;
    }
    Ok(raw)
}

/// Joint prior probability `v_i(m)` of any length-`i` binary prefix with
/// `m` ones, for `0 ≤ i ≤ n`.
#[derive(Debug, Clone)]
pub struct VTable<N> {
    rows: Vec<Vec<N>>,
}

impl<N: LogNum> VTable<N> {
    pub fn new(prior: &ModelSelectionPrior) -> Self {
        let n = prior.n();
        let mut cur: Vec<N> = prior.ln_subset_weights().into_iter().map(N::exact).collect();
        let mut rows = Vec::with_capacity(n + 1);
        for _ in 0..n {
            let next: Vec<N> = cur.windows(2).map(|w| w[0].add(w[1])).collect();
            rows.push(std::mem::replace(&mut cur, next));
        }
        rows.push(cur);
        rows.reverse();
        VTable { rows }
    }

    #[inline]
    pub fn get(&self, i: usize, m: usize) -> N {
        self.rows[i][m]
    }

    pub fn n(&self) -> usize {
        self.rows.len() - 1
    }
}

/// `Π(B_{i+1} = b | M_i = m)` for every `0 ≤ m ≤ i < n`.
#[derive(Debug, Clone)]
pub enum Transitions<N> {
    /// Closed form `(κ + m)/(κ + λ + i)`.
    BetaBinomial {
        ln_kappa_m: Vec<N>,
        ln_lambda_j: Vec<N>,
        ln_inv_total: Vec<N>,
    },
    Table(VTable<N>),
}

impl<N: LogNum> Transitions<N> {
    pub fn new(prior: &ModelSelectionPrior) -> Result<Self> {
        let n = prior.n();
        if let Some((kappa, lambda)) = prior.beta_params() {
            let ln_kappa_m = (0..n).map(|m| N::ln_of_sum(kappa, m as f64)).collect();
            let ln_lambda_j = (0..n).map(|j| N::ln_of_sum(lambda, j as f64)).collect();
            let ln_inv_total = (0..n)
                .map(|i| N::one().div(N::ln_of_sum(kappa + lambda, i as f64)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Transitions::BetaBinomial {
                ln_kappa_m,
                ln_lambda_j,
                ln_inv_total,
            })
        } else {
            Ok(Transitions::Table(VTable::new(prior)))
        }
    }

    /// Transition probability out of `(i, m)` when bit `i + 1` equals `b`.
    #[inline]
    pub fn get(&self, i: usize, m: usize, b: bool) -> N {
        match self {
            Transitions::BetaBinomial {
                ln_kappa_m,
                ln_lambda_j,
                ln_inv_total,
            } => {
                let num = if b { ln_kappa_m[m] } else { ln_lambda_j[i - m] };
                num.mul(ln_inv_total[i])
            }
            Transitions::Table(v) => {
                let den = v.get(i, m);
                if den.hi() == f64::NEG_INFINITY {
                    return N::zero();
                }
                let num = v.get(i + 1, m + usize::from(b));
                // an interval denominator may straddle zero; clamp to [0, 1]
                match num.div(den) {
                    Ok(t) => t.min_one(),
                    Err(_) => N::zero(),
                }
            }
        }
    }
}

/// Prior on the mixing weight `α` of a spike-and-slab prior.
#[derive(Clone)]
pub enum MixingPrior {
    Beta { kappa: f64, lambda: f64 },
    Density {
        name: String,
        ln_density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        /// Lipschitz constant of `λ_n` in the arcsine scale, when known.
        lipschitz: Option<f64>,
    },
}

impl fmt::Debug for MixingPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixingPrior::Beta { kappa, lambda } => write!(f, "Beta({kappa}, {lambda})"),
            MixingPrior::Density { name, lipschitz, .. } => write!(f, "Density({name}, L={lipschitz:?})"),
        }
    }
}

impl MixingPrior {
    pub fn beta(kappa: f64, lambda: f64) -> Result<Self> {
        if !(kappa > 0.0 && lambda > 0.0 && kappa.is_finite() && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta parameters must be positive, got ({kappa}, {lambda})")));
        }
        Ok(MixingPrior::Beta { kappa, lambda })
    }

    /// Density on `(0, 1)` given by its log; checked to integrate to one.
    pub fn density(
        name: impl Into<String>,
        ln_density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lipschitz: Option<f64>,
    ) -> Result<Self> {
        let d = MixingPrior::Density {
            name: name.into(),
            ln_density: Arc::new(ln_density),
            lipschitz,
        };
        let mass = d.ln_mass_integral(0, 0)?.exp();
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!("mixing density integrates to {mass}, not 1")));
        }
        Ok(d)
    }

    pub fn ln_density(&self, alpha: f64) -> f64 {
        match self {
            MixingPrior::Beta { kappa, lambda } => {
                (kappa - 1.0) * alpha.ln() + (lambda - 1.0) * (-alpha).ln_1p() - ln_beta(*kappa, *lambda)
            }
            MixingPrior::Density { ln_density, .. } => ln_density(alpha),
        }
    }

    /// `ln ∫ α^s (1-α)^{n-s} dΛ(α)`.
    pub fn ln_mass_integral(&self, s: usize, n: usize) -> Result<f64> {
        match self {
            MixingPrior::Beta { kappa, lambda } => {
                Ok(ln_beta(kappa + s as f64, lambda + (n - s) as f64) - ln_beta(*kappa, *lambda))
            }
            MixingPrior::Density { ln_density, .. } => {
                let (s_f, r_f) = (s as f64, (n - s) as f64);
                let ln_f = |a: f64| {
                    if a <= 0.0 || a >= 1.0 {
                        return f64::NEG_INFINITY;
                    }
                    let mut l = ln_density(a);
                    if s > 0 {
                        l += s_f * a.ln();
                    }
                    if n > s {
                        l += r_f * (-a).ln_1p();
                    }
                    l
                };
                let peak = if n == 0 { 0.5 } else { (s_f / n as f64).clamp(1e-12, 1.0 - 1e-12) };
                let mut shift = ln_f(peak);
                if !shift.is_finite() {
                    shift = [0.25, 0.5, 0.75].iter().map(|a| ln_f(*a)).fold(f64::NEG_INFINITY, f64::max);
                }
                let shift = if shift.is_finite() { shift } else { 0.0 };
                // breaks refine around the peak, whose width is about 1/sqrt(n)
                let w = 1.0 / ((n + 1) as f64).sqrt();
                let mut pts = vec![0.0, 1.0, peak];
                for k in [-8.0, -3.0, -1.0, 1.0, 3.0, 8.0] {
                    let p = peak + k * w * (peak * (1.0 - peak)).sqrt().max(w);
                    if p > 0.0 && p < 1.0 {
                        pts.push(p);
                    }
                }
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                let f = |a: f64| (ln_f(a) - shift).exp();
                let v = quad::integrate(&f, &pts, QuadConfig { rel_tol: 1e-11, ..QuadConfig::default() })?;
                Ok(v.ln() + shift)
            }
        }
    }

    /// The model selection prior this mixing prior induces on `{0, …, n}`.
    pub fn to_model_selection(&self, n: usize) -> Result<ModelSelectionPrior> {
        match self {
            MixingPrior::Beta { kappa, lambda } => ModelSelectionPrior::new(
                PriorFamily::BetaBinomial {
                    kappa: *kappa,
                    lambda: *lambda,
                },
                n,
            ),
            MixingPrior::Density { .. } => {
                let lw = (0..=n)
                    .map(|s| Ok(ln_binom(n, s) + self.ln_mass_integral(s, n)?))
                    .collect::<Result<Vec<_>>>()?;
                ModelSelectionPrior::from_log_weights(&lw)
            }
        }
    }
}
