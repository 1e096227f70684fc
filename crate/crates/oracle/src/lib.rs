//! Extended-precision reference posteriors for tests.
//!
//! Everything here is computed in 256-bit binary floating point (about 77
//! significant decimal digits) and deliberately shares no code with the
//! production algorithms. The only inputs taken from the caller are the
//! per-coordinate log densities `ln ψ(Y_i)` and `ln φ(Y_i)`, which are
//! converted exactly and exponentiated at full precision.
//!
//! * [`brute_force_q`] enumerates all `2ⁿ` subsets of the model selection
//!   posterior.
//! * [`brute_force_mixture`] integrates the spike-and-slab posterior over
//!   the mixing weight `α`, via elementary symmetric polynomials of the
//!   likelihoods and the moments `∫ αˢ (1-α)ⁿ⁻ˢ dF(α)`.

use std::sync::{LazyLock, Mutex, MutexGuard};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

/// Working precision in bits.
pub const PREC: usize = 256;
/// Largest `n` accepted by the enumeration.
pub const MAX_BRUTE_N: usize = 20;
/// Largest `n` accepted by the mixture oracle (its cost is `O(n³)`).
pub const MAX_MIXTURE_N: usize = 400;

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OracleError {
    #[error("n = {n} exceeds the oracle limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Prior on the model size, as the oracle understands it.
#[derive(Debug, Clone, PartialEq)]
pub enum OraclePrior {
    /// `π(s)` for `s = 0..=n`, up to a constant.
    Weights(Vec<f64>),
    BetaBinomial { kappa: f64, lambda: f64 },
    Binomial { p: f64 },
}

/// Mixing distribution for the spike-and-slab prior.
pub enum Mixing<'a> {
    Beta { kappa: f64, lambda: f64 },
    /// Atoms `alpha[j]` with weights `weights[j]` (up to a constant).
    Discrete { alpha: &'a [f64], weights: &'a [f64] },
    /// A density on `(0, 1)` integrated by Gauss-Legendre with `points`
    /// nodes. Only as accurate as the rule and `f64` density values.
    Density { density: &'a dyn Fn(f64) -> f64, points: usize },
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Posterior inclusion probabilities.
    pub q: Vec<BigFloat>,
    /// Marginal likelihood `Q_n`.
    pub marginal: BigFloat,
}

impl OracleResult {
    pub fn q_f64(&self) -> Vec<f64> {
        self.q.iter().map(to_f64).collect()
    }

    pub fn ln_marginal(&self) -> f64 {
        to_f64(&ln(&self.marginal))
    }

    /// Largest `|q_i - q'_i|` relative to `max(|q_i|, tiny)`, in full
    /// precision.
    pub fn max_rel_diff(&self, other: &OracleResult) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .map(|(a, b)| {
                let d = a.sub(b, PREC, RM).abs();
                let scale = a.abs().max(&BigFloat::from_f64(1e-300, PREC));
                to_f64(&d.div(&scale, PREC, RM))
            })
            .fold(0.0, f64::max)
    }
}

static CONSTS: LazyLock<Mutex<Consts>> = LazyLock::new(|| Mutex::new(Consts::new().expect("astro-float constants cache")));

/// The shared constants cache. Do not hold the guard across calls that
/// take it again.
fn consts() -> MutexGuard<'static, Consts> {
    CONSTS.lock().unwrap_or_else(|e| e.into_inner())
}

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, PREC)
}

fn big_u(x: u64) -> BigFloat {
    BigFloat::from_u64(x, PREC)
}

fn exp(x: f64, cc: &mut Consts) -> BigFloat {
    if x == f64::NEG_INFINITY {
        return big(0.0);
    }
    big(x).exp(PREC, RM, cc)
}

fn ln(x: &BigFloat) -> BigFloat {
    x.ln(PREC, RM, &mut consts())
}

/// Correctly rounded conversion through the decimal expansion.
pub fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf() {
        return if x.is_inf_pos() { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    let s = x.format(Radix::Dec, RM, &mut consts()).expect("decimal formatting");
    s.parse().unwrap_or_else(|_| panic!("unparseable oracle value {s:?}"))
}

/// `ln Σ exp(t_i)` evaluated at 256 bits, then rounded to `f64`.
pub fn ln_sum_exp(ln_terms: &[f64]) -> f64 {
    let mut cc = consts();
    let mut acc = big(0.0);
    for &t in ln_terms {
        acc = acc.add(&exp(t, &mut cc), PREC, RM);
    }
    let r = acc.ln(PREC, RM, &mut cc);
    drop(cc);
    to_f64(&r)
}

/// `Σ x_i` at 256 bits, rounded once.
pub fn sum(xs: &[f64]) -> f64 {
    to_f64(&xs.iter().fold(big(0.0), |acc, &x| acc.add(&big(x), PREC, RM)))
}

/// Exact reference values for log-domain arithmetic on `f64` inputs,
/// held at 256 bits. `-inf` stands for the real number zero.
pub mod exact {
    use super::{big, consts, BigFloat, PREC, RM};

    fn ln(x: &BigFloat) -> BigFloat {
        if x.is_zero() {
            big(f64::NEG_INFINITY)
        } else {
            x.ln(PREC, RM, &mut consts())
        }
    }

    /// Enough bits to add any two doubles without rounding.
    const WIDE: usize = 2304;

    /// `hi + ln(1 ± e^{lo-hi})`. Tiny `d = e^{lo-hi}` goes through the
    /// series of `ln(1 ± d)`, which keeps full relative accuracy where
    /// forming `1 ± d` would round `d` away.
    fn ln_combine(hi: f64, lo: f64, plus: bool) -> BigFloat {
        let mut cc = consts();
        let gap = hi - lo;
        let d = big(-gap).exp(PREC, RM, &mut cc);
        let d = if plus { d } else { d.neg() };
        let l = if gap > 64.0 * std::f64::consts::LN_2 {
            // d - d²/2 + d³/3 - d⁴/4 + d⁵/5, truncation below 2^-320 relative
            let mut term = d.clone();
            let mut acc = d.clone();
            for k in 2..=5u64 {
                term = term.mul(&d, PREC, RM).neg();
                let t = term.div(&BigFloat::from_u64(k, PREC), PREC, RM);
                acc = acc.add(&t, PREC, RM);
            }
            acc
        } else {
            let p = PREC + 128;
            let inner = BigFloat::from_u64(1, p).add(&d, p, RM);
            if inner.is_zero() {
                return big(f64::NEG_INFINITY);
            }
            inner.ln(p, RM, &mut cc)
        };
        big(hi).add(&l, PREC, RM)
    }

    /// `ln(eᵃ + eᵇ)`.
    pub fn ln_add(a: f64, b: f64) -> BigFloat {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        if lo == f64::NEG_INFINITY {
            return big(hi);
        }
        ln_combine(hi, lo, true)
    }

    /// `ln(eᵃ - eᵇ)`; `None` when the difference is negative.
    pub fn ln_sub(a: f64, b: f64) -> Option<BigFloat> {
        if a < b {
            return None;
        }
        if b == f64::NEG_INFINITY {
            return Some(big(a));
        }
        if a == b {
            return Some(big(f64::NEG_INFINITY));
        }
        Some(ln_combine(a, b, false))
    }

    /// `a + b` without rounding.
    pub fn add(a: f64, b: f64) -> BigFloat {
        BigFloat::from_f64(a, WIDE).add(&BigFloat::from_f64(b, WIDE), WIDE, RM)
    }

    pub fn sub(a: f64, b: f64) -> BigFloat {
        BigFloat::from_f64(a, WIDE).sub(&BigFloat::from_f64(b, WIDE), WIDE, RM)
    }

    pub fn mul(a: f64, b: f64) -> BigFloat {
        big(a).mul(&big(b), PREC, RM)
    }

    /// `ln a` for a real `a ≥ 0`.
    pub fn ln_real(a: f64) -> BigFloat {
        ln(&big(a))
    }

    /// `ln(a + b)` for reals `a, b ≥ 0`.
    pub fn ln_real_sum(a: f64, b: f64) -> BigFloat {
        let s = add(a, b);
        if s.is_zero() {
            big(f64::NEG_INFINITY)
        } else {
            s.ln(WIDE, RM, &mut consts())
        }
    }

    /// `ln Σ exp(v_k) · count_k`.
    pub fn ln_weighted_sum(values: &[(f64, u64)]) -> BigFloat {
        let mut cc = consts();
        let total = values.iter().fold(big(0.0), |acc, &(v, c)| {
            let t = if v == f64::NEG_INFINITY { big(0.0) } else { big(v).exp(PREC, RM, &mut cc) };
            acc.add(&t.mul(&BigFloat::from_u64(c, PREC), PREC, RM), PREC, RM)
        });
        drop(cc);
        ln(&total)
    }

    /// `lo ≤ x ≤ hi`, compared exactly.
    pub fn within(x: &BigFloat, lo: f64, hi: f64) -> bool {
        let ge = |a: &BigFloat, b: &BigFloat| a.cmp(b).is_some_and(|c| c >= 0);
        ge(x, &big(lo)) && ge(&big(hi), x)
    }

    /// `x` rounded to nearest `f64`.
    pub fn to_f64(x: &BigFloat) -> f64 {
        super::to_f64(x)
    }
}

fn check_inputs(ln_psi: &[f64], ln_phi: &[f64], max: usize) -> Result<usize> {
    let n = ln_psi.len();
    if n != ln_phi.len() {
        return Err(OracleError::Invalid(format!("{} ψ values but {} φ values", n, ln_phi.len())));
    }
    if n == 0 {
        return Err(OracleError::Invalid("no observations".into()));
    }
    if n > max {
        return Err(OracleError::TooLarge { n, max });
    }
    if ln_psi.iter().chain(ln_phi).any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(OracleError::Invalid("log densities must be finite or -inf".into()));
    }
    Ok(n)
}

fn binom(n: usize, k: usize) -> BigFloat {
    // exact: C(n, k) < 2^64 for n <= 60
    let mut c: u128 = 1;
    for j in 0..k as u128 {
        c = c * (n as u128 - j) / (j + 1);
    }
    big_u(c as u64)
}

/// `∏_{j<s} (κ+j) ∏_{j<n-s} (λ+j) / ∏_{j<n} (κ+λ+j)`, which is
/// `B(κ+s, λ+n-s) / B(κ, λ)`.
fn beta_moments(kappa: f64, lambda: f64, n: usize) -> Result<Vec<BigFloat>> {
    if !(kappa > 0.0 && lambda > 0.0 && kappa.is_finite() && lambda.is_finite()) {
        return Err(OracleError::Invalid(format!("beta parameters must be positive, got ({kappa}, {lambda})")));
    }
    let (k, l) = (big(kappa), big(lambda));
    let kl = k.add(&l, PREC, RM);
    let rising = |a: &BigFloat, m: usize| {
        (0..m).fold(big(1.0), |acc, j| acc.mul(&a.add(&big_u(j as u64), PREC, RM), PREC, RM))
    };
    let denom = rising(&kl, n);
    Ok((0..=n)
        .map(|s| rising(&k, s).mul(&rising(&l, n - s), PREC, RM).div(&denom, PREC, RM))
        .collect())
}

/// Per-subset weight `π(s) / C(n, s)` for `s = 0..=n`.
fn subset_weights(prior: &OraclePrior, n: usize) -> Result<Vec<BigFloat>> {
    match prior {
        OraclePrior::Weights(w) => {
            if w.len() != n + 1 {
                return Err(OracleError::Invalid(format!("need {} weights, got {}", n + 1, w.len())));
            }
            if w.iter().any(|&v| !(v >= 0.0 && v.is_finite())) || w.iter().all(|&v| v == 0.0) {
                return Err(OracleError::Invalid("weights must be finite, nonnegative and not all zero".into()));
            }
            Ok(w.iter().enumerate().map(|(s, &v)| big(v).div(&binom(n, s), PREC, RM)).collect())
        }
        OraclePrior::BetaBinomial { kappa, lambda } => beta_moments(*kappa, *lambda, n),
        OraclePrior::Binomial { p } => {
            if !(0.0..=1.0).contains(p) {
                return Err(OracleError::Invalid(format!("p must lie in [0, 1], got {p}")));
            }
            let p = big(*p);
            let q = big(1.0).sub(&p, PREC, RM);
            Ok((0..=n)
                .map(|s| p.powi(s, PREC, RM).mul(&q.powi(n - s, PREC, RM), PREC, RM))
                .collect())
        }
    }
}

fn finish(num: Vec<BigFloat>, total: BigFloat) -> Result<OracleResult> {
    if total.is_zero() {
        return Err(OracleError::Invalid("marginal likelihood is zero".into()));
    }
    Ok(OracleResult {
        q: num.iter().map(|v| v.div(&total, PREC, RM)).collect(),
        marginal: total,
    })
}

/// Model selection posterior by summing over all `2ⁿ` subsets.
pub fn brute_force_q(prior: &OraclePrior, ln_psi: &[f64], ln_phi: &[f64]) -> Result<OracleResult> {
    let n = check_inputs(ln_psi, ln_phi, MAX_BRUTE_N)?;
    let mut cc = consts();
    let psi: Vec<BigFloat> = ln_psi.iter().map(|&v| exp(v, &mut cc)).collect();
    let phi: Vec<BigFloat> = ln_phi.iter().map(|&v| exp(v, &mut cc)).collect();
    drop(cc);
    let w = subset_weights(prior, n)?;

    let mut total = big(0.0);
    let mut num = vec![big(0.0); n];
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if w[size].is_zero() {
            continue;
        }
        let mut term = w[size].clone();
        for i in 0..n {
            let f = if mask >> i & 1 == 1 { &psi[i] } else { &phi[i] };
            term = term.mul(f, PREC, RM);
        }
        total = total.add(&term, PREC, RM);
        for (i, acc) in num.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                *acc = acc.add(&term, PREC, RM);
            }
        }
    }
    finish(num, total)
}

/// Elementary symmetric polynomials `e_s = Σ_{|S|=s} ∏_{i∈S} ψ_i ∏_{i∉S} φ_i`
/// over the coordinates not equal to `skip`.
fn esp(psi: &[BigFloat], phi: &[BigFloat], skip: Option<usize>) -> Vec<BigFloat> {
    let mut e = vec![big(1.0)];
    for i in (0..psi.len()).filter(|&i| Some(i) != skip) {
        let mut next = vec![big(0.0); e.len() + 1];
        for (s, v) in e.iter().enumerate() {
            next[s] = next[s].add(&v.mul(&phi[i], PREC, RM), PREC, RM);
            next[s + 1] = next[s + 1].add(&v.mul(&psi[i], PREC, RM), PREC, RM);
        }
        e = next;
    }
    e
}

/// Gauss-Legendre nodes and weights on `(0, 1)`.
fn gauss_legendre(points: usize) -> Vec<(f64, f64)> {
    let m = points;
    (0..m)
        .map(|k| {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=m {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let (p, pm1) = if m == 1 { (x, 1.0) } else { (p1, p0) };
                dp = m as f64 * (x * p - pm1) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            ((x + 1.0) / 2.0, w / 2.0)
        })
        .collect()
}

/// `∫ αˢ (1-α)ⁿ⁻ˢ dF(α)` for `s = 0..=n`.
fn mixing_moments(mixing: &Mixing<'_>, n: usize) -> Result<Vec<BigFloat>> {
    let atoms = |pts: &[(f64, f64)]| -> Result<Vec<BigFloat>> {
        if pts.iter().any(|&(a, w)| !(0.0..=1.0).contains(&a) || !(w >= 0.0 && w.is_finite())) {
            return Err(OracleError::Invalid("atoms must lie in [0, 1] with finite nonnegative weights".into()));
        }
        let mut m = vec![big(0.0); n + 1];
        for &(a, w) in pts {
            let (a, b) = (big(a), big(1.0).sub(&big(a), PREC, RM));
            let w = big(w);
            for (s, ms) in m.iter_mut().enumerate() {
                let t = a.powi(s, PREC, RM).mul(&b.powi(n - s, PREC, RM), PREC, RM);
                *ms = ms.add(&t.mul(&w, PREC, RM), PREC, RM);
            }
        }
        Ok(m)
    };
    match mixing {
        Mixing::Beta { kappa, lambda } => beta_moments(*kappa, *lambda, n),
        Mixing::Discrete { alpha, weights } => {
            if alpha.len() != weights.len() || alpha.is_empty() {
                return Err(OracleError::Invalid("atoms and weights must be nonempty and of equal length".into()));
            }
            let pts: Vec<(f64, f64)> = alpha.iter().copied().zip(weights.iter().copied()).collect();
            atoms(&pts)
        }
        Mixing::Density { density, points } => {
            if *points == 0 {
                return Err(OracleError::Invalid("need at least one quadrature point".into()));
            }
            let pts: Vec<(f64, f64)> = gauss_legendre(*points).into_iter().map(|(x, w)| (x, w * density(x))).collect();
            atoms(&pts)
        }
    }
}

/// Spike-and-slab posterior with the mixing weight integrated out.
pub fn brute_force_mixture(mixing: &Mixing<'_>, ln_psi: &[f64], ln_phi: &[f64]) -> Result<OracleResult> {
    let n = check_inputs(ln_psi, ln_phi, MAX_MIXTURE_N)?;
    let mut cc = consts();
    let psi: Vec<BigFloat> = ln_psi.iter().map(|&v| exp(v, &mut cc)).collect();
    let phi: Vec<BigFloat> = ln_phi.iter().map(|&v| exp(v, &mut cc)).collect();
    drop(cc);
    let m = mixing_moments(mixing, n)?;

    let dot = |e: &[BigFloat], shift: usize| {
        e.iter()
            .enumerate()
            .fold(big(0.0), |acc, (s, v)| acc.add(&v.mul(&m[s + shift], PREC, RM), PREC, RM))
    };
    let total = dot(&esp(&psi, &phi, None), 0);
    let num = (0..n)
        .map(|i| psi[i].mul(&dot(&esp(&psi, &phi, Some(i)), 1), PREC, RM))
        .collect();
    finish(num, total)
}

/// `π_n(s)` implied by a Beta mixing prior: `C(n, s) B(κ+s, λ+n-s) / B(κ, λ)`.
pub fn beta_binomial_pmf(kappa: f64, lambda: f64, n: usize) -> Result<Vec<f64>> {
    if n > 60 {
        return Err(OracleError::TooLarge { n, max: 60 });
    }
    Ok(beta_moments(kappa, lambda, n)?
        .iter()
        .enumerate()
        .map(|(s, v)| to_f64(&v.mul(&binom(n, s), PREC, RM)))
        .collect())
}
