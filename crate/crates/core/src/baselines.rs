//! Approximate inference baselines: a Gibbs sampler and component-wise
//! variational Bayes for the spike-and-slab prior with `Beta(κ, λ)` mixing.

use crate::error::{Error, Result};
use crate::slabs::{self, SlabFamily, SlabModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub iterations: u64,
    pub seed: u64,
}

impl GibbsConfig {
    pub fn burn_in(&self) -> u64 {
        self.iterations / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ApproxConfig {
    Gibbs(GibbsConfig),
    Vb(VbConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxResult {
    pub q: Vec<f64>,
    pub elapsed_secs: f64,
    pub config: ApproxConfig,
    /// Iterations run (VB sweeps or Gibbs iterations).
    pub iterations: u64,
    /// False when VB stopped at `max_iter` before meeting its tolerance.
    pub converged: bool,
    /// Evidence lower bound after every VB sweep.
    pub elbo: Vec<f64>,
}

fn check_beta(kappa: f64, lambda: f64) -> Result<()> {
    if kappa > 0.0 && lambda > 0.0 && kappa.is_finite() && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("beta parameters must be positive, got ({kappa}, {lambda})")))
    }
}

/// Gibbs sampler alternating `B | α, Y` and `α | B`, with `θ` integrated
/// out. `q̃_i` is the post-burn-in frequency of `B_i = 1`.
pub fn gibbs(y: &[f64], kappa: f64, lambda: f64, slab: &SlabModel, cfg: GibbsConfig) -> Result<ApproxResult> {
    check_beta(kappa, lambda)?;
    if cfg.iterations < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 iterations, got {}", cfg.iterations)));
    }
    let start = Instant::now();
    let n = y.len();
    // log odds of the slab against the spike
    let r = y
        .iter()
        .map(|&v| Ok(slab.psi(v)?.ln() - slabs::ln_phi(v)))
        .collect::<Result<Vec<f64>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut alpha = kappa / (kappa + lambda);
    let mut counts = vec![0u64; n];
    let mut b = vec![false; n];
    for it in 0..cfg.iterations {
        let logit_a = alpha.ln() - (-alpha).ln_1p();
        let mut ones = 0usize;
        for i in 0..n {
            let p = 1.0 / (1.0 + (-(logit_a + r[i])).exp());
            b[i] = rng.random::<f64>() < p;
            ones += b[i] as usize;
        }
        let post = Beta::new(kappa + ones as f64, lambda + (n - ones) as f64)
            .map_err(|e| Error::InvalidParameter(format!("beta update: {e}")))?;
        alpha = post.sample(&mut rng);
        if it >= cfg.burn_in() {
            for (c, &bi) in counts.iter_mut().zip(&b) {
                *c += bi as u64;
            }
        }
    }
    let kept = (cfg.iterations - cfg.burn_in()) as f64;
    Ok(ApproxResult {
        q: counts.iter().map(|&c| c as f64 / kept).collect(),
        elapsed_secs: start.elapsed().as_secs_f64(),
        config: ApproxConfig::Gibbs(cfg),
        iterations: cfg.iterations,
        converged: true,
        elbo: Vec::new(),
    })
}

/// How the variational family treats the mixing weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VbVariant {
    /// Prior inclusion odds fixed at `κ/λ`; no factor for `α`.
    #[default]
    FixedOdds,
    /// A `Beta(a, b)` factor `q(α)` updated after every sweep.
    MeanField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VbConfig {
    pub tol: f64,
    pub max_iter: u64,
    pub variant: VbVariant,
}

impl Default for VbConfig {
    fn default() -> Self {
        VbConfig {
            tol: 1e-10,
            max_iter: 1000,
            variant: VbVariant::default(),
        }
    }
}

/// `ψ(x) = d/dx ln Γ(x)` for `x > 0`.
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let f = 1.0 / (x * x);
    acc + x.ln() - 0.5 / x
        - f * (1.0 / 12.0 - f * (1.0 / 120.0 - f * (1.0 / 252.0 - f * (1.0 / 240.0 - f * (1.0 / 132.0 - f * 691.0 / 32760.0)))))
}

fn entropy_bernoulli(g: f64) -> f64 {
    let h = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    h(g) + h(1.0 - g)
}

/// Component-wise mean-field VB over `q(B_i, θ_i) = γ_i N(μ_i, s_i²) +
/// (1 - γ_i) δ_0` with a Gaussian `N(0, v)` slab and unit noise.
///
/// Starts from `γ_i = κ/(κ+λ)` and `μ_i = Y_i`; each sweep updates
/// `s_i`, `μ_i`, `γ_i` in coordinate order, then `q(α)` if present, and
/// stops once the lower bound moves by less than `tol`.
pub fn vb_componentwise(y: &[f64], kappa: f64, lambda: f64, slab: &SlabModel, cfg: VbConfig) -> Result<ApproxResult> {
    check_beta(kappa, lambda)?;
    let v = match slab {
        SlabModel::Builtin(SlabFamily::Gaussian { v }) => *v,
        _ => return Err(Error::InvalidParameter(format!("variational Bayes needs a Gaussian slab, got {}", slab.name()))),
    };
    if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(Error::InvalidParameter("vb needs tol > 0 and max_iter >= 1".into()));
    }
    let start = Instant::now();
    let n = y.len();
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let mut gamma = vec![kappa / (kappa + lambda); n];
    let mut mu = y.to_vec();
    let mut s2 = vec![v / (1.0 + v); n];
    let (mut a, mut b) = (kappa, lambda);
    let prior_logits = |a: f64, b: f64| match cfg.variant {
        VbVariant::FixedOdds => ((kappa / (kappa + lambda)).ln(), (lambda / (kappa + lambda)).ln()),
        VbVariant::MeanField => (digamma(a) - digamma(a + b), digamma(b) - digamma(a + b)),
    };
    // E ln p(Y_i, θ_i | B_i = 1) + entropy of N(μ, s²)
    let slab_term = |yi: f64, m: f64, s: f64| {
        -0.5 * ln2pi - 0.5 * ((yi - m).powi(2) + s) - 0.5 * (ln2pi + v.ln()) - (m * m + s) / (2.0 * v)
            + 0.5 * (ln2pi + 1.0 + s.ln())
    };
    let elbo = |gamma: &[f64], mu: &[f64], s2: &[f64], a: f64, b: f64| {
        let (ea, eb) = prior_logits(a, b);
        let mut total = 0.0;
        for i in 0..n {
            let g = gamma[i];
            let on = if g > 0.0 { g * (slab_term(y[i], mu[i], s2[i]) + ea) } else { 0.0 };
            total += on + (1.0 - g) * (slabs::ln_phi(y[i]) + eb) + entropy_bernoulli(g);
        }
        if cfg.variant == VbVariant::MeanField {
            use crate::priors::ln_beta;
            total += ln_beta(a, b) - ln_beta(kappa, lambda) + (kappa - a) * ea + (lambda - b) * eb;
        }
        total
    };

    let mut trace = vec![elbo(&gamma, &mu, &s2, a, b)];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < cfg.max_iter {
        sweeps += 1;
        let (ea, eb) = prior_logits(a, b);
        for i in 0..n {
            s2[i] = v / (1.0 + v);
            mu[i] = y[i] * v / (1.0 + v);
            let logit = ea - eb + slab_term(y[i], mu[i], s2[i]) - slabs::ln_phi(y[i]);
            gamma[i] = 1.0 / (1.0 + (-logit).exp());
        }
        if cfg.variant == VbVariant::MeanField {
            let ones: f64 = gamma.iter().sum();
            a = kappa + ones;
            b = lambda + n as f64 - ones;
        }
        let e = elbo(&gamma, &mu, &s2, a, b);
        let last = *trace.last().expect("trace starts nonempty");
        trace.push(e);
        if (e - last).abs() < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(ApproxResult {
        q: gamma,
        elapsed_secs: start.elapsed().as_secs_f64(),
        config: ApproxConfig::Vb(cfg),
        iterations: sweeps,
        converged,
        elbo: trace,
    })
}

/// `max_i |q_i - q̃_i|`.
pub fn approx_error(q_exact: &[f64], q_approx: &[f64]) -> Result<f64> {
    if q_exact.len() != q_approx.len() {
        return Err(Error::DimensionMismatch {
            expected: q_exact.len(),
            found: q_approx.len(),
        });
    }
    Ok(q_exact
        .iter()
        .zip(q_approx)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
