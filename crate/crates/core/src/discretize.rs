//! Spike-and-slab posteriors by discretizing the mixing weight `α`.
//!
//! The grid is uniform in `β = arcsin √α`, where the Bernoulli Fisher
//! information is constant: `k = 2(m+1)⌈√n⌉ + 1` points
//! `β_j = (2j - 1)δ/2` with `δ = π/(2k)`. Conditional on `α` the
//! coordinates are independent, so the grid posterior costs `O(kn)` and
//! every `q̃_i` another `O(k)`.
//!
//! A `Beta(κ, λ)` mixing prior is handled by reading it as the posterior
//! of `Beta(1/2, 1/2)` after `κ - 1/2` fake ones and `λ - 1/2` fake zeros,
//! discretized at the effective sample size `n' = n + κ + λ - 1`.

use crate::error::{Error, Result};
use crate::lognum::round::{self, Dir};
use crate::lognum::{ln_sum, LogNum};
use crate::priors::MixingPrior;
use crate::quad::{self, QuadConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_M: u32 = 20;

/// Smallest integer `r` with `r² ≥ x`.
pub fn ceil_sqrt(x: f64) -> u64 {
    if x <= 0.0 {
        return 0;
    }
    let mut r = x.sqrt().ceil() as u64;
    while r > 0 && ((r - 1) as f64) * ((r - 1) as f64) >= x {
        r -= 1;
    }
    while (r as f64) * (r as f64) < x {
        r += 1;
    }
    r
}

/// A log quantity with a guaranteed bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracketed {
    pub lo: f64,
    pub point: f64,
    pub hi: f64,
}

impl Bracketed {
    fn get<N: LogNum>(&self) -> N {
        N::bracket(self.lo, self.point, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationGrid {
    pub m: u32,
    pub k: usize,
    pub delta: f64,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `ln α_j = 2 ln sin β_j`.
    pub ln_alpha: Vec<Bracketed>,
    /// `ln(1 - α_j) = 2 ln cos β_j`.
    pub ln_1m_alpha: Vec<Bracketed>,
    /// Sample size the grid was sized for (`n'` under the beta fast-forward).
    pub n_eff: f64,
    pub n: usize,
}

impl DiscretizationGrid {
    /// Grid for `n` observations; with `beta = Some((κ, λ))` it is sized for
    /// `n' = n + κ + λ - 1`.
    pub fn new(n: usize, m: u32, beta: Option<(f64, f64)>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter(format!("grid needs n >= 1 and m >= 1, got n={n}, m={m}")));
        }
        let n_eff = match beta {
            Some((kappa, lambda)) => {
                if !(kappa >= 0.5 && lambda >= 0.5) || !kappa.is_finite() || !lambda.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "beta fast-forward needs kappa, lambda >= 1/2, got ({kappa}, {lambda})"
                    )));
                }
                n as f64 + kappa + lambda - 1.0
            }
            None => n as f64,
        };
        let k = 2 * (m as usize + 1) * ceil_sqrt(n_eff) as usize + 1;
        let delta = PI / (2.0 * k as f64);
        // π is not a double: PI < π < next_up(PI)
        let (pi_lo, pi_hi) = (PI, PI.next_up());
        let four_k = 4.0 * k as f64;
        let mut beta_pts = Vec::with_capacity(k);
        let mut alpha = Vec::with_capacity(k);
        let mut ln_alpha = Vec::with_capacity(k);
        let mut ln_1m_alpha = Vec::with_capacity(k);
        for j in 1..=k {
            let odd = (2 * j - 1) as f64;
            let b = odd * delta / 2.0;
            let b_lo = round::div(round::mul(odd, pi_lo, Dir::Down), four_k, Dir::Down);
            let b_hi = round::div(round::mul(odd, pi_hi, Dir::Up), four_k, Dir::Up);
            let (s, c) = b.sin_cos();
            beta_pts.push(b);
            alpha.push(s * s);
            // sin increases and cos decreases on (0, π/2)
            ln_alpha.push(Bracketed {
                lo: 2.0 * round::ln(round::sin(b_lo, Dir::Down), Dir::Down),
                point: 2.0 * s.ln(),
                hi: 2.0 * round::ln(round::sin(b_hi, Dir::Up), Dir::Up),
            });
            ln_1m_alpha.push(Bracketed {
                lo: 2.0 * round::ln(round::cos(b_hi, Dir::Down), Dir::Down),
                point: 2.0 * c.ln(),
                hi: 2.0 * round::ln(round::cos(b_lo, Dir::Up), Dir::Up),
            });
        }
        Ok(DiscretizationGrid {
            m,
            k,
            delta,
            beta: beta_pts,
            alpha,
            ln_alpha,
            ln_1m_alpha,
            n_eff,
            n,
        })
    }

    /// `α` at the `β`-bin edge `e δ`, `e = 0..=k`.
    fn edge_beta(&self, e: usize) -> f64 {
        e as f64 * self.delta
    }
}

/// How the grid weights were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightSource {
    /// Mass of each `β`-bin under the mixing prior.
    Binned,
    /// Fake-observation posterior of the uniform `β`-grid prior.
    FastForward { kappa: f64, lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMixingPrior {
    pub grid: DiscretizationGrid,
    /// `ln w_j`, normalized.
    pub ln_w: Vec<f64>,
    pub source: WeightSource,
}

impl DiscreteMixingPrior {
    fn weights<N: LogNum>(&self) -> Result<Vec<N>> {
        match self.source {
            WeightSource::Binned => Ok(self.ln_w.iter().map(|&w| N::exact(w)).collect()),
            WeightSource::FastForward { kappa, lambda } => fastforward_weights::<N>(kappa, lambda, &self.grid),
        }
    }
}

/// Bin masses `Λ([α(β_j - δ/2), α(β_j + δ/2)])`, integrated in the `β`
/// scale where `dΛ = λ(sin² β) sin 2β dβ` is bounded for `κ, λ ≥ 1/2`.
///
/// Point masses half-way between grid points do not arise for densities;
/// a caller-supplied atom would go to the left neighbour.
pub fn discretize_mixing(prior: &MixingPrior, grid: &DiscretizationGrid) -> Result<DiscreteMixingPrior> {
    let ln_f = |b: f64| -> f64 {
        let (s, c) = b.sin_cos();
        if s <= 0.0 || c <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match prior {
            // sin² β rounds to 1 near the right edge; stay in β
            MixingPrior::Beta { kappa, lambda } => {
                std::f64::consts::LN_2 + (2.0 * kappa - 1.0) * s.ln() + (2.0 * lambda - 1.0) * c.ln()
                    - crate::priors::ln_beta(*kappa, *lambda)
            }
            MixingPrior::Density { .. } => {
                let a = s * s;
                if a >= 1.0 {
                    return f64::NEG_INFINITY;
                }
                prior.ln_density(a) + (2.0 * s * c).ln()
            }
        }
    };
    let ln_w = (0..grid.k)
        .into_par_iter()
        .map(|j| {
            let (a, b) = (grid.edge_beta(j), grid.edge_beta(j + 1));
            let shift = ln_f(grid.beta[j]);
            let shift = if shift.is_finite() { shift } else { 0.0 };
            let f = |t: f64| {
                let v = (ln_f(t) - shift).exp();
                if v.is_nan() { 0.0 } else { v }
            };
            let v = quad::integrate(
                &f,
                &[a, b],
                QuadConfig {
                    abs_tol: 1e-14 * (b - a),
                    ..QuadConfig::default()
                },
            )?;
            Ok(if v > 0.0 { v.ln() + shift } else { f64::NEG_INFINITY })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = ln_sum(&ln_w);
    if !total.is_finite() {
        return Err(Error::Numerical {
            what: "mixing prior bin masses",
            achieved: total,
        });
    }
    Ok(DiscreteMixingPrior {
        grid: grid.clone(),
        ln_w: ln_w.into_iter().map(|w| w - total).collect(),
        source: WeightSource::Binned,
    })
}

fn fastforward_weights<N: LogNum>(kappa: f64, lambda: f64, grid: &DiscretizationGrid) -> Result<Vec<N>> {
    let raw: Vec<N> = (0..grid.k)
        .map(|j| {
            let a = grid.ln_alpha[j].get::<N>().powf(kappa - 0.5);
            let b = grid.ln_1m_alpha[j].get::<N>().powf(lambda - 0.5);
            a.mul(b)
        })
        .collect();
    let total = N::sum(raw.iter().copied());
    raw.into_iter().map(|w| w.div(total)).collect()
}

/// `w_j ∝ α_j^{κ-1/2} (1 - α_j)^{λ-1/2}` on a grid built for `n'`.
pub fn beta_fastforward(kappa: f64, lambda: f64, grid: &DiscretizationGrid) -> Result<DiscreteMixingPrior> {
    if !(kappa >= 0.5 && lambda >= 0.5) {
        return Err(Error::InvalidParameter(format!("fast-forward needs kappa, lambda >= 1/2, got ({kappa}, {lambda})")));
    }
    let expected = grid.n as f64 + kappa + lambda - 1.0;
    if grid.n_eff != expected {
        return Err(Error::InvalidParameter(format!(
            "grid sized for n'={} but kappa, lambda imply n'={expected}",
            grid.n_eff
        )));
    }
    let ln_w = fastforward_weights::<crate::LogValue>(kappa, lambda, grid)?
        .into_iter()
        .map(|w| w.ln())
        .collect();
    Ok(DiscreteMixingPrior {
        grid: grid.clone(),
        ln_w,
        source: WeightSource::FastForward { kappa, lambda },
    })
}

/// Build the default discretized prior for a mixing prior: the fast-forward
/// for Beta priors with `κ, λ ≥ 1/2`, bin masses otherwise.
pub fn build(prior: &MixingPrior, n: usize, m: u32) -> Result<DiscreteMixingPrior> {
    match prior {
        MixingPrior::Beta { kappa, lambda } if *kappa >= 0.5 && *lambda >= 0.5 => {
            let grid = DiscretizationGrid::new(n, m, Some((*kappa, *lambda)))?;
            beta_fastforward(*kappa, *lambda, &grid)
        }
        _ => discretize_mixing(prior, &DiscretizationGrid::new(n, m, None)?),
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteOutput<N> {
    pub q: Vec<N>,
    /// Marginal likelihood under the discretized prior.
    pub log_marginal: N,
    /// Grid posterior `Π̃(α_j | Y)`.
    pub grid_posterior: Vec<N>,
}

/// `q̃_{n,i}` for all coordinates in `O(kn)`.
pub fn q_all_discrete<N: LogNum>(dprior: &DiscreteMixingPrior, ln_psi: &[f64], ln_phi: &[f64]) -> Result<DiscreteOutput<N>> {
    let grid = &dprior.grid;
    crate::check_likelihoods(grid.n, ln_psi, ln_phi)?;
    let w = dprior.weights::<N>()?;
    let psi: Vec<N> = ln_psi.iter().map(|&x| N::exact(x)).collect();
    let phi: Vec<N> = ln_phi.iter().map(|&x| N::exact(x)).collect();
    let la: Vec<N> = grid.ln_alpha.iter().map(Bracketed::get).collect();
    let lb: Vec<N> = grid.ln_1m_alpha.iter().map(Bracketed::get).collect();

    // w_j ∏_i ((1-α_j) φ_i + α_j ψ_i)
    let joint: Vec<N> = (0..grid.k)
        .into_par_iter()
        .map(|j| {
            psi.iter()
                .zip(&phi)
                .fold(w[j], |acc, (&p, &f)| acc.mul(lb[j].mul(f).add(la[j].mul(p))))
        })
        .collect();
    let log_marginal = N::sum(joint.iter().copied());
    let post = joint
        .iter()
        .map(|&x| x.div(log_marginal))
        .collect::<Result<Vec<_>>>()?;

    let q = (0..grid.n)
        .into_par_iter()
        .map(|i| {
            let mut acc = N::zero();
            for j in 0..grid.k {
                let slab = la[j].mul(psi[i]);
                let mix = lb[j].mul(phi[i]).add(slab);
                acc = acc.add(post[j].mul(slab.div(mix)?));
            }
            Ok(acc.min_one())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteOutput {
        q,
        log_marginal,
        grid_posterior: post,
    })
}

/// Numeric approximation constants for a discretized prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBound {
    /// Tightest `ε` with `1 - ε ≤ Π(B=b)/Π̃(B=b) ≤ 1 + ε` over all `s`.
    pub epsilon: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Under the beta fast-forward: the tightest `ε` of the underlying
    /// `Beta(1/2, 1/2)` grid over every ratio the construction uses.
    pub epsilon_base: Option<f64>,
    /// `2 ε_base / (1 - ε_base)`.
    pub epsilon_prime: Option<f64>,
}

impl EpsilonBound {
    /// The reported bound: `ε'` under the fast-forward, `ε` otherwise.
    pub fn reported(&self) -> f64 {
        self.epsilon_prime.unwrap_or(self.epsilon)
    }

    /// Largest `|q_i - q̃_i|` consistent with the posterior ratio bound
    /// `(1-ε)/(1+ε) ≤ Π/Π̃ ≤ (1+ε)/(1-ε)` on the tightest ratio range.
    pub fn q_error_bound(&self) -> f64 {
        let spread = self.max_ratio / self.min_ratio;
        (spread - 1.0).max(1.0 - 1.0 / spread)
    }
}

/// `ln P_α(N, ᾱ) = N ᾱ ln α + N (1 - ᾱ) ln(1 - α)` with `0 · ln 0 = 0`.
fn ln_bernoulli(ones: f64, zeros: f64, ln_a: f64, ln_1m_a: f64) -> f64 {
    let a = if ones == 0.0 { 0.0 } else { ones * ln_a };
    let b = if zeros == 0.0 { 0.0 } else { zeros * ln_1m_a };
    a + b
}

fn ln_discrete_mass(ones: f64, zeros: f64, grid: &DiscretizationGrid, ln_w: &[f64]) -> f64 {
    let terms: Vec<f64> = (0..grid.k)
        .map(|j| ln_w[j] + ln_bernoulli(ones, zeros, grid.ln_alpha[j].point, grid.ln_1m_alpha[j].point))
        .collect();
    ln_sum(&terms)
}

/// Maximize and minimize `∫ P_α dΛ / Σ_j P_{α_j} Λ̃(α_j)` over `ᾱ = s/n`.
pub fn epsilon_bound(prior: &MixingPrior, dprior: &DiscreteMixingPrior) -> Result<EpsilonBound> {
    let grid = &dprior.grid;
    let n = grid.n;
    let ln_ratios = (0..=n)
        .into_par_iter()
        .map(|s| {
            let exact = prior.ln_mass_integral(s, n)?;
            let approx = ln_discrete_mass(s as f64, (n - s) as f64, grid, &dprior.ln_w);
            Ok(exact - approx)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (lo, hi) = min_max(&ln_ratios);
    let (min_ratio, max_ratio) = (lo.exp(), hi.exp());
    let epsilon = (max_ratio - 1.0).max(1.0 - min_ratio);

    let (epsilon_base, epsilon_prime) = match dprior.source {
        WeightSource::FastForward { kappa, lambda } => {
            // Beta(1/2, 1/2) against the uniform grid prior, at every
            // (sample size, ones) pair the construction divides through.
            let uniform = vec![-(grid.k as f64).ln(); grid.k];
            let half = crate::priors::ln_beta(0.5, 0.5);
            let base_ratio = |ones: f64, zeros: f64| {
                let exact = crate::priors::ln_beta(ones + 0.5, zeros + 0.5) - half;
                exact - ln_discrete_mass(ones, zeros, grid, &uniform)
            };
            let mut pairs: Vec<(f64, f64)> = (0..=n)
                .map(|s| (s as f64 + kappa - 0.5, (n - s) as f64 + lambda - 0.5))
                .collect();
            pairs.push((kappa - 0.5, lambda - 0.5));
            let base: Vec<f64> = pairs.par_iter().map(|&(a, b)| base_ratio(a, b)).collect();
            let (blo, bhi) = min_max(&base);
            let eb = (bhi.exp() - 1.0).max(1.0 - blo.exp());
            (Some(eb), Some(2.0 * eb / (1.0 - eb)))
        }
        WeightSource::Binned => (None, None),
    };
    Ok(EpsilonBound {
        epsilon,
        min_ratio,
        max_ratio,
        epsilon_base,
        epsilon_prime,
    })
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lognum::{LogInterval, LogValue};

    #[test]
    fn grid_sizes() {
        let g = DiscretizationGrid::new(100, 20, None).unwrap();
        assert_eq!(g.k, 421);
        assert_eq!(g.delta, PI / 842.0);
        let g = DiscretizationGrid::new(100, 20, Some((1.0, 101.0))).unwrap();
        assert_eq!(g.n_eff, 201.0);
        assert_eq!(g.k, 631);
        assert_eq!(ceil_sqrt(201.0), 15);
        assert_eq!(ceil_sqrt(225.0), 15);
        assert_eq!(ceil_sqrt(225.5), 16);
    }

    #[test]
    fn grid_shape() {
        let g = DiscretizationGrid::new(50, 3, None).unwrap();
        assert_eq!(g.k % 2, 1);
        assert_eq!(g.beta[0], g.delta / 2.0);
        assert!((g.beta[g.k - 1] - (PI / 2.0 - g.delta / 2.0)).abs() < 1e-15);
        for j in 0..g.k {
            assert_eq!(g.beta[j], (2 * j + 1) as f64 * g.delta / 2.0);
            assert!(g.alpha[j] > 0.0 && g.alpha[j] < 1.0);
            assert!(g.ln_alpha[j].lo <= g.ln_alpha[j].point && g.ln_alpha[j].point <= g.ln_alpha[j].hi);
            assert!(g.ln_1m_alpha[j].lo <= g.ln_1m_alpha[j].point && g.ln_1m_alpha[j].point <= g.ln_1m_alpha[j].hi);
            if j > 0 {
                assert!(g.alpha[j] > g.alpha[j - 1]);
            }
        }
    }

    #[test]
    fn arcsine_prior_bins_are_uniform() {
        let g = DiscretizationGrid::new(30, 5, None).unwrap();
        let d = discretize_mixing(&MixingPrior::beta(0.5, 0.5).unwrap(), &g).unwrap();
        for w in &d.ln_w {
            assert!((w + (g.k as f64).ln()).abs() < 1e-12);
        }
        let ff = beta_fastforward(0.5, 0.5, &DiscretizationGrid::new(30, 5, Some((0.5, 0.5))).unwrap()).unwrap();
        for w in &ff.ln_w {
            assert!((w + (g.k as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_prior_bins_are_lebesgue() {
        let g = DiscretizationGrid::new(20, 2, None).unwrap();
        let d = discretize_mixing(&MixingPrior::beta(1.0, 1.0).unwrap(), &g).unwrap();
        for j in 0..g.k {
            let a = (j as f64 * g.delta).sin().powi(2);
            let b = ((j + 1) as f64 * g.delta).sin().powi(2);
            assert!((d.ln_w[j].exp() - (b - a)).abs() < 1e-14);
        }
        assert!(ln_sum(&d.ln_w).abs() < 1e-13);
    }

    #[test]
    fn fastforward_uniform_beta() {
        let g = DiscretizationGrid::new(20, 2, Some((1.0, 1.0))).unwrap();
        let d = beta_fastforward(1.0, 1.0, &g).unwrap();
        let raw: Vec<f64> = g.alpha.iter().map(|a| (a * (1.0 - a)).sqrt()).collect();
        let total: f64 = raw.iter().sum();
        for j in 0..g.k {
            assert!((d.ln_w[j].exp() - raw[j] / total).abs() < 1e-15);
        }
        assert!(beta_fastforward(1.0, 2.0, &g).is_err());
    }

    #[test]
    fn single_point_grid_limit() {
        // with all weight on one grid point the posterior is the fixed-α one
        let g = DiscretizationGrid::new(3, 1, None).unwrap();
        let j = g.k / 2;
        let mut ln_w = vec![f64::NEG_INFINITY; g.k];
        ln_w[j] = 0.0;
        let d = DiscreteMixingPrior {
            grid: g.clone(),
            ln_w,
            source: WeightSource::Binned,
        };
        let (lpsi, lphi) = (vec![-1.0, -2.0, -0.5], vec![-1.5, -1.0, -4.0]);
        let out = q_all_discrete::<LogValue>(&d, &lpsi, &lphi).unwrap();
        let a = g.alpha[j];
        for i in 0..3 {
            let (p, f) = (lpsi[i].exp(), lphi[i].exp());
            let q = a * p / ((1.0 - a) * f + a * p);
            assert!((out.q[i].to_real() - q).abs() < 1e-14);
        }
    }

    #[test]
    fn tracked_contains_point() {
        let n = 30;
        let prior = MixingPrior::beta(1.0, n as f64 + 1.0).unwrap();
        let d = build(&prior, n, 4).unwrap();
        let lpsi: Vec<f64> = (0..n).map(|i| -1.5 - (i as f64).sin()).collect();
        let lphi: Vec<f64> = (0..n).map(|i| -0.92 - (i as f64 * 0.3).cos().powi(2) * 4.0).collect();
        let a = q_all_discrete::<LogValue>(&d, &lpsi, &lphi).unwrap();
        let b = q_all_discrete::<LogInterval>(&d, &lpsi, &lphi).unwrap();
        for (x, y) in a.q.iter().zip(&b.q) {
            assert!(y.contains(x.ln()));
            assert!(y.linear_width() < 1e-11);
        }
    }

    #[test]
    fn epsilon_shrinks_with_m() {
        let n = 60;
        let prior = MixingPrior::beta(1.0, n as f64 + 1.0).unwrap();
        let e10 = epsilon_bound(&prior, &build(&prior, n, 10).unwrap()).unwrap();
        let e20 = epsilon_bound(&prior, &build(&prior, n, 20).unwrap()).unwrap();
        assert!(e20.epsilon <= e10.epsilon);
        assert!(e20.reported() <= e10.reported());
        for e in [&e10, &e20] {
            assert!(e.min_ratio > 0.0 && e.max_ratio.is_finite());
            assert!(e.epsilon <= e.reported() + 1e-15);
            let eb = e.epsilon_base.unwrap();
            assert_eq!(e.epsilon_prime.unwrap(), 2.0 * eb / (1.0 - eb));
        }
    }

    #[test]
    fn binned_density_prior_epsilon() {
        let n = 40;
        let prior = MixingPrior::density("beta(2,2)", |a: f64| (6.0 * a * (1.0 - a)).ln(), Some(1.0)).unwrap();
        let d = build(&prior, n, 10).unwrap();
        assert!(ln_sum(&d.ln_w).abs() < 1e-12);
        let e = epsilon_bound(&prior, &d).unwrap();
        assert!(e.epsilon < 0.1 && e.epsilon_prime.is_none());
    }
}
