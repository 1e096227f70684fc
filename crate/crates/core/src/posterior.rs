//! Marginal posterior summaries and algorithm dispatch.
//!
//! Given `q_i = Π(θ_i ≠ 0 | Y)` the marginal posterior of `θ_i` is an atom
//! of mass `1 - q_i` at zero plus `q_i` times the slab posterior
//! `g(u - Y_i) γ(u) du / ψ(Y_i)`, so means, medians and quantiles follow
//! from the slab functionals `ψ`, `ζ` and `ψ(·, u)`.

use crate::cvdv::{self, DropRow};
use crate::discretize::{self, EpsilonBound};
use crate::error::{Error, Result};
use crate::hmm::{self, MemoryMode};
use crate::lognum::{LogInterval, LogNum, LogValue};
use crate::priors::{MixingPrior, ModelSelectionPrior, PriorFamily};
use crate::slabs::{self, SlabModel};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Algorithm {
    Cvdv,
    /// Polynomial long division; always runs tracked.
    Longdiv { drop: DropRow },
    Hmm,
    Discrete { m: u32 },
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Cvdv => write!(f, "cvdv"),
            Algorithm::Longdiv { .. } => write!(f, "longdiv"),
            Algorithm::Hmm => write!(f, "hmm"),
            Algorithm::Discrete { m } => write!(f, "discrete(m={m})"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    /// `cvdv`, `longdiv`, `hmm`, `discrete` or `discrete:<m>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "cvdv" => Ok(Algorithm::Cvdv),
            "longdiv" => Ok(Algorithm::Longdiv { drop: DropRow::default() }),
            "hmm" => Ok(Algorithm::Hmm),
            "discrete" | "discretize" => Ok(Algorithm::Discrete { m: discretize::DEFAULT_M }),
            _ => match s.strip_prefix("discrete:") {
                Some(m) => m
                    .parse()
                    .ok()
                    .filter(|&m: &u32| m > 0)
                    .map(|m| Algorithm::Discrete { m })
                    .ok_or_else(|| Error::Parse(format!("bad grid parameter in {s:?}"))),
                None => Err(Error::Parse(format!("unknown algorithm {s:?}"))),
            },
        }
    }
}

/// Either prior formulation; spike-and-slab priors also induce a model
/// selection prior, the converse needs [`crate::representability`].
#[derive(Debug, Clone)]
pub enum Prior {
    ModelSelection(ModelSelectionPrior),
    SpikeSlab(MixingPrior),
}

impl Prior {
    pub fn model_selection(&self, n: usize) -> Result<ModelSelectionPrior> {
        match self {
            Prior::ModelSelection(p) => {
                if p.n() != n {
                    return Err(Error::DimensionMismatch { expected: p.n(), found: n });
                }
                Ok(p.clone())
            }
            Prior::SpikeSlab(m) => m.to_model_selection(n),
        }
    }

    /// The mixing prior, when this prior is of spike-and-slab form.
    pub fn mixing(&self) -> Option<MixingPrior> {
        match self {
            Prior::SpikeSlab(m) => Some(m.clone()),
            Prior::ModelSelection(p) => match p.family() {
                PriorFamily::BetaBinomial { kappa, lambda } if *kappa > 0.0 && *lambda > 0.0 => {
                    MixingPrior::beta(*kappa, *lambda).ok()
                }
                _ => None,
            },
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Prior::ModelSelection(p) => p.describe(),
            Prior::SpikeSlab(m) => format!("spike-slab {m:?}"),
        }
    }
}

/// Per-coordinate spike and slab density values at the observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodPair {
    pub ln_phi: f64,
    pub ln_psi: f64,
}

impl LikelihoodPair {
    pub fn from_slab(slab: &SlabModel, y: f64) -> Result<Self> {
        Ok(LikelihoodPair {
            ln_phi: slabs::ln_phi(y),
            ln_psi: slab.psi(y)?.ln(),
        })
    }

    /// From positive density values.
    pub fn from_densities(phi: f64, psi: f64) -> Result<Self> {
        if !(phi > 0.0 && psi > 0.0 && phi.is_finite() && psi.is_finite()) {
            return Err(Error::InvalidParameter(format!("densities must be positive and finite, got phi={phi}, psi={psi}")));
        }
        Ok(LikelihoodPair {
            ln_phi: phi.ln(),
            ln_psi: psi.ln(),
        })
    }
}

/// A probability with guaranteed bounds; all three coincide untracked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub point: f64,
    pub hi: f64,
}

impl Bounds {
    fn from_num<N: LogNum>(x: N) -> Self {
        Bounds {
            lo: x.lo().exp(),
            point: x.point().exp(),
            hi: x.hi().exp(),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub tracked: bool,
    pub memory: MemoryMode,
    /// Compute the discretization error constant (another `O(kn)` pass).
    pub epsilon_bound: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tracked: false,
            memory: MemoryMode::Auto,
            epsilon_bound: true,
        }
    }
}

/// Inclusion probabilities and marginal likelihood from any algorithm.
#[derive(Debug, Clone)]
pub struct InclusionOutput {
    pub q: Vec<Bounds>,
    /// `ln Q_n` bracket (under the discretized prior for `discrete`).
    pub ln_marginal: (f64, f64, f64),
    pub epsilon: Option<EpsilonBound>,
}

fn collect<N: LogNum>(q: Vec<N>, marginal: N, epsilon: Option<EpsilonBound>) -> InclusionOutput {
    InclusionOutput {
        q: q.into_iter().map(Bounds::from_num).collect(),
        ln_marginal: (marginal.lo(), marginal.point(), marginal.hi()),
        epsilon,
    }
}

/// Run `algorithm` on per-coordinate log densities.
pub fn inclusion(prior: &Prior, ln_psi: &[f64], ln_phi: &[f64], algorithm: Algorithm, opts: &Options) -> Result<InclusionOutput> {
    let n = ln_psi.len();
    if n == 0 {
        return Err(Error::InvalidParameter("no observations".into()));
    }
    macro_rules! run {
        ($n:ty) => {
            match algorithm {
                Algorithm::Cvdv => {
                    let o = cvdv::q_all_cvdv::<$n>(&prior.model_selection(n)?, ln_psi, ln_phi)?;
                    collect(o.q, o.log_marginal, None)
                }
                Algorithm::Hmm => {
                    let o = hmm::q_all_hmm::<$n>(&prior.model_selection(n)?, ln_psi, ln_phi, opts.memory)?;
                    collect(o.q, o.log_marginal, None)
                }
                Algorithm::Longdiv { drop } => {
                    let o = cvdv::q_all_longdiv(&prior.model_selection(n)?, ln_psi, ln_phi, drop)?;
                    collect(o.q, o.log_marginal, None)
                }
                Algorithm::Discrete { m } => {
                    let mixing = prior.mixing().ok_or_else(|| {
                        Error::AlgorithmMismatch(format!(
                            "the discretization needs a spike-and-slab prior, got {}",
                            prior.describe()
                        ))
                    })?;
                    let d = discretize::build(&mixing, n, m)?;
                    let o = discretize::q_all_discrete::<$n>(&d, ln_psi, ln_phi)?;
                    let eps = if opts.epsilon_bound {
                        Some(discretize::epsilon_bound(&mixing, &d)?)
                    } else {
                        None
                    };
                    collect(o.q, o.log_marginal, eps)
                }
            }
        };
    }
    Ok(if opts.tracked { run!(LogInterval) } else { run!(LogValue) })
}

/// The general model: arbitrary per-coordinate spike and slab densities.
pub fn compute_general(prior: &Prior, pairs: &[LikelihoodPair], algorithm: Algorithm) -> Result<InclusionOutput> {
    let ln_psi: Vec<f64> = pairs.iter().map(|p| p.ln_psi).collect();
    let ln_phi: Vec<f64> = pairs.iter().map(|p| p.ln_phi).collect();
    let opts = Options {
        epsilon_bound: false,
        ..Options::default()
    };
    inclusion(prior, &ln_psi, &ln_phi, algorithm, &opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub algorithm: String,
    pub y: Vec<f64>,
    pub q: Vec<f64>,
    pub q_lo: Vec<f64>,
    pub q_hi: Vec<f64>,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub selected: Vec<bool>,
    /// `ln Q_n`.
    pub log_marginal: f64,
    pub elapsed_secs: f64,
    /// Largest `q_hi - q_lo`; zero when untracked.
    pub max_width: f64,
    pub epsilon: Option<EpsilonBound>,
}

pub const SELECTION_THRESHOLD: f64 = 0.5;

impl PosteriorSummary {
    /// `u`-quantile of the marginal posterior of `θ_i`.
    pub fn quantile(&self, i: usize, u: f64, slab: &SlabModel) -> Result<f64> {
        marginal_quantile(self.q[i], self.y[i], slab, u)
    }

    pub fn selected_count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }
}

/// Full posterior summary for observations `y` under `slab`.
pub fn compute(prior: &Prior, slab: &SlabModel, y: &[f64], algorithm: Algorithm, tracked: bool) -> Result<PosteriorSummary> {
    compute_with(
        prior,
        slab,
        y,
        algorithm,
        &Options {
            tracked,
            ..Options::default()
        },
    )
}

pub fn compute_with(prior: &Prior, slab: &SlabModel, y: &[f64], algorithm: Algorithm, opts: &Options) -> Result<PosteriorSummary> {
    let start = Instant::now();
    let pairs = y
        .iter()
        .map(|&yi| LikelihoodPair::from_slab(slab, yi))
        .collect::<Result<Vec<_>>>()?;
    let ln_psi: Vec<f64> = pairs.iter().map(|p| p.ln_psi).collect();
    let ln_phi: Vec<f64> = pairs.iter().map(|p| p.ln_phi).collect();
    let out = inclusion(prior, &ln_psi, &ln_phi, algorithm, opts)?;
    let elapsed_secs = start.elapsed().as_secs_f64();

    let q: Vec<f64> = out.q.iter().map(|b| b.point.min(1.0)).collect();
    let mean = y
        .iter()
        .zip(&q)
        .zip(&ln_psi)
        .map(|((&yi, &qi), &lp)| {
            let z = slab.zeta(yi)?;
            Ok(if qi == 0.0 || z.sign == 0 {
                0.0
            } else {
                f64::from(z.sign) * (qi.ln() + z.ln_abs - lp).exp()
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let median = y
        .iter()
        .zip(&q)
        .map(|(&yi, &qi)| marginal_median(qi, yi, slab))
        .collect::<Result<Vec<f64>>>()?;
    Ok(PosteriorSummary {
        algorithm: algorithm.to_string(),
        y: y.to_vec(),
        selected: q.iter().map(|&qi| qi >= SELECTION_THRESHOLD).collect(),
        q_lo: out.q.iter().map(|b| b.lo).collect(),
        q_hi: out.q.iter().map(|b| b.hi.min(1.0)).collect(),
        max_width: out.q.iter().map(|b| b.hi.min(1.0) - b.lo).fold(0.0, f64::max),
        q,
        mean,
        median,
        log_marginal: out.ln_marginal.1,
        elapsed_secs,
        epsilon: out.epsilon,
    })
}

/// `[H⁻¹(1/(2q)) ∧ 0] + [H⁻¹(1 - 1/(2q)) ∨ 0]` with `H(u) = ψ(y, u)/ψ(y)`.
pub fn marginal_median(q: f64, y: f64, slab: &SlabModel) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("inclusion probability {q} outside [0, 1]")));
    }
    if q <= 0.5 {
        return Ok(0.0);
    }
    let left = slab.h_inverse(y, 1.0 / (2.0 * q))?.min(0.0);
    let right = slab.h_inverse(y, 1.0 - 1.0 / (2.0 * q))?.max(0.0);
    Ok(left + right)
}

/// `Π(θ_i ≤ u | Y) = (1 - q) 1{u ≥ 0} + q ψ(y, u)/ψ(y)`.
pub fn marginal_cdf(q: f64, y: f64, slab: &SlabModel, u: f64) -> Result<f64> {
    let atom = if u >= 0.0 { 1.0 - q } else { 0.0 };
    if q == 0.0 {
        return Ok(atom);
    }
    let h = if u == f64::INFINITY {
        1.0
    } else if u == f64::NEG_INFINITY {
        0.0
    } else {
        (slab.psi_partial(y, u)?.ln() - slab.psi(y)?.ln()).exp().min(1.0)
    };
    Ok(atom + q * h)
}

/// Smallest `u` with `Π(θ_i ≤ u | Y) ≥ p`.
pub fn marginal_quantile(q: f64, y: f64, slab: &SlabModel, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("quantile level {p} or probability {q} outside [0, 1]")));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    let h0 = marginal_cdf(1.0, y, slab, 0.0)?;
    if p <= q * h0 {
        slab.h_inverse(y, p / q)
    } else if p <= 1.0 - q + q * h0 {
        Ok(0.0)
    } else {
        slab.h_inverse(y, (p - (1.0 - q)) / q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(n: usize) -> Prior {
        Prior::ModelSelection(ModelSelectionPrior::new(PriorFamily::BetaBinomial { kappa: 1.0, lambda: n as f64 + 1.0 }, n).unwrap())
    }

    #[test]
    fn parse_algorithms() {
        assert_eq!("hmm".parse::<Algorithm>().unwrap(), Algorithm::Hmm);
        assert_eq!("discrete:7".parse::<Algorithm>().unwrap(), Algorithm::Discrete { m: 7 });
        assert_eq!("discrete".parse::<Algorithm>().unwrap(), Algorithm::Discrete { m: 20 });
        assert!("discrete:0".parse::<Algorithm>().is_err());
        assert!("gibbs".parse::<Algorithm>().is_err());
    }

    #[test]
    fn single_coordinate() {
        let slab = SlabModel::laplace(1.0).unwrap();
        let p = Prior::ModelSelection(ModelSelectionPrior::from_weights(&[0.5, 0.5]).unwrap());
        for alg in [Algorithm::Cvdv, Algorithm::Hmm] {
            let s = compute(&p, &slab, &[0.0], alg, false).unwrap();
            let (psi, phi) = (slab.psi(0.0).unwrap().to_real(), slabs::ln_phi(0.0).exp());
            assert!((s.q[0] - psi / (psi + phi)).abs() < 1e-15);
            assert_eq!(s.median[0], 0.0);
            assert_eq!(s.mean[0], 0.0);
        }
    }

    #[test]
    fn all_spike() {
        let p = Prior::ModelSelection(ModelSelectionPrior::from_weights(&[1.0, 0.0, 0.0, 0.0]).unwrap());
        let s = compute(&p, &SlabModel::gaussian(1.0).unwrap(), &[3.0, -5.0, 0.1], Algorithm::Hmm, false).unwrap();
        assert!(s.q.iter().all(|&q| q == 0.0));
        assert!(s.mean.iter().chain(&s.median).all(|&v| v == 0.0));
        assert_eq!(s.selected_count(), 0);
    }

    #[test]
    fn algorithms_agree() {
        let y = [0.3, -2.5, 4.0, 1.1, 0.0, -0.7, 6.2, 2.2];
        let slab = SlabModel::laplace(1.0).unwrap();
        let prior = bb(y.len());
        let base = compute(&prior, &slab, &y, Algorithm::Hmm, false).unwrap();
        for alg in [Algorithm::Cvdv, "longdiv".parse().unwrap()] {
            let s = compute(&prior, &slab, &y, alg, false).unwrap();
            for i in 0..y.len() {
                assert!((s.q[i] - base.q[i]).abs() < 1e-12);
            }
        }
        let t = compute(&prior, &slab, &y, Algorithm::Hmm, true).unwrap();
        for i in 0..y.len() {
            assert!(t.q_lo[i] <= base.q[i] && base.q[i] <= t.q_hi[i]);
        }
        assert!(t.max_width > 0.0 && t.max_width < 1e-12);
        let d = compute(&prior, &slab, &y, Algorithm::Discrete { m: 20 }, false).unwrap();
        let eps = d.epsilon.as_ref().unwrap();
        for i in 0..y.len() {
            assert!((d.q[i] - base.q[i]).abs() <= eps.q_error_bound() + 1e-12);
        }
    }

    #[test]
    fn discrete_needs_spike_slab() {
        let p = Prior::ModelSelection(ModelSelectionPrior::new(PriorFamily::SubExp { exponent: 2.0 }, 3).unwrap());
        let e = compute(&p, &SlabModel::gaussian(1.0).unwrap(), &[1.0, 2.0, 3.0], Algorithm::Discrete { m: 3 }, false);
        assert!(matches!(e, Err(Error::AlgorithmMismatch(_))));
    }

    #[test]
    fn mean_ratio_and_sign() {
        let y = [3.0, -4.0, 0.5];
        let slab = SlabModel::laplace(0.5).unwrap();
        let s = compute(&bb(3), &slab, &y, Algorithm::Hmm, false).unwrap();
        for i in 0..3 {
            let ratio = slab.zeta(y[i]).unwrap().to_real() / slab.psi(y[i]).unwrap().to_real();
            assert!((s.mean[i] / s.q[i] - ratio).abs() < 1e-12 * ratio.abs().max(1.0));
            assert!(s.mean[i].abs() <= ratio.abs());
            assert!(s.median[i] == 0.0 || s.median[i].signum() == y[i].signum());
        }
    }

    #[test]
    fn conjugate_median() {
        // slab N(0,1), Y=2: slab posterior N(1, 1/2)
        let m = marginal_median(1.0, 2.0, &SlabModel::gaussian(1.0).unwrap()).unwrap();
        assert!((m - 1.0).abs() < 1e-9);
        assert_eq!(marginal_median(0.5, 2.0, &SlabModel::gaussian(1.0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn cdf_shape_and_median_consistency() {
        let slab = SlabModel::laplace(1.0).unwrap();
        let (q, y) = (0.8, 2.5);
        assert_eq!(marginal_cdf(q, y, &slab, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(marginal_cdf(q, y, &slab, f64::NEG_INFINITY).unwrap(), 0.0);
        let jump = marginal_cdf(q, y, &slab, 0.0).unwrap() - marginal_cdf(q, y, &slab, -1e-300).unwrap();
        assert!((jump - (1.0 - q)).abs() < 1e-12);
        let med = marginal_median(q, y, &slab).unwrap();
        let f = marginal_cdf(q, y, &slab, med).unwrap();
        assert!((f - 0.5).abs() < 1e-8, "F(median) = {f}");
        for p in [0.05, 0.3, 0.5, 0.9] {
            let u = marginal_quantile(q, y, &slab, p).unwrap();
            assert!(marginal_cdf(q, y, &slab, u).unwrap() >= p - 1e-8);
        }
        assert_eq!(marginal_quantile(q, y, &slab, 0.15).unwrap(), 0.0);
    }

    #[test]
    fn uninformative_pairs_give_prior_marginal() {
        let n = 6;
        let ms = ModelSelectionPrior::new(PriorFamily::PoissonTrunc { rate: 2.0 }, n).unwrap();
        let pairs = vec![LikelihoodPair::from_densities(0.3, 0.3).unwrap(); n];
        let prior_marginal: f64 = ms.pmf().iter().enumerate().map(|(s, p)| p * s as f64 / n as f64).sum();
        for alg in [Algorithm::Cvdv, Algorithm::Hmm] {
            let o = compute_general(&Prior::ModelSelection(ms.clone()), &pairs, alg).unwrap();
            for b in &o.q {
                assert!((b.point - prior_marginal).abs() < 1e-14);
            }
        }
        assert!(LikelihoodPair::from_densities(0.0, 1.0).is_err());
    }

    #[test]
    fn general_matches_compute() {
        let y = [1.0, -0.2, 3.3];
        let slab = SlabModel::cauchy(1.0).unwrap();
        let prior = bb(3);
        let s = compute(&prior, &slab, &y, Algorithm::Hmm, false).unwrap();
        let pairs: Vec<_> = y.iter().map(|&v| LikelihoodPair::from_slab(&slab, v).unwrap()).collect();
        let g = compute_general(&prior, &pairs, Algorithm::Hmm).unwrap();
        for i in 0..3 {
            assert_eq!(g.q[i].point, s.q[i]);
        }
    }

    #[test]
    fn monotone_in_abs_y() {
        let slab = SlabModel::laplace(1.0).unwrap();
        let p = Prior::ModelSelection(ModelSelectionPrior::from_weights(&[0.7, 0.3]).unwrap());
        let mut last = 0.0;
        for k in 0..40 {
            let q = compute(&p, &slab, &[k as f64 * 0.25], Algorithm::Hmm, false).unwrap().q[0];
            assert!(q >= last);
            last = q;
        }
    }
}
