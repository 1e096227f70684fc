//! Polynomial-coefficient algorithm for model selection priors.
//!
//! With `Ψ_i = ψ(Y_i)` and `Φ_i = φ(Y_i)`, the marginal likelihood is
//!
//! ```text
//! Q_n = Σ_s π(s)/C(n,s) · C_s(Ψ, Φ),
//! ```
//!
//! where `C_s(a, b)` is the coefficient of `Z^s` in `∏ (a_i Z + b_i)`. The
//! numerator of `q_i` uses the same sum with `Φ_i` replaced by zero, which
//! costs `O(n²)` per coordinate and `O(n³)` overall.
//!
//! [`q_all_longdiv`] recovers each reduced polynomial from the full one by
//! dividing off a single factor in `O(n)`. In exact arithmetic this is an
//! `O(n²)` algorithm; in floating point the repeated subtractions are
//! unstable, and the tracked intervals show it.

use crate::error::Result;
use crate::lognum::{LogInterval, LogNum};
use crate::priors::ModelSelectionPrior;
use rayon::prelude::*;

/// Coefficients of `∏_i (a_i Z + b_i)`, lowest degree first.
pub fn poly_coeffs<N: LogNum>(a: &[N], b: &[N]) -> Vec<N> {
    assert_eq!(a.len(), b.len());
    let mut c = Vec::with_capacity(a.len() + 1);
    c.push(N::one());
    for (&ai, &bi) in a.iter().zip(b) {
        multiply_linear(&mut c, ai, bi);
    }
    c
}

/// In place `c(Z) ← c(Z) (a Z + b)`.
#[inline]
fn multiply_linear<N: LogNum>(c: &mut Vec<N>, a: N, b: N) {
    let d = c.len();
    c.push(c[d - 1].mul(a));
    for s in (1..d).rev() {
        c[s] = c[s].mul(b).add(c[s - 1].mul(a));
    }
    c[0] = c[0].mul(b);
}

/// Output of the polynomial algorithms.
#[derive(Debug, Clone)]
pub struct CvdvOutput<N> {
    pub q: Vec<N>,
    pub log_marginal: N,
}

fn weights<N: LogNum>(prior: &ModelSelectionPrior) -> Vec<N> {
    prior.ln_subset_weights().into_iter().map(N::exact).collect()
}

fn inputs<N: LogNum>(ln_psi: &[f64], ln_phi: &[f64]) -> (Vec<N>, Vec<N>) {
    (
        ln_psi.iter().map(|&x| N::exact(x)).collect(),
        ln_phi.iter().map(|&x| N::exact(x)).collect(),
    )
}

fn weighted_sum<N: LogNum>(w: &[N], c: &[N], shift: usize) -> N {
    N::sum(c.iter().enumerate().map(|(s, &cs)| w[s + shift].mul(cs)))
}

/// `Q_n = Σ_s π(s)/C(n,s) · C_s(Ψ, Φ)`.
pub fn marginal_likelihood<N: LogNum>(prior: &ModelSelectionPrior, ln_psi: &[f64], ln_phi: &[f64]) -> Result<N> {
    crate::check_likelihoods(prior.n(), ln_psi, ln_phi)?;
    let (psi, phi) = inputs::<N>(ln_psi, ln_phi);
    let c = poly_coeffs(&psi, &phi);
    Ok(weighted_sum(&weights::<N>(prior), &c, 0))
}

/// All `q_{n,i}` by the cubic-time polynomial algorithm.
///
/// The reduced polynomial `∏_{j≠i}` is built from the stored prefix
/// product `∏_{j<i}` times the factors `j > i`, which saves about a third
/// of the work over rebuilding it from scratch.
pub fn q_all_cvdv<N: LogNum>(prior: &ModelSelectionPrior, ln_psi: &[f64], ln_phi: &[f64]) -> Result<CvdvOutput<N>> {
    crate::check_likelihoods(prior.n(), ln_psi, ln_phi)?;
    let n = prior.n();
    let (psi, phi) = inputs::<N>(ln_psi, ln_phi);
    let w = weights::<N>(prior);

    let mut prefixes = Vec::with_capacity(n + 1);
    let mut c = vec![N::one()];
    for i in 0..n {
        prefixes.push(c.clone());
        multiply_linear(&mut c, psi[i], phi[i]);
    }
    let q_n = weighted_sum(&w, &c, 0);
    drop(c);

    let q = prefixes
        .into_par_iter()
        .enumerate()
        .map(|(i, mut d)| {
            d.reserve(n - i);
            for j in i + 1..n {
                multiply_linear(&mut d, psi[j], phi[j]);
            }
            // C_s(Ψ, Φ^i) = Ψ_i d_{s-1}
            let num = psi[i].mul(weighted_sum(&w, &d, 1));
            num.div(q_n).map(LogNum::min_one)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CvdvOutput { q, log_marginal: q_n })
}

/// Which equation of the overdetermined division system is discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropRow {
    /// Drop the constant-term equation; back substitution from the top.
    /// This is ordinary long division.
    #[default]
    First,
    /// Drop the leading-coefficient equation; forward substitution.
    Last,
    /// Drop the middle equation; substitute inward from both ends.
    Middle,
}

/// Quotient `x` of `c(Z) / (a Z + b)` for a polynomial known to be
/// divisible, solved with one row of the banded system dropped.
pub fn divide_linear(c: &[LogInterval], a: LogInterval, b: LogInterval, drop: DropRow) -> Result<Vec<LogInterval>> {
    let n = c.len() - 1;
    let mut x = vec![LogInterval::ZERO; n];
    if n == 0 {
        return Ok(x);
    }
    let split = match drop {
        DropRow::First => 0,
        DropRow::Last => n,
        DropRow::Middle => n / 2,
    };
    // rows j > split: c_j = a x_{j-1} + b x_j, solved for x_{j-1} top down
    for j in (split + 1..=n).rev() {
        let rhs = if j == n { c[n] } else { LogNum::sub(c[j], b.mul(x[j]))? };
        x[j - 1] = LogNum::div(rhs, a)?;
    }
    // rows j < split: c_j = a x_{j-1} + b x_j, solved for x_j bottom up
    for j in 0..split {
        let rhs = if j == 0 { c[0] } else { LogNum::sub(c[j], a.mul(x[j - 1]))? };
        x[j] = LogNum::div(rhs, b)?;
    }
    Ok(x)
}

/// All `q_{n,i}` by dividing each factor off the full polynomial.
///
/// Only offered in tracked mode: the result is meaningful exactly to the
/// extent that its intervals are narrow.
pub fn q_all_longdiv(
    prior: &ModelSelectionPrior,
    ln_psi: &[f64],
    ln_phi: &[f64],
    drop: DropRow,
) -> Result<CvdvOutput<LogInterval>> {
    crate::check_likelihoods(prior.n(), ln_psi, ln_phi)?;
    let (psi, phi) = inputs::<LogInterval>(ln_psi, ln_phi);
    let w = weights::<LogInterval>(prior);
    let c = poly_coeffs(&psi, &phi);
    let q_n = weighted_sum(&w, &c, 0);
    let q = (0..prior.n())
        .into_par_iter()
        .map(|i| {
            let d = divide_linear(&c, psi[i], phi[i], drop)?;
            let num = psi[i].mul(weighted_sum(&w, &d, 1));
            LogNum::div(num, q_n).map(LogNum::min_one)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CvdvOutput { q, log_marginal: q_n })
}
