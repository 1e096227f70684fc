//! When is a model selection prior a spike-and-slab prior?
//!
//! A prior `π_n` on the number of nonzero coordinates (with uniform weights
//! within each model size) is a spike-and-slab prior exactly when the
//! rescaled masses `μ_s = π_n(s)/C(n, s)` are, up to a free last entry
//! `c_n ∈ [0, π_n(n)]`, the moments `∫ α^s (1-α)^{n-s} dΛ` of some mixing
//! measure. That is a truncated Stieltjes moment problem, decided through
//! positivity of two Hankel matrices plus a range condition. The free entry
//! is searched on a grid and refined by golden section.

use crate::priors::{ln_binom, ModelSelectionPrior};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(k+1) × (k+1)` Hankel matrix `[μ_{i+j}]`.
pub fn hankel(mu: &[f64], k: usize) -> Result<DMatrix<f64>> {
    if mu.len() < 2 * k + 1 {
        return Err(Error::DimensionMismatch {
            expected: 2 * k + 1,
            found: mu.len(),
        });
    }
    Ok(DMatrix::from_fn(k + 1, k + 1, |i, j| mu[i + j]))
}

/// `μ_s = π_n(s)/C(n, s)` for `s < n`, with the free entry `μ_n = c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub mu: Vec<f64>,
}

impl MomentVector {
    pub fn new(prior: &ModelSelectionPrior, c: f64) -> Self {
        let n = prior.n();
        let mut mu: Vec<f64> = prior
            .log_pmf()
            .iter()
            .enumerate()
            .map(|(s, &lp)| (lp - ln_binom(n, s)).exp())
            .collect();
        mu[n] = c;
        MomentVector { mu }
    }

    pub fn n(&self) -> usize {
        self.mu.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Eigenvalues down to `-psd (1 + ‖H‖_F)` count as nonnegative.
    pub psd: f64,
    /// Largest relative least-squares residual accepted as range inclusion.
    pub range: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { psd: 1e-10, range: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `H_k(μ) ⪰ 0`.
    HankelPsd,
    /// `H_k(Fμ) ⪰ 0` for odd `n`, `H_{k-1}(Fμ) ⪰ 0` for even `n`.
    ShiftedHankelPsd,
    /// The tail of `μ` lies in the column space of the relevant Hankel matrix.
    RangeInclusion,
}

/// Per-condition evaluation at one value of `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub c: f64,
    pub min_eig_hankel: f64,
    pub min_eig_shifted: f64,
    /// `‖v - P v‖ / ‖v‖`, zero when `v = 0`.
    pub range_residual: f64,
    /// Signed margins, nonnegative when the condition passes.
    pub margins: [f64; 3],
    /// Determinants of the leading principal minors of `H_k(μ)`, orders `1..=k+1`.
    pub leading_minors: Vec<f64>,
}

impl Diagnostics {
    pub fn margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn passes(&self) -> bool {
        self.margin() >= 0.0
    }

    /// The condition with the smallest margin, if it fails.
    pub fn violated(&self) -> Option<Condition> {
        let conds = [Condition::HankelPsd, Condition::ShiftedHankelPsd, Condition::RangeInclusion];
        let (i, m) = self
            .margins
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &m)| if m < acc.1 { (i, m) } else { acc });
        (m < 0.0).then_some(conds[i])
    }

    /// Order of the first leading principal minor of `H_k(μ)` that is
    /// negative beyond rounding, relative to the product of its diagonal.
    pub fn first_negative_minor(&self, mu: &[f64]) -> Option<usize> {
        self.leading_minors.iter().enumerate().find_map(|(i, &d)| {
            let scale: f64 = (0..=i).map(|j| mu[2 * j].abs()).product();
            (d < -1e-10 * scale.max(f64::MIN_POSITIVE)).then_some(i + 1)
        })
    }
}

fn min_eig(h: &DMatrix<f64>) -> (f64, SymmetricEigen<f64, nalgebra::Dyn>) {
    let e = SymmetricEigen::new(h.clone());
    let m = e.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    (m, e)
}

/// Residual of projecting `v` onto the eigenvectors of `h` whose eigenvalues
/// stand above rounding noise.
fn range_residual(e: &SymmetricEigen<f64, nalgebra::Dyn>, v: &DVector<f64>) -> f64 {
    let vn = v.norm();
    if vn == 0.0 {
        return 0.0;
    }
    let dim = e.eigenvalues.len() as f64;
    let scale = e.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let cutoff = 8.0 * dim * f64::EPSILON * scale;
    let mut resid = v.clone();
    for (j, &lam) in e.eigenvalues.iter().enumerate() {
        if lam.abs() > cutoff {
            let u = e.eigenvectors.column(j);
            resid -= u * u.dot(v);
        }
    }
    resid.norm() / vn
}

fn leading_minors(h: &DMatrix<f64>) -> Vec<f64> {
    (1..=h.nrows())
        .map(|r| h.view((0, 0), (r, r)).into_owned().determinant())
        .collect()
}

/// Evaluate the three conditions for the moment vector with `μ_n = c`.
pub fn check_at(prior: &ModelSelectionPrior, c: f64, tol: Tolerances) -> Diagnostics {
    let mv = MomentVector::new(prior, c);
    let mu = &mv.mu;
    let n = mv.n();
    let k = n / 2;
    let h = hankel(mu, k).expect("μ has n+1 ≥ 2k+1 entries");
    // odd n = 2k+1: H_k(Fμ), v in range H_k(μ); even n = 2k: H_{k-1}(Fμ), v in range H_{k-1}(Fμ)
    let (shifted, v) = if n % 2 == 1 {
        (hankel(&mu[1..], k).expect("n entries"), DVector::from_column_slice(&mu[k + 1..=n]))
    } else {
        (hankel(&mu[1..], k - 1).expect("n entries"), DVector::from_column_slice(&mu[k + 1..=n]))
    };
    let (eh, dh) = min_eig(&h);
    let (es, ds) = min_eig(&shifted);
    let range_target = if n % 2 == 1 { &dh } else { &ds };
    let range_residual = range_residual(range_target, &v);
    Diagnostics {
        c,
        min_eig_hankel: eh,
        min_eig_shifted: es,
        range_residual,
        margins: [
            eh / (1.0 + h.norm()) + tol.psd,
            es / (1.0 + shifted.norm()) + tol.psd,
            tol.range - range_residual,
        ],
        leading_minors: leading_minors(&h),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentabilityVerdict {
    pub representable: bool,
    pub witness_c: Option<f64>,
    pub violated_condition: Option<Condition>,
    /// Order of the first negative leading minor of `H_k(μ)`, when one is
    /// negative at every `c` examined.
    pub negative_minor_order: Option<usize>,
    /// Diagnostics at the witness, or at the least-violating `c` found.
    pub best: Diagnostics,
}

pub const DEFAULT_GRID: usize = 1001;

/// Decide representability by searching `c ∈ [0, π_n(n)]`.
pub fn is_spike_slab(prior: &ModelSelectionPrior, tol: Tolerances, grid_size: usize) -> RepresentabilityVerdict {
    let n = prior.n();
    let top = prior.log_pmf()[n].exp();
    let pts = grid_size.max(2);
    let grid: Vec<f64> = (0..pts)
        .map(|i| if i + 1 == pts { top } else { top * i as f64 / (pts - 1) as f64 })
        .collect();
    let evals: Vec<Diagnostics> = grid.par_iter().map(|&c| check_at(prior, c, tol)).collect();
    let (best_i, _) = evals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, d)| if d.margin() > acc.1 { (i, d.margin()) } else { acc });
    let mut best = evals[best_i].clone();

    if !best.passes() && top > 0.0 {
        let lo = grid[best_i.saturating_sub(1)];
        let hi = grid[(best_i + 1).min(pts - 1)];
        let refined = golden_max(|c| check_at(prior, c, tol), lo, hi, 1e-10 * top);
        if refined.margin() > best.margin() {
            best = refined;
        }
    }

    let mu = MomentVector::new(prior, best.c).mu;
    let negative_minor_order = if best.passes() {
        None
    } else {
        evals
            .iter()
            .map(|d| d.first_negative_minor(&mu))
            .reduce(|a, b| if a == b { a } else { None })
            .flatten()
    };
    RepresentabilityVerdict {
        representable: best.passes(),
        witness_c: best.passes().then_some(best.c),
        violated_condition: best.violated(),
        negative_minor_order,
        best,
    }
}

fn golden_max(f: impl Fn(f64) -> Diagnostics, mut a: f64, mut b: f64, tol: f64) -> Diagnostics {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1.margin() < f2.margin() {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
        if f1.passes() {
            return f1;
        }
        if f2.passes() {
            return f2;
        }
    }
    if f1.margin() >= f2.margin() { f1 } else { f2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::PriorFamily;

    fn prior(f: PriorFamily, n: usize) -> ModelSelectionPrior {
        ModelSelectionPrior::new(f, n).unwrap()
    }

    #[test]
    fn hankel_shapes() {
        let h = hankel(&[1.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let mu: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
        let h = hankel(&mu, 3).unwrap();
        assert_eq!(h, h.transpose());
        let f = hankel(&mu[1..], 3).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(f[(i, j)], mu[i + j + 1]);
            }
        }
        assert!(hankel(&mu, 5).is_err());
    }

    #[test]
    fn binomial_at_pn() {
        let p = prior(PriorFamily::Binomial { p: 0.5 }, 3);
        assert!(check_at(&p, 0.125, Tolerances::default()).passes());
        let p = prior(PriorFamily::Binomial { p: 1.0 }, 4);
        let d = check_at(&p, 0.0, Tolerances::default());
        assert!(d.passes());
        assert_eq!(d.range_residual, 0.0);
    }

    #[test]
    fn polytail_order_two_minor() {
        let p = prior(PriorFamily::PolyTail { exponent: 2.0 }, 10);
        for c in [0.0, 0.5 * p.pmf()[10], p.pmf()[10]] {
            let d = check_at(&p, c, Tolerances::default());
            let mu = MomentVector::new(&p, c).mu;
            assert!(!d.passes());
            assert_eq!(d.first_negative_minor(&mu), Some(2));
        }
        let v = is_spike_slab(&p, Tolerances::default(), 101);
        assert!(!v.representable);
        assert_eq!(v.negative_minor_order, Some(2));
        assert_eq!(v.violated_condition, Some(Condition::HankelPsd));
    }

    #[test]
    fn examples() {
        let tol = Tolerances::default();
        for n in 3..=12 {
            for p in [0.1, 0.5, 0.9] {
                let v = is_spike_slab(&prior(PriorFamily::Binomial { p }, n), tol, 201);
                assert!(v.representable, "binomial p={p} n={n}: {v:?}");
            }
            assert!(is_spike_slab(&prior(PriorFamily::PoissonTrunc { rate: 1.0 }, n), tol, 201).representable);
        }
        assert!(!is_spike_slab(&prior(PriorFamily::SubExp { exponent: 2.0 }, 10), tol, 201).representable);
    }

    #[test]
    fn beta_binomial_round_trip() {
        for (i, (kappa, lambda)) in [(0.5, 0.5), (1.0, 5.0), (4.2, 0.7), (2.5, 2.5)].into_iter().enumerate() {
            let n = 5 + 2 * i;
            let p = prior(PriorFamily::BetaBinomial { kappa, lambda }, n);
            let v = is_spike_slab(&p, Tolerances::default(), 201);
            assert!(v.representable, "({kappa}, {lambda}) n={n}: {v:?}");
            assert!(v.witness_c.unwrap() <= p.pmf()[n]);
        }
    }

    #[test]
    fn polytail_threshold() {
        for (lambda, limit) in [(2.0f64, 2.0f64), (3.0, 4.0 / 3.0)] {
            for n in 2..=12 {
                let v = is_spike_slab(&prior(PriorFamily::PolyTail { exponent: lambda }, n), Tolerances::default(), 201);
                assert_eq!(v.representable, (n as f64) <= limit, "lambda={lambda} n={n}: {v:?}");
            }
        }
    }
}
