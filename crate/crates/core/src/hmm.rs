//! Forward–backward over the model selection hidden Markov model.
//!
//! The hidden state after coordinate `i` is the running count `M_i` of
//! nonzero coordinates. Under an exchangeable prior the law of the next bit
//! depends on `(i, M_i)` only, so
//!
//! ```text
//! F_i(m) = φ_i F_{i-1}(m) T(i-1, m, 0) + ψ_i F_{i-1}(m-1) T(i-1, m-1, 1)
//! B_i(m) = T(i, m, 0) φ_{i+1} B_{i+1}(m) + T(i, m, 1) ψ_{i+1} B_{i+1}(m+1)
//! ```
//!
//! with `F_0(0) = 1`, `B_n ≡ 1` and `Q_n = B_0(0)`. The bit `B_i` itself is
//! recovered from which branch of the forward sum entered `(i, m)`.

use crate::error::Result;
use crate::lognum::LogNum;
use crate::priors::{ModelSelectionPrior, Transitions};

/// How much of the backward trellis is kept in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MemoryMode {
    /// Checkpoint when the full trellis would exceed [`AUTO_BUDGET_BYTES`].
    #[default]
    Auto,
    /// Keep every backward row: `O(n²)` memory, one backward pass.
    Full,
    /// Keep every `⌈√n⌉`-th row and recompute the rest block by block:
    /// `O(n^{3/2})` memory, two backward passes.
    Checkpointed,
}

pub const AUTO_BUDGET_BYTES: usize = 256 << 20;

/// One column of the trellis, holding states `m ∈ [lo, lo + vals.len())`.
#[derive(Debug, Clone)]
pub struct Row<N> {
    pub lo: usize,
    pub vals: Vec<N>,
}

impl<N: LogNum> Row<N> {
    #[inline]
    pub fn get(&self, m: usize) -> N {
        if m < self.lo {
            return N::zero();
        }
        self.vals.get(m - self.lo).copied().unwrap_or_else(N::zero)
    }

    pub fn hi(&self) -> usize {
        self.lo + self.vals.len() - 1
    }
}

/// Reachable count range after `i` coordinates given the prior's support.
struct Reach {
    n: usize,
    smin: usize,
    smax: usize,
}

impl Reach {
    fn new(prior: &ModelSelectionPrior) -> Self {
        let (smin, smax) = prior.support();
        Reach {
            n: prior.n(),
            smin,
            smax,
        }
    }

    #[inline]
    fn range(&self, i: usize) -> (usize, usize) {
        let lo = self.smin.saturating_sub(self.n - i);
        let hi = i.min(self.smax);
        (lo, hi)
    }
}

struct Model<'a, N> {
    trans: Transitions<N>,
    reach: Reach,
    psi: &'a [f64],
    phi: &'a [f64],
}

impl<N: LogNum> Model<'_, N> {
    /// Backward row `i` from row `i + 1`.
    fn backward_step(&self, i: usize, next: &Row<N>) -> Row<N> {
        let (lo, hi) = self.reach.range(i);
        let e0 = N::exact(self.phi[i]);
        let e1 = N::exact(self.psi[i]);
        let vals = (lo..=hi)
            .map(|m| {
                let stay = self.trans.get(i, m, false).mul(e0).mul(next.get(m));
                let jump = self.trans.get(i, m, true).mul(e1).mul(next.get(m + 1));
                stay.add(jump)
            })
            .collect();
        Row { lo, vals }
    }

    fn backward_last(&self) -> Row<N> {
        let (lo, hi) = self.reach.range(self.reach.n);
        Row {
            lo,
            vals: vec![N::one(); hi + 1 - lo],
        }
    }

    /// Forward row `i` from row `i - 1`, split into the parts entering
    /// through `B_i = 0` and `B_i = 1`.
    fn forward_step(&self, i: usize, prev: &Row<N>) -> (Row<N>, Vec<N>, Vec<N>) {
        let (lo, hi) = self.reach.range(i);
        let e0 = N::exact(self.phi[i - 1]);
        let e1 = N::exact(self.psi[i - 1]);
        let mut zero = Vec::with_capacity(hi + 1 - lo);
        let mut one = Vec::with_capacity(hi + 1 - lo);
        for m in lo..=hi {
            let z = if m < i {
                prev.get(m).mul(self.trans.get(i - 1, m, false)).mul(e0)
            } else {
                N::zero()
            };
            let o = if m >= 1 {
                prev.get(m - 1).mul(self.trans.get(i - 1, m - 1, true)).mul(e1)
            } else {
                N::zero()
            };
            zero.push(z);
            one.push(o);
        }
        let vals = zero.iter().zip(&one).map(|(z, o)| z.add(*o)).collect();
        (Row { lo, vals }, zero, one)
    }
}

/// Forward densities `p(Y_1..Y_i, M_i = m)` for all `i`, and `Q_n`.
pub fn forward_pass<N: LogNum>(prior: &ModelSelectionPrior, ln_psi: &[f64], ln_phi: &[f64]) -> Result<(Vec<Row<N>>, N)> {
    crate::check_likelihoods(prior.n(), ln_psi, ln_phi)?;
    let model = Model {
        trans: Transitions::new(prior)?,
        reach: Reach::new(prior),
        psi: ln_psi,
        phi: ln_phi,
    };
    let mut rows = vec![Row {
        lo: 0,
        vals: vec![N::one()],
    }];
    for i in 1..=prior.n() {
        let (row, _, _) = model.forward_step(i, &rows[i - 1]);
        rows.push(row);
    }
    let q = N::sum(rows[prior.n()].vals.iter().copied());
    Ok((rows, q))
}

/// Backward densities `p(Y_{i+1}..Y_n | M_i = m)` for all `i`.
pub fn backward_pass<N: LogNum>(prior: &ModelSelectionPrior, ln_psi: &[f64], ln_phi: &[f64]) -> Result<Vec<Row<N>>> {
    crate::check_likelihoods(prior.n(), ln_psi, ln_phi)?;
    let model = Model {
        trans: Transitions::new(prior)?,
        reach: Reach::new(prior),
        psi: ln_psi,
        phi: ln_phi,
    };
    Ok(backward_all(&model))
}

fn backward_all<N: LogNum>(model: &Model<'_, N>) -> Vec<Row<N>> {
    let n = model.reach.n;
    let mut rows = Vec::with_capacity(n + 1);
    rows.push(model.backward_last());
    for i in (0..n).rev() {
        let r = model.backward_step(i, rows.last().unwrap());
        rows.push(r);
    }
    rows.reverse();
    rows
}

#[derive(Debug, Clone)]
pub struct HmmOutput<N> {
    pub q: Vec<N>,
    pub log_marginal: N,
}

/// All `q_{n,i}` in `O(n²)` time.
pub fn q_all_hmm<N: LogNum>(prior: &ModelSelectionPrior, ln_psi: &[f64], ln_phi: &[f64], mode: MemoryMode) -> Result<HmmOutput<N>> {
    crate::check_likelihoods(prior.n(), ln_psi, ln_phi)?;
    let n = prior.n();
    let model = Model {
        trans: Transitions::new(prior)?,
        reach: Reach::new(prior),
        psi: ln_psi,
        phi: ln_phi,
    };
    let full_bytes = (n + 1) * (n + 2) / 2 * std::mem::size_of::<N>();
    let checkpointed = match mode {
        MemoryMode::Full => false,
        MemoryMode::Checkpointed => true,
        MemoryMode::Auto => full_bytes > AUTO_BUDGET_BYTES,
    };

    // Backward rows are consumed in increasing i; `source` hands them out.
    let mut source: Box<dyn FnMut(usize) -> Row<N> + '_> = if checkpointed {
        let stride = (n as f64).sqrt().ceil().max(1.0) as usize;
        let mut checkpoints: Vec<Option<Row<N>>> = vec![None; n + 1];
        let mut row = model.backward_last();
        for i in (0..n).rev() {
            if (i + 1) % stride == 0 || i + 1 == n {
                checkpoints[i + 1] = Some(row.clone());
            }
            row = model.backward_step(i, &row);
        }
        checkpoints[0] = Some(row);
        let model = &model;
        let mut block: Vec<Row<N>> = Vec::new();
        let mut block_start = 0usize;
        Box::new(move |i: usize| {
            if let Some(r) = &checkpoints[i] {
                return r.clone();
            }
            if i < block_start || i >= block_start + block.len() {
                // recompute rows (c, next checkpoint) from the checkpoint above
                let c = (i / stride) * stride;
                let top = ((c + stride).min(n)..=n).find(|&t| checkpoints[t].is_some()).unwrap();
                let mut rows = vec![checkpoints[top].clone().unwrap()];
                for j in (c..top).rev() {
                    let r = model.backward_step(j, rows.last().unwrap());
                    rows.push(r);
                }
                rows.reverse();
                rows.pop();
                block = rows;
                block_start = c;
            }
            block[i - block_start].clone()
        })
    } else {
        let rows = backward_all(&model);
        Box::new(move |i: usize| rows[i].clone())
    };

    let log_marginal = source(0).get(0);
    let mut prev = Row {
        lo: 0,
        vals: vec![N::one()],
    };
    let mut q = Vec::with_capacity(n);
    for i in 1..=n {
        let (row, zero, one) = model.forward_step(i, &prev);
        let back = source(i);
        let mut num0 = N::zero();
        let mut num1 = N::zero();
        for (k, m) in (row.lo..=row.hi()).enumerate() {
            let b = back.get(m);
            num0 = num0.add(zero[k].mul(b));
            num1 = num1.add(one[k].mul(b));
        }
        // q = num1 / (num0 + num1) = 1 / (1 + num0/num1)
        let r = num0.div(num1)?;
        q.push(N::one().div(N::one().add(r))?);
        prev = row;
    }
    Ok(HmmOutput { q, log_marginal })
}
