//! Replicated simulation experiments.
//!
//! Selection experiments (`accuracy`, `a1`, `a2`, `a3`) score the posterior
//! against the simulated truth. The `approx` experiment scores Gibbs and
//! variational approximations against the exact inclusion probabilities on
//! the accuracy design.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics, MetricsRow, MetricsSummary};
use super::simulate::{simulate, Design, SimulationSpec};
use super::spec::{parse_slab, PriorSpec};
use crate::baselines::{approx_error, gibbs, vb_componentwise, GibbsConfig, VbConfig};
use crate::error::{Error, Result};
use crate::posterior::{compute, Algorithm};
use crate::priors::MixingPrior;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Accuracy,
    Approx,
    A1,
    A2,
    A3,
}

impl std::str::FromStr for ExperimentName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "accuracy" => Ok(ExperimentName::Accuracy),
            "approx" => Ok(ExperimentName::Approx),
            "a1" => Ok(ExperimentName::A1),
            "a2" => Ok(ExperimentName::A2),
            "a3" => Ok(ExperimentName::A3),
            _ => Err(Error::Parse(format!("unknown experiment {s:?}"))),
        }
    }
}

impl ExperimentName {
    pub fn design(self) -> Design {
        match self {
            ExperimentName::Accuracy | ExperimentName::Approx => Design::Accuracy,
            ExperimentName::A1 => Design::A1,
            ExperimentName::A2 => Design::A2,
            ExperimentName::A3 => Design::A3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub prior: PriorSpec,
    pub slab: String,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub permuted: bool,
    /// Gibbs chain lengths (approx only).
    #[serde(default)]
    pub gibbs_iterations: Vec<u64>,
    /// Variational settings (approx only); `None` skips VB.
    #[serde(default)]
    pub vb: Option<VbConfig>,
}

impl ExperimentSpec {
    pub fn new(name: ExperimentName, sizes: Vec<usize>, prior: PriorSpec, slab: &str) -> Self {
        ExperimentSpec {
            name,
            sizes,
            replications: 1,
            seed: 0,
            prior,
            slab: slab.into(),
            algorithm: Algorithm::Hmm,
            permuted: false,
            gibbs_iterations: Vec::new(),
            vb: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub n: usize,
    pub summary: MetricsSummary,
    pub replications: Vec<MetricsRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxRow {
    pub n: usize,
    /// `gibbs:<iterations>` or `vb`.
    pub method: String,
    /// `max_i |q_i - q̃_i|` per replication.
    pub errors: Vec<f64>,
    pub mean_error: f64,
    pub mean_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub selection: Vec<SelectionRow>,
    pub approx: Vec<ApproxRow>,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    if spec.replications == 0 {
        return Err(Error::InvalidParameter("replications must be at least 1".into()));
    }
    if spec.sizes.is_empty() {
        return Err(Error::InvalidParameter("no sizes given".into()));
    }
    let slab = parse_slab(&spec.slab)?;
    let mut report = ExperimentReport {
        spec: spec.clone(),
        selection: Vec::new(),
        approx: Vec::new(),
    };
    for &n in &spec.sizes {
        let prior = spec.prior.resolve(n)?;
        let sim_spec = SimulationSpec { design: spec.name.design(), n, permuted: spec.permuted };
        let seeds: Vec<u64> = (0..spec.replications as u64).map(|r| spec.seed.wrapping_add(r)).collect();

        if spec.name != ExperimentName::Approx {
            let rows = seeds
                .par_iter()
                .map(|&seed| {
                    let sim = simulate(&sim_spec, seed)?;
                    let s = compute(&prior, &slab, &sim.y, spec.algorithm, false)?;
                    metrics(&s, &sim.theta, &sim.support)
                })
                .collect::<Result<Vec<_>>>()?;
            report.selection.push(SelectionRow {
                n,
                summary: MetricsSummary::from_rows(&rows)?,
                replications: rows,
            });
            continue;
        }

        let (kappa, lambda) = match prior.mixing() {
            Some(MixingPrior::Beta { kappa, lambda }) => (kappa, lambda),
            _ => return Err(Error::AlgorithmMismatch("the approximations need a beta:K,L prior".into())),
        };
        // per replication: one (error, secs) per method, in method order
        let per_rep = seeds
            .par_iter()
            .map(|&seed| {
                let sim = simulate(&sim_spec, seed)?;
                let exact = compute(&prior, &slab, &sim.y, spec.algorithm, false)?;
                let mut out = Vec::new();
                for &it in &spec.gibbs_iterations {
                    let g = gibbs(&sim.y, kappa, lambda, &slab, GibbsConfig { iterations: it, seed })?;
                    out.push((approx_error(&exact.q, &g.q)?, g.elapsed_secs));
                }
                if let Some(cfg) = spec.vb {
                    let v = vb_componentwise(&sim.y, kappa, lambda, &slab, cfg)?;
                    out.push((approx_error(&exact.q, &v.q)?, v.elapsed_secs));
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        let methods = spec
            .gibbs_iterations
            .iter()
            .map(|it| format!("gibbs:{it}"))
            .chain(spec.vb.map(|_| "vb".to_string()));
        for (k, method) in methods.enumerate() {
            let errors: Vec<f64> = per_rep.iter().map(|r| r[k].0).collect();
            let reps = errors.len() as f64;
            report.approx.push(ApproxRow {
                n,
                method,
                mean_error: errors.iter().sum::<f64>() / reps,
                mean_secs: per_rep.iter().map(|r| r[k].1).sum::<f64>() / reps,
                errors,
            });
        }
    }
    Ok(report)
}
