//! Runtime and accuracy benchmarks over a grid of (algorithm, n) cells.
//!
//! Cells run one after another so that wall times are not distorted by
//! sibling cells competing for cores. A run cannot be interrupted once
//! started; instead, before each cell the runtime is projected from the
//! previous sizes of the same algorithm, and the cell is skipped if the
//! projection exceeds the limit. Runs that finish but take longer than the
//! limit are kept and flagged.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::simulate::{simulate, Design, SimulationSpec};
use super::spec::{parse_slab, PriorSpec};
use crate::error::{Error, Result};
use crate::posterior::{inclusion, Algorithm, LikelihoodPair, Options};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub algorithms: Vec<Algorithm>,
    pub sizes: Vec<usize>,
    pub prior: PriorSpec,
    /// Slab in the text form accepted by [`parse_slab`].
    pub slab: String,
    pub design: Design,
    pub seed: u64,
    /// Best-of-`repeats` wall time is reported.
    pub repeats: usize,
    pub tracked: bool,
    pub time_limit_secs: f64,
}

impl BenchSpec {
    pub fn new(algorithms: Vec<Algorithm>, sizes: Vec<usize>, prior: PriorSpec, slab: &str) -> Self {
        BenchSpec {
            algorithms,
            sizes,
            prior,
            slab: slab.into(),
            design: Design::Accuracy,
            seed: 0,
            repeats: 1,
            tracked: false,
            time_limit_secs: 1800.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Completed,
    /// Finished, but slower than the limit.
    OverLimit,
    /// Not run: the projected time exceeded the limit.
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub algorithm: Algorithm,
    pub n: usize,
    pub status: CellStatus,
    pub elapsed_secs: Option<f64>,
    pub projected_secs: Option<f64>,
    pub max_width: Option<f64>,
    /// Largest `|q_i - q'_i|` against any other algorithm run at the same n.
    pub max_cross_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub spec: BenchSpec,
    pub cells: Vec<BenchCell>,
    pub total_secs: f64,
}

impl BenchReport {
    /// Log-log runtime slope for one algorithm over its timed cells.
    pub fn slope(&self, algorithm: Algorithm) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .cells
            .iter()
            .filter(|c| c.algorithm == algorithm)
            .filter_map(|c| c.elapsed_secs.map(|t| (c.n as f64, t)))
            .collect();
        slope(&pts)
    }
}

/// Least-squares slope of `ln t` against `ln n`. Needs two distinct sizes
/// and positive times.
pub fn slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, t)| *n > 0.0 && *t > 0.0)
        .map(|(n, t)| (n.ln(), t.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn nominal_exponent(a: Algorithm) -> f64 {
    match a {
        Algorithm::Cvdv | Algorithm::Longdiv { .. } => 3.0,
        Algorithm::Hmm => 2.0,
        Algorithm::Discrete { .. } => 1.5,
    }
}

pub fn run_benchmark(spec: &BenchSpec) -> Result<BenchReport> {
    if spec.algorithms.is_empty() || spec.sizes.is_empty() {
        return Err(Error::InvalidParameter("benchmark needs at least one algorithm and one size".into()));
    }
    if spec.repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    let slab = parse_slab(&spec.slab)?;
    let start = Instant::now();
    let mut sizes = spec.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let opts = Options {
        tracked: spec.tracked,
        epsilon_bound: false,
        ..Options::default()
    };

    let mut cells = Vec::new();
    // per algorithm: (n, secs) of finished runs, for projection
    let mut history: Vec<Vec<(f64, f64)>> = vec![Vec::new(); spec.algorithms.len()];
    for &n in &sizes {
        let sim = simulate(&SimulationSpec { design: spec.design, n, permuted: false }, spec.seed)?;
        let prior = spec.prior.resolve(n)?;
        let pairs = sim
            .y
            .iter()
            .map(|&y| LikelihoodPair::from_slab(&slab, y))
            .collect::<Result<Vec<_>>>()?;
        let ln_psi: Vec<f64> = pairs.iter().map(|p| p.ln_psi).collect();
        let ln_phi: Vec<f64> = pairs.iter().map(|p| p.ln_phi).collect();

        let mut row: Vec<(BenchCell, Option<Vec<f64>>)> = Vec::new();
        for (ai, &alg) in spec.algorithms.iter().enumerate() {
            let hist = &mut history[ai];
            let projected = hist.last().map(|&(n0, t0)| {
                let e = slope(hist).unwrap_or(nominal_exponent(alg)).max(1.0);
                t0 * (n as f64 / n0).powf(e)
            });
            let mut cell = BenchCell {
                algorithm: alg,
                n,
                status: CellStatus::Skipped,
                elapsed_secs: None,
                projected_secs: projected,
                max_width: None,
                max_cross_error: None,
                error: None,
            };
            let over = |t: Option<f64>| t.is_some_and(|t| t > spec.time_limit_secs);
            if over(projected) || hist.last().is_some_and(|h| h.1 > spec.time_limit_secs) {
                row.push((cell, None));
                continue;
            }
            let mut best = f64::INFINITY;
            let mut result = None;
            for _ in 0..spec.repeats {
                let t = Instant::now();
                let out = inclusion(&prior, &ln_psi, &ln_phi, alg, &opts);
                best = best.min(t.elapsed().as_secs_f64());
                match out {
                    Ok(o) => result = Some(o),
                    Err(e) => {
                        cell.error = Some(e.to_string());
                        result = None;
                        break;
                    }
                }
                if best > spec.time_limit_secs {
                    break;
                }
            }
            let q = match result {
                Some(o) => {
                    cell.status = if best > spec.time_limit_secs {
                        CellStatus::OverLimit
                    } else {
                        CellStatus::Completed
                    };
                    cell.elapsed_secs = Some(best);
                    hist.push((n as f64, best));
                    if spec.tracked {
                        cell.max_width = Some(o.q.iter().map(|b| b.hi - b.lo).fold(0.0, f64::max));
                    }
                    Some(o.q.iter().map(|b| b.point).collect::<Vec<f64>>())
                }
                None => {
                    cell.status = CellStatus::Failed;
                    None
                }
            };
            row.push((cell, q));
        }
        for i in 0..row.len() {
            let Some(qi) = &row[i].1 else { continue };
            let cross = row
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .filter_map(|(_, (_, qj))| qj.as_ref())
                .map(|qj| qi.iter().zip(qj).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))));
            row[i].0.max_cross_error = cross;
        }
        cells.extend(row.into_iter().map(|(c, _)| c));
    }
    Ok(BenchReport {
        spec: spec.clone(),
        cells,
        total_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [100.0, 200.0, 400.0].iter().map(|&n: &f64| (n, 3e-7 * n.powi(2))).collect();
        assert!((slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(slope(&pts[..1]), None);
        assert_eq!(slope(&[(10.0, 1.0), (10.0, 2.0)]), None);
    }

    #[test]
    fn small_grid() {
        let spec = BenchSpec::new(
            vec![Algorithm::Cvdv, Algorithm::Hmm, Algorithm::Discrete { m: 20 }],
            vec![60, 30],
            "beta:1,n+1".parse().unwrap(),
            "laplace:1",
        );
        let spec = BenchSpec { tracked: true, ..spec };
        let r = run_benchmark(&spec).unwrap();
        assert_eq!(r.cells.len(), 6);
        assert_eq!(r.cells[0].n, 30);
        for c in &r.cells {
            assert_eq!(c.status, CellStatus::Completed, "{c:?}");
            assert!(c.max_width.unwrap() < 1e-9);
            assert!(c.max_cross_error.unwrap() < 1e-6, "{c:?}");
        }
        let exact: Vec<_> = r.cells.iter().filter(|c| c.algorithm != (Algorithm::Discrete { m: 20 })).collect();
        assert!(exact.iter().all(|c| c.max_cross_error.unwrap() < 1e-10));
    }

    #[test]
    fn projection_skips() {
        let mut spec = BenchSpec::new(
            vec![Algorithm::Cvdv],
            vec![40, 80, 4000],
            "beta:1,n+1".parse().unwrap(),
            "laplace:1",
        );
        spec.time_limit_secs = 1e-4;
        let r = run_benchmark(&spec).unwrap();
        assert_eq!(r.cells[2].status, CellStatus::Skipped);
        
    }
}
