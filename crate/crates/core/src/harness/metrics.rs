//! Recovery metrics for a posterior summary against the true signal.

use crate::error::{Error, Result};
use crate::posterior::PosteriorSummary;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    /// `‖E[θ | Y] - θ‖₂`.
    pub l2_error: f64,
    /// `FP / max(FP + TP, 1)`.
    pub fdr: f64,
    /// `TP / max(s, 1)`.
    pub tpr: f64,
    pub elapsed_secs: f64,
    pub max_width: f64,
}

pub fn metrics(summary: &PosteriorSummary, theta: &[f64], support: &[usize]) -> Result<MetricsRow> {
    let n = theta.len();
    if summary.mean.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: summary.mean.len(),
        });
    }
    let mut truth = vec![false; n];
    for &i in support {
        *truth.get_mut(i).ok_or_else(|| Error::InvalidParameter(format!("support index {i} out of range")))? = true;
    }
    let l2_error = summary.mean.iter().zip(theta).map(|(m, t)| (m - t).powi(2)).sum::<f64>().sqrt();
    let (mut tp, mut fp) = (0usize, 0usize);
    for (&sel, &t) in summary.selected.iter().zip(&truth) {
        match (sel, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            _ => {}
        }
    }
    Ok(MetricsRow {
        l2_error,
        fdr: fp as f64 / (fp + tp).max(1) as f64,
        tpr: tp as f64 / support.len().max(1) as f64,
        elapsed_secs: summary.elapsed_secs,
        max_width: summary.max_width,
    })
}

/// Mean and standard deviation of each metric over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub replications: usize,
    pub l2_mean: f64,
    pub l2_sd: f64,
    pub fdr_mean: f64,
    pub fdr_sd: f64,
    pub tpr_mean: f64,
    pub tpr_sd: f64,
    pub elapsed_mean: f64,
}

impl MetricsSummary {
    pub fn from_rows(rows: &[MetricsRow]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("no replications to summarize".into()));
        }
        let stat = |f: fn(&MetricsRow) -> f64| {
            let k = rows.len() as f64;
            let mean = rows.iter().map(f).sum::<f64>() / k;
            let sd = if rows.len() > 1 {
                (rows.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            (mean, sd)
        };
        let (l2_mean, l2_sd) = stat(|r| r.l2_error);
        let (fdr_mean, fdr_sd) = stat(|r| r.fdr);
        let (tpr_mean, tpr_sd) = stat(|r| r.tpr);
        Ok(MetricsSummary {
            replications: rows.len(),
            l2_mean,
            l2_sd,
            fdr_mean,
            fdr_sd,
            tpr_mean,
            tpr_sd,
            elapsed_mean: stat(|r| r.elapsed_secs).0,
        })
    }
}
