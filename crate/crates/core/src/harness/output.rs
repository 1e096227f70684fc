//! JSON Lines result files: one header object, then one record per
//! coordinate.
//!
//! ```text
//! {"format":"spikeslab-posterior","version":1,"algorithm":"hmm",...}
//! {"index":0,"y":0.13,"q":0.0021,...}
//! ```
//!
//! Floats are written in shortest round-trip form, so identical inputs give
//! byte-identical files as long as `elapsed_secs` is left out of the
//! comparison (or zeroed with [`OutputHeader::without_timing`]).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::discretize::EpsilonBound;
use crate::error::{Error, Result};
use crate::posterior::PosteriorSummary;

pub const FORMAT: &str = "spikeslab-posterior";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputHeader {
    pub format: String,
    pub version: u32,
    pub algorithm: String,
    pub prior: String,
    pub slab: String,
    pub seed: Option<u64>,
    pub n: usize,
    /// `ln Q_n`.
    pub log_marginal: f64,
    pub elapsed_secs: f64,
    pub max_width: f64,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonBound>,
}

impl OutputHeader {
    pub fn new(summary: &PosteriorSummary, prior: &str, slab: &str, seed: Option<u64>, threshold: f64) -> Self {
        OutputHeader {
            format: FORMAT.into(),
            version: VERSION,
            algorithm: summary.algorithm.clone(),
            prior: prior.into(),
            slab: slab.into(),
            seed,
            n: summary.q.len(),
            log_marginal: summary.log_marginal,
            elapsed_secs: summary.elapsed_secs,
            max_width: summary.max_width,
            threshold,
            epsilon: summary.epsilon.clone(),
        }
    }

    pub fn without_timing(mut self) -> Self {
        self.elapsed_secs = 0.0;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub index: usize,
    pub y: f64,
    pub q: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    pub mean: f64,
    pub median: f64,
    pub selected: bool,
}

pub fn write_summary<W: Write>(mut w: W, header: &OutputHeader, summary: &PosteriorSummary) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    let json = |e: serde_json::Error| Error::Io(e.to_string());
    serde_json::to_writer(&mut w, header).map_err(json)?;
    w.write_all(b"\n").map_err(io)?;
    for i in 0..summary.q.len() {
        let rec = OutputRecord {
            index: i,
            y: summary.y[i],
            q: summary.q[i],
            q_lo: summary.q_lo[i],
            q_hi: summary.q_hi[i],
            mean: summary.mean[i],
            median: summary.median[i],
            selected: summary.selected[i],
        };
        serde_json::to_writer(&mut w, &rec).map_err(json)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Parse a file written by [`write_summary`].
pub fn read_summary<R: BufRead>(r: R) -> Result<(OutputHeader, PosteriorSummary)> {
    let mut lines = r.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let first = lines
        .next()
        .ok_or_else(|| Error::Parse("empty result file".into()))?
        .map_err(|e| Error::Io(e.to_string()))?;
    let header: OutputHeader = serde_json::from_str(&first).map_err(|e| Error::Parse(format!("header: {e}")))?;
    if header.format != FORMAT {
        return Err(Error::Parse(format!("not a posterior file (format {:?})", header.format)));
    }
    let mut s = PosteriorSummary {
        algorithm: header.algorithm.clone(),
        y: Vec::with_capacity(header.n),
        q: Vec::with_capacity(header.n),
        q_lo: Vec::with_capacity(header.n),
        q_hi: Vec::with_capacity(header.n),
        mean: Vec::with_capacity(header.n),
        median: Vec::with_capacity(header.n),
        selected: Vec::with_capacity(header.n),
        log_marginal: header.log_marginal,
        elapsed_secs: header.elapsed_secs,
        max_width: header.max_width,
        epsilon: header.epsilon.clone(),
    };
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Io(e.to_string()))?;
        let rec: OutputRecord = serde_json::from_str(&line).map_err(|e| Error::Parse(format!("record {k}: {e}")))?;
        if rec.index != k {
            return Err(Error::Parse(format!("record {k} has index {}", rec.index)));
        }
        s.y.push(rec.y);
        s.q.push(rec.q);
        s.q_lo.push(rec.q_lo);
        s.q_hi.push(rec.q_hi);
        s.mean.push(rec.mean);
        s.median.push(rec.median);
        s.selected.push(rec.selected);
    }
    if s.q.len() != header.n {
        return Err(Error::DimensionMismatch { expected: header.n, found: s.q.len() });
    }
    Ok((header, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::{compute_with, Algorithm, Options, Prior};
    use crate::priors::MixingPrior;
    use crate::slabs::SlabModel;

    fn run(alg: Algorithm) -> PosteriorSummary {
        let y: Vec<f64> = (0..40).map(|i| ((i * 37 % 17) as f64 - 8.0) * 0.61).collect();
        let prior = Prior::SpikeSlab(MixingPrior::beta(1.0, 41.0).unwrap());
        let opts = Options { tracked: true, ..Options::default() };
        compute_with(&prior, &SlabModel::laplace(1.0).unwrap(), &y, alg, &opts).unwrap()
    }

    #[test]
    fn round_trip() {
        for alg in [Algorithm::Hmm, Algorithm::Discrete { m: 8 }] {
            let s = run(alg);
            let h = OutputHeader::new(&s, "beta:1,n+1", "laplace:1", Some(7), 0.5);
            let mut buf = Vec::new();
            write_summary(&mut buf, &h, &s).unwrap();
            let (h2, s2) = read_summary(buf.as_slice()).unwrap();
            assert_eq!(h2, h);
            assert_eq!(s2, s);
        }
    }

    #[test]
    fn bit_stable() {
        let bytes = || {
            let s = run(Algorithm::Hmm);
            let h = OutputHeader::new(&s, "beta:1,n+1", "laplace:1", None, 0.5).without_timing();
            let mut buf = Vec::new();
            write_summary(&mut buf, &h, &s).unwrap();
            buf
        };
        assert_eq!(bytes(), bytes());
    }

    #[test]
    fn rejects_damage() {
        let s = run(Algorithm::Hmm);
        let h = OutputHeader::new(&s, "p", "s", None, 0.5);
        let mut buf = Vec::new();
        write_summary(&mut buf, &h, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(read_summary(truncated.as_bytes()).is_err());
        assert!(read_summary("".as_bytes()).is_err());
        assert!(read_summary("{\"format\":\"other\"}\n".as_bytes()).is_err());
    }
}
