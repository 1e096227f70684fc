//! Gene-expression Z-scores and the text formats they are read from.
//!
//! A matrix file has a header row (a label, then sample IDs) and one row
//! per gene (gene ID, then intensities), separated by tabs or commas.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionMatrix {
    pub genes: Vec<String>,
    pub samples: Vec<String>,
    /// `values[gene][sample]`.
    pub values: Vec<Vec<f64>>,
}

fn fields(line: &str) -> Vec<&str> {
    let sep = if line.contains('\t') { '\t' } else { ',' };
    line.split(sep).map(str::trim).collect()
}

pub fn read_matrix(reader: impl BufRead) -> Result<ExpressionMatrix> {
    let mut lines = reader.lines().filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let samples: Vec<String> = fields(&header).into_iter().skip(1).map(String::from).collect();
    if samples.is_empty() {
        return Err(Error::Parse("matrix header lists no samples".into()));
    }
    let mut genes = Vec::new();
    let mut values = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let f = fields(&line);
        if f.len() != samples.len() + 1 {
            return Err(Error::Parse(format!(
                "row {} has {} values, header has {} samples",
                k + 2,
                f.len() - 1,
                samples.len()
            )));
        }
        let row = f[1..]
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad value {v:?}", k + 2))))
            .collect::<Result<Vec<_>>>()?;
        genes.push(f[0].to_string());
        values.push(row);
    }
    Ok(ExpressionMatrix { genes, samples, values })
}

pub fn write_matrix(m: &ExpressionMatrix, mut w: impl Write) -> Result<()> {
    writeln!(w, "gene\t{}", m.samples.join("\t"))?;
    for (g, row) in m.genes.iter().zip(&m.values) {
        write!(w, "{g}")?;
        for v in row {
            write!(w, "\t{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Per-gene Z-scores between two groups of patients.
///
/// Each patient's intensities are divided by their total over genes; then
/// `Z_i = (mean log U' - mean log C') / √(s²_U/n_U + s²_C/n_C)` with
/// sample variances.
pub fn zscores(group_a: &ExpressionMatrix, group_b: &ExpressionMatrix) -> Result<Vec<f64>> {
    if group_a.genes.len() != group_b.genes.len() {
        return Err(Error::DimensionMismatch {
            expected: group_a.genes.len(),
            found: group_b.genes.len(),
        });
    }
    if let Some(i) = (0..group_a.genes.len()).find(|&i| group_a.genes[i] != group_b.genes[i]) {
        return Err(Error::InvalidParameter(format!(
            "gene {} is {:?} in one group and {:?} in the other",
            i + 1,
            group_a.genes[i],
            group_b.genes[i]
        )));
    }
    let stats_a = log_stats(group_a)?;
    let stats_b = log_stats(group_b)?;
    let (na, nb) = (group_a.samples.len() as f64, group_b.samples.len() as f64);
    stats_a
        .iter()
        .zip(&stats_b)
        .enumerate()
        .map(|(i, (&(ma, va), &(mb, vb)))| {
            let diff = ma - mb;
            let se = (va / na + vb / nb).sqrt();
            if se > 0.0 {
                Ok(diff / se)
            } else if diff == 0.0 {
                Ok(0.0)
            } else {
                Err(Error::Numerical {
                    what: "zero standard error with a nonzero difference",
                    achieved: (i + 1) as f64,
                })
            }
        })
        .collect()
}

/// Mean and sample variance of the normalized log intensities per gene.
fn log_stats(m: &ExpressionMatrix) -> Result<Vec<(f64, f64)>> {
    let p = m.samples.len();
    if p < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 patients per group, got {p}")));
    }
    let mut totals = vec![0.0; p];
    for (g, row) in m.values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "intensity {v} for gene {:?}, patient {:?} is not positive",
                    m.genes[g], m.samples[j]
                )));
            }
            totals[j] += v;
        }
    }
    let ln_totals: Vec<f64> = totals.iter().map(|t| t.ln()).collect();
    Ok(m
        .values
        .iter()
        .map(|row| {
            let logs: Vec<f64> = row.iter().zip(&ln_totals).map(|(v, lt)| v.ln() - lt).collect();
            let mean = logs.iter().sum::<f64>() / p as f64;
            let var = logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (p - 1) as f64;
            (mean, var)
        })
        .collect())
}

/// Split a GEO SOFT dataset file into one matrix per requested subset.
///
/// Subsets are matched on `!subset_description` among subsets of the given
/// `!subset_type` (e.g. `disease state`); the table between
/// `!dataset_table_begin` and `!dataset_table_end` supplies the values,
/// keyed by `ID_REF`.
pub fn soft_convert(reader: impl BufRead, subset_type: &str, labels: &[&str]) -> Result<Vec<ExpressionMatrix>> {
    let mut subsets: Vec<(String, String, Vec<String>)> = Vec::new();
    let mut in_subset = false;
    let mut in_table = false;
    let mut header: Vec<String> = Vec::new();
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if in_table {
            if line.starts_with("!dataset_table_end") {
                in_table = false;
            } else if header.is_empty() {
                header = line.split('\t').map(String::from).collect();
            } else if !line.is_empty() {
                let f: Vec<String> = line.split('\t').map(String::from).collect();
                rows.push((f[0].clone(), f));
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix('^') {
            in_subset = rest.to_ascii_uppercase().starts_with("SUBSET");
            if in_subset {
                subsets.push((String::new(), String::new(), Vec::new()));
            }
        } else if line.starts_with("!dataset_table_begin") {
            in_table = true;
        } else if in_subset {
            let Some((key, value)) = line.split_once('=') else { continue };
            let (key, value) = (key.trim(), value.trim());
            let cur = subsets.last_mut().expect("inside a subset");
            match key {
                "!subset_description" => cur.0 = value.to_string(),
                "!subset_type" => cur.1 = value.to_string(),
                "!subset_sample_id" => cur.2 = value.split(',').map(|s| s.trim().to_string()).collect(),
                _ => {}
            }
        }
    }
    if header.is_empty() {
        return Err(Error::Parse("no dataset table found".into()));
    }
    let col: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    labels
        .iter()
        .map(|label| {
            let ids = subsets
                .iter()
                .find(|(d, t, _)| d.eq_ignore_ascii_case(label) && t.eq_ignore_ascii_case(subset_type))
                .map(|s| &s.2)
                .ok_or_else(|| Error::Parse(format!("no {subset_type:?} subset described as {label:?}")))?;
            let cols = ids
                .iter()
                .map(|id| col.get(id.as_str()).copied().ok_or_else(|| Error::Parse(format!("sample {id} missing from table"))))
                .collect::<Result<Vec<_>>>()?;
            let values = rows
                .iter()
                .map(|(gene, f)| {
                    cols.iter()
                        .map(|&c| {
                            let v = f.get(c).map(String::as_str).unwrap_or("");
                            v.parse::<f64>().map_err(|_| Error::Parse(format!("gene {gene}: bad value {v:?}")))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ExpressionMatrix {
                genes: rows.iter().map(|(g, _)| g.clone()).collect(),
                samples: ids.clone(),
                values,
            })
        })
        .collect()
}
