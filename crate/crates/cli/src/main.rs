//! `spikeslab`: exact posterior inclusion probabilities for the sparse
//! normal sequence model, plus the data and benchmarking tools around them.
//!
//! Exit status is 0 on success, 1 for usage or input errors and 2 when a
//! computation fails numerically.

mod config;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{Config, DEFAULT_ALGORITHM, DEFAULT_PRIOR, DEFAULT_SLAB};
use spikeslab::baselines::{approx_error, VbConfig};
use spikeslab::harness::{
    parse_prior, parse_slab, read_matrix, read_summary, run_benchmark, run_experiment, simulate, soft_convert,
    write_matrix, write_summary, zscores, BenchSpec, Design, ExperimentName, ExperimentSpec, OutputHeader, PriorSpec,
    SimulationSpec,
};
use spikeslab::posterior::{compute_with, Algorithm, Options};
use spikeslab::representability::{is_spike_slab, Tolerances, DEFAULT_GRID};

/// A mistake in how the program was invoked.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub(crate) fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "spikeslab", version, about = "Exact spike-and-slab posteriors for sparse normal means")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inclusion probabilities, means, medians and selections for a data vector.
    Posterior(PosteriorArgs),
    /// Draw observations from one of the simulation designs.
    Simulate(SimulateArgs),
    /// Per-gene Z-scores between two expression matrices.
    Zscore(ZscoreArgs),
    /// Split a GEO SOFT dataset into one expression matrix per subset.
    SoftConvert(SoftConvertArgs),
    /// Time algorithms over a grid of sample sizes.
    Bench(BenchArgs),
    /// Replicated simulation experiments.
    Experiment(ExperimentArgs),
    /// Decide whether a model selection prior is a spike-and-slab prior.
    Represent(RepresentArgs),
    /// Score externally computed inclusion probabilities against the exact ones.
    Compare(CompareArgs),
}

/// Model settings shared by `posterior` and `compare`.
#[derive(Args)]
struct ModelArgs {
    /// Prior, e.g. `beta:1,n+1`, `beta-binomial:1,1`, `poisson:2`, `weights:0.5,0.3,0.2`.
    #[arg(long)]
    prior: Option<String>,
    /// Slab, e.g. `laplace:0.5`, `gaussian:1`, `cauchy:1`, `uniform:-1,1`.
    #[arg(long)]
    slab: Option<String>,
    /// `hmm`, `cvdv`, `longdiv` or `discrete`.
    #[arg(long)]
    algorithm: Option<String>,
    /// Grid accuracy for the discrete algorithm.
    #[arg(long)]
    m: Option<u32>,
    /// Carry guaranteed bounds through the computation.
    #[arg(long)]
    tracked: bool,
    /// TOML settings file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PosteriorArgs {
    /// Observations, whitespace or comma separated; stdin when omitted.
    input: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Select coordinates with inclusion probability at least this.
    #[arg(long)]
    threshold: Option<f64>,
    /// Recorded in the header to tie results to simulated data.
    #[arg(long)]
    seed: Option<u64>,
    /// Write zero for the elapsed time so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// `accuracy`, `a1`, `a2` or `a3`.
    #[arg(long, default_value = "accuracy")]
    design: Design,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scatter the nonzero coordinates instead of placing them first.
    #[arg(long)]
    permuted: bool,
    /// Observations, one per line; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the true means here.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ZscoreArgs {
    group_a: PathBuf,
    group_b: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SoftConvertArgs {
    input: PathBuf,
    #[arg(long, default_value = "disease state")]
    subset_type: String,
    /// Subset description to extract; repeat for each group.
    #[arg(long = "label", required = true)]
    labels: Vec<String>,
    /// Matrix file per label, in the same order.
    #[arg(long = "out", required = true)]
    outputs: Vec<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "hmm")]
    algorithms: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value = DEFAULT_PRIOR)]
    prior: PriorSpec,
    #[arg(long, default_value = DEFAULT_SLAB)]
    slab: String,
    #[arg(long, default_value = "accuracy")]
    design: Design,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long)]
    tracked: bool,
    /// Skip cells projected to run longer than this many seconds.
    #[arg(long, default_value_t = 1800.0)]
    time_limit: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// `accuracy`, `approx`, `a1`, `a2` or `a3`.
    name: ExperimentName,
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    replications: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = DEFAULT_PRIOR)]
    prior: PriorSpec,
    #[arg(long, default_value = DEFAULT_SLAB)]
    slab: String,
    #[arg(long, default_value = DEFAULT_ALGORITHM)]
    algorithm: Algorithm,
    #[arg(long)]
    permuted: bool,
    /// Gibbs chain lengths to score (approx only).
    #[arg(long, value_delimiter = ',')]
    gibbs: Vec<u64>,
    /// Also score variational Bayes (approx only).
    #[arg(long)]
    vb: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RepresentArgs {
    /// A model selection prior, e.g. `polytail:2` or `weights:1,2,1`.
    #[arg(long)]
    prior: String,
    /// Number of coordinates (taken from the weights when omitted).
    #[arg(long)]
    n: Option<usize>,
    /// Points in the search over the free moment.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    #[arg(long)]
    psd_tol: Option<f64>,
    #[arg(long)]
    range_tol: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    /// Observations; stdin when omitted.
    input: Option<PathBuf>,
    /// Approximate inclusion probabilities: one per line, or a posterior result file.
    #[arg(long)]
    approx: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
}

/// Settings after merging flags, the config file and defaults.
struct Resolved {
    prior: String,
    slab: String,
    algorithm: Algorithm,
    tracked: bool,
    cfg: Config,
}

fn resolve(m: &ModelArgs) -> Result<Resolved> {
    let cfg = Config::load(m.config.as_deref())?;
    let pick = |flag: &Option<String>, file: &Option<String>, default: &str| {
        flag.clone().or_else(|| file.clone()).unwrap_or_else(|| default.to_string())
    };
    let prior = pick(&m.prior, &cfg.prior, DEFAULT_PRIOR);
    let slab = pick(&m.slab, &cfg.slab, DEFAULT_SLAB);
    let mut algorithm: Algorithm = pick(&m.algorithm, &cfg.algorithm, DEFAULT_ALGORITHM)
        .parse()
        .map_err(|e| usage(format!("{e}")))?;
    match (algorithm, m.m, cfg.m) {
        (_, Some(0), _) | (_, None, Some(0)) => bail!(usage("--m must be at least 1")),
        (Algorithm::Discrete { .. }, Some(g), _) | (Algorithm::Discrete { .. }, None, Some(g)) => {
            algorithm = Algorithm::Discrete { m: g }
        }
        (_, Some(_), _) => bail!(usage("--m only applies to the discrete algorithm")),
        _ => {}
    }
    Ok(Resolved {
        prior,
        slab,
        algorithm,
        tracked: m.tracked || cfg.tracked.unwrap_or(false),
        cfg,
    })
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?)),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Numbers separated by whitespace or commas; `#` starts a comment.
fn read_values(mut r: impl Read) -> Result<Vec<f64>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let v: f64 = tok.parse().map_err(|_| usage(format!("line {}: not a number: {tok:?}", k + 1)))?;
            if !v.is_finite() {
                bail!(usage(format!("line {}: value must be finite, got {tok}", k + 1)));
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        bail!(usage("no observations in input"));
    }
    Ok(out)
}

fn write_values(mut w: impl Write, values: &[f64]) -> Result<()> {
    for v in values {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = open_output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn posterior(a: PosteriorArgs) -> Result<()> {
    let r = resolve(&a.model)?;
    let threshold = a.threshold.or(r.cfg.threshold).unwrap_or(spikeslab::posterior::SELECTION_THRESHOLD);
    if !(threshold > 0.0 && threshold <= 1.0) {
        bail!(usage(format!("threshold must be in (0, 1], got {threshold}")));
    }
    let seed = a.seed.or(r.cfg.seed);
    let timing = !a.no_timing && r.cfg.timing.unwrap_or(true);

    let y = read_values(open_input(a.input.as_deref())?)?;
    let prior = parse_prior(&r.prior, y.len())?;
    let slab = parse_slab(&r.slab)?;
    let opts = Options { tracked: r.tracked, ..Options::default() };
    let mut summary = compute_with(&prior, &slab, &y, r.algorithm, &opts)?;
    summary.selected = summary.q.iter().map(|&q| q >= threshold).collect();

    let mut header = OutputHeader::new(&summary, &r.prior, &r.slab, seed, threshold);
    if !timing {
        header = header.without_timing();
    }
    write_summary(open_output(a.output.as_deref())?, &header, &summary)?;
    eprintln!(
        "{}: n={}, selected {}, ln Q = {:.6}, {:.3} s",
        summary.algorithm,
        y.len(),
        summary.selected_count(),
        summary.log_marginal,
        summary.elapsed_secs
    );
    Ok(())
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let sim = simulate(&SimulationSpec { design: a.design, n: a.n, permuted: a.permuted }, a.seed)?;
    write_values(open_output(a.output.as_deref())?, &sim.y)?;
    if let Some(p) = a.truth {
        write_values(open_output(Some(&p))?, &sim.theta)?;
    }
    Ok(())
}

fn zscore_cmd(a: ZscoreArgs) -> Result<()> {
    let ga = read_matrix(open_input(Some(&a.group_a))?)?;
    let gb = read_matrix(open_input(Some(&a.group_b))?)?;
    write_values(open_output(a.output.as_deref())?, &zscores(&ga, &gb)?)
}

fn soft_convert_cmd(a: SoftConvertArgs) -> Result<()> {
    if a.labels.len() != a.outputs.len() {
        bail!(usage(format!("{} labels but {} output files", a.labels.len(), a.outputs.len())));
    }
    let labels: Vec<&str> = a.labels.iter().map(String::as_str).collect();
    let groups = soft_convert(open_input(Some(&a.input))?, &a.subset_type, &labels)?;
    for ((m, path), label) in groups.iter().zip(&a.outputs).zip(&labels) {
        write_matrix(m, open_output(Some(path))?)?;
        eprintln!("{label}: {} genes x {} samples -> {}", m.genes.len(), m.samples.len(), path.display());
    }
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let spec = BenchSpec {
        design: a.design,
        seed: a.seed,
        repeats: a.repeats,
        tracked: a.tracked,
        time_limit_secs: a.time_limit,
        ..BenchSpec::new(a.algorithms.clone(), a.sizes, a.prior, &a.slab)
    };
    let report = run_benchmark(&spec)?;
    for c in &report.cells {
        let t = c.elapsed_secs.map_or("-".into(), |t| format!("{t:.4}"));
        eprintln!("{:>14} n={:<8} {:?} {t}", c.algorithm.to_string(), c.n, c.status);
    }
    for alg in &a.algorithms {
        if let Some(s) = report.slope(*alg) {
            eprintln!("{alg}: log-log slope {s:.2}");
        }
    }
    write_json(a.output.as_deref(), &report)
}

fn experiment_cmd(a: ExperimentArgs) -> Result<()> {
    let mut spec = ExperimentSpec::new(a.name, a.sizes, a.prior, &a.slab);
    spec.replications = a.replications;
    spec.seed = a.seed;
    spec.algorithm = a.algorithm;
    spec.permuted = a.permuted;
    spec.gibbs_iterations = a.gibbs;
    spec.vb = a.vb.then(VbConfig::default);
    write_json(a.output.as_deref(), &run_experiment(&spec)?)
}

fn represent_cmd(a: RepresentArgs) -> Result<()> {
    let spec: PriorSpec = a.prior.parse()?;
    let n = match (a.n, a.prior.trim().strip_prefix("weights:")) {
        (Some(n), _) => n,
        (None, Some(w)) => w.split(',').count().saturating_sub(1),
        (None, None) => bail!(usage("--n is required unless the prior lists its weights")),
    };
    if n == 0 {
        bail!(usage("need n >= 1"));
    }
    let prior = spec.resolve(n)?.model_selection(n)?;
    let defaults = Tolerances::default();
    let tol = Tolerances {
        psd: a.psd_tol.unwrap_or(defaults.psd),
        range: a.range_tol.unwrap_or(defaults.range),
    };
    if a.grid < 2 {
        bail!(usage("--grid must be at least 2"));
    }
    let verdict = is_spike_slab(&prior, tol, a.grid);

    #[derive(Serialize)]
    struct Report<'a> {
        prior: String,
        n: usize,
        #[serde(flatten)]
        verdict: &'a spikeslab::representability::RepresentabilityVerdict,
    }
    write_json(None, &Report { prior: prior.describe(), n, verdict: &verdict })
}

/// Inclusion probabilities from a bare list or from a posterior result file.
fn read_q(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let (_, s) = read_summary(text.as_bytes())?;
        Ok(s.q)
    } else {
        read_values(text.as_bytes())
    }
}

fn compare_cmd(a: CompareArgs) -> Result<()> {
    let r = resolve(&a.model)?;
    let y = read_values(open_input(a.input.as_deref())?)?;
    let approx = read_q(&a.approx)?;
    if approx.len() != y.len() {
        bail!(usage(format!("{} observations but {} probabilities", y.len(), approx.len())));
    }
    let prior = parse_prior(&r.prior, y.len())?;
    let slab = parse_slab(&r.slab)?;
    let opts = Options { tracked: r.tracked, epsilon_bound: false, ..Options::default() };
    let exact = compute_with(&prior, &slab, &y, r.algorithm, &opts)?;
    let max_error = approx_error(&exact.q, &approx)?;
    let argmax = exact
        .q
        .iter()
        .zip(&approx)
        .map(|(e, q)| (e - q).abs())
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, d)| if d > best.1 { (i, d) } else { best })
        .0;

    #[derive(Serialize)]
    struct Report {
        n: usize,
        algorithm: String,
        max_error: f64,
        argmax: usize,
        mean_abs_error: f64,
    }
    let mean_abs_error = exact.q.iter().zip(&approx).map(|(e, q)| (e - q).abs()).sum::<f64>() / y.len() as f64;
    write_json(
        None,
        &Report { n: y.len(), algorithm: exact.algorithm, max_error, argmax, mean_abs_error },
    )
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match e.downcast_ref::<spikeslab::Error>() {
        Some(err) if err.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Posterior(a) => posterior(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Zscore(a) => zscore_cmd(a),
        Command::SoftConvert(a) => soft_convert_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Experiment(a) => experiment_cmd(a),
        Command::Represent(a) => represent_cmd(a),
        Command::Compare(a) => compare_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
