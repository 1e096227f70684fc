//! Experiment plumbing: data generators, the gene-expression Z-score
//! pipeline, selection metrics, benchmarks and result files.

pub mod bench;
pub mod experiment;
pub mod metrics;
pub mod output;
pub mod simulate;
pub mod spec;
pub mod zscore;

pub use experiment::{run_experiment, ExperimentName, ExperimentReport, ExperimentSpec};
pub use bench::{run_benchmark, slope, BenchCell, BenchReport, BenchSpec};
pub use metrics::{metrics, MetricsRow, MetricsSummary};
pub use output::{read_summary, write_summary, OutputHeader, OutputRecord};
pub use simulate::{simulate, Design, Simulation, SimulationSpec};
pub use spec::{parse_prior, parse_slab, PriorSpec};
pub use zscore::{read_matrix, soft_convert, write_matrix, zscores, ExpressionMatrix};
