//! Settings file. Every key is optional; command-line flags override it and
//! built-in defaults fill whatever neither sets.
//!
//! ```toml
//! prior = "beta:1,n+1"
//! slab = "laplace:0.5"
//! algorithm = "discrete"
//! m = 40
//! tracked = true
//! threshold = 0.5
//! seed = 7
//! timing = false
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

pub const DEFAULT_PRIOR: &str = "beta:1,n+1";
pub const DEFAULT_SLAB: &str = "laplace:1";
pub const DEFAULT_ALGORITHM: &str = "hmm";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub prior: Option<String>,
    pub slab: Option<String>,
    pub algorithm: Option<String>,
    pub m: Option<u32>,
    pub tracked: Option<bool>,
    pub threshold: Option<f64>,
    pub seed: Option<u64>,
    /// Record wall time in result headers.
    pub timing: Option<bool>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| crate::usage(format!("{}: {e}", path.display())))
    }
}
