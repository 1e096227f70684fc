//! Synthetic data from the sparse normal sequence model.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signal designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// 20% nonzero coordinates, all equal to `4 √(2 ln n)`.
    Accuracy,
    /// `s = 10` nonzeros drawn from `U(1, 10)`.
    A1,
    /// `s = ⌈n^{1/3}⌉` nonzeros equal to `2 √(2 ln n)`.
    A2,
    /// `s = 25` nonzeros drawn from `U(5, 10)`.
    A3,
}

impl std::str::FromStr for Design {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "accuracy" | "approx" => Ok(Design::Accuracy),
            "a1" => Ok(Design::A1),
            "a2" => Ok(Design::A2),
            "a3" => Ok(Design::A3),
            _ => Err(Error::Parse(format!("unknown design {s:?}"))),
        }
    }
}

impl Design {
    pub fn sparsity(self, n: usize) -> usize {
        let s = match self {
            Design::Accuracy => (0.2 * n as f64).round() as usize,
            Design::A1 => 10,
            Design::A2 => icbrt_ceil(n),
            Design::A3 => 25,
        };
        s.min(n)
    }
}

/// `⌈n^{1/3}⌉` without trusting `cbrt` at perfect cubes.
fn icbrt_ceil(n: usize) -> usize {
    let mut r = (n as f64).cbrt().round() as usize;
    while r > 0 && (r - 1).pow(3) >= n {
        r -= 1;
    }
    while r.pow(3) < n {
        r += 1;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub design: Design,
    pub n: usize,
    /// Scatter the support with a seeded shuffle instead of using the first
    /// `s` coordinates.
    pub permuted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub y: Vec<f64>,
    pub theta: Vec<f64>,
    /// Sorted indices of the nonzero coordinates.
    pub support: Vec<usize>,
    pub seed: u64,
}

pub fn simulate(spec: &SimulationSpec, seed: u64) -> Result<Simulation> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = spec.design.sparsity(n);
    let ln_n = (n as f64).ln();
    let uniform = |lo: f64, hi: f64| Uniform::new(lo, hi).expect("valid bounds");
    let values: Vec<f64> = match spec.design {
        Design::Accuracy => vec![4.0 * (2.0 * ln_n).sqrt(); s],
        Design::A2 => vec![2.0 * (2.0 * ln_n).sqrt(); s],
        Design::A1 => {
            let u = uniform(1.0, 10.0);
            (0..s).map(|_| u.sample(&mut rng)).collect()
        }
        Design::A3 => {
            let u = uniform(5.0, 10.0);
            (0..s).map(|_| u.sample(&mut rng)).collect()
        }
    };
    let mut support: Vec<usize> = (0..n).collect();
    if spec.permuted {
        support.shuffle(&mut rng);
    }
    support.truncate(s);
    let mut theta = vec![0.0; n];
    for (&i, &v) in support.iter().zip(&values) {
        theta[i] = v;
    }
    support.sort_unstable();
    let y = theta
        .iter()
        .map(|&t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            t + z
        })
        .collect();
    Ok(Simulation { y, theta, support, seed })
}
