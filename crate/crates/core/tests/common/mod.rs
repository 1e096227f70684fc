//! Random small instances shared by the oracle comparisons.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use spikeslab::posterior::{LikelihoodPair, Prior};
use spikeslab::{ModelSelectionPrior, PriorFamily, SlabModel};
use spikeslab_oracle::OraclePrior;

pub struct Instance {
    pub prior: Prior,
    pub oracle: OraclePrior,
    pub ln_psi: Vec<f64>,
    pub ln_phi: Vec<f64>,
    #[allow(dead_code)]
    pub label: String,
}

pub fn instance(rng: &mut ChaCha8Rng, k: usize) -> Instance {
    let n = rng.random_range(1..=14);
    let slab = if k % 2 == 0 {
        SlabModel::laplace(rng.random_range(0.2..2.0)).unwrap()
    } else {
        SlabModel::gaussian(rng.random_range(0.5..10.0)).unwrap()
    };
    let y: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            if rng.random_bool(0.3) { z + rng.random_range(-6.0..6.0) } else { z }
        })
        .collect();
    let pairs: Vec<LikelihoodPair> = y.iter().map(|&v| LikelihoodPair::from_slab(&slab, v).unwrap()).collect();
    let (prior, oracle) = match k % 3 {
        0 => {
            let (kappa, lambda) = (rng.random_range(0.3..3.0), rng.random_range(0.3..(n as f64 + 2.0)));
            (
                Prior::ModelSelection(ModelSelectionPrior::new(PriorFamily::BetaBinomial { kappa, lambda }, n).unwrap()),
                OraclePrior::BetaBinomial { kappa, lambda },
            )
        }
        1 => {
            let w: Vec<f64> = (0..=n).map(|_| rng.random_range(0.0..1.0f64).powi(2) + 1e-3).collect();
            let total: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|v| v / total).collect();
            (Prior::ModelSelection(ModelSelectionPrior::from_weights(&w).unwrap()), OraclePrior::Weights(w))
        }
        _ => {
            let p = rng.random_range(0.02..0.98);
            (
                Prior::ModelSelection(ModelSelectionPrior::new(PriorFamily::Binomial { p }, n).unwrap()),
                OraclePrior::Binomial { p },
            )
        }
    };
    Instance {
        label: format!("#{k} n={n} {} {}", prior.describe(), slab.name()),
        prior,
        oracle,
        ln_psi: pairs.iter().map(|p| p.ln_psi).collect(),
        ln_phi: pairs.iter().map(|p| p.ln_phi).collect(),
    }
}

pub fn instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..50).map(|k| instance(&mut rng, k)).collect()
}
