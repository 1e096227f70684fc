use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spikeslab::harness::{parse_prior, simulate, Design, SimulationSpec};
use spikeslab::posterior::{inclusion, Algorithm, LikelihoodPair, Options};
use spikeslab::SlabModel;

fn inputs(n: usize) -> (Vec<f64>, Vec<f64>) {
    let sim = simulate(&SimulationSpec { design: Design::Accuracy, n, permuted: false }, 0).unwrap();
    let slab = SlabModel::laplace(1.0).unwrap();
    sim.y
        .iter()
        .map(|&y| {
            let p = LikelihoodPair::from_slab(&slab, y).unwrap();
            (p.ln_psi, p.ln_phi)
        })
        .unzip()
}

fn run(c: &mut Criterion, name: &str, alg: Algorithm, sizes: &[usize]) {
    let mut g = c.benchmark_group(name);
    g.sample_size(10);
    let opts = Options { epsilon_bound: false, ..Options::default() };
    for &n in sizes {
        let prior = parse_prior("beta:1,n+1", n).unwrap();
        let (ln_psi, ln_phi) = inputs(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| inclusion(&prior, &ln_psi, &ln_phi, alg, &opts).unwrap())
        });
    }
    g.finish();
}

fn algorithms(c: &mut Criterion) {
    run(c, "cvdv", Algorithm::Cvdv, &[100, 200, 400]);
    run(c, "hmm", Algorithm::Hmm, &[250, 500, 1000]);
    run(c, "discrete_m20", Algorithm::Discrete { m: 20 }, &[1000, 4000, 16000]);
}

criterion_group!(benches, algorithms);
criterion_main!(benches);
