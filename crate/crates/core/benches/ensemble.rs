use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rotor_core::dynamics::Observers;
use rotor_core::exec::Execution;
use rotor_core::scenarios::Scenario;
use rotor_core::stochastic::{run_ensemble, EnsembleSpec, NoiseConfig};

fn spec() -> EnsembleSpec {
    let mut sc = Scenario::harmonic().expect("harmonic scenario");
    sc.n_cycles = 1;
    sc.n_points = 512;
    EnsembleSpec {
        params: sc.calibration.params,
        grid: sc.grid().unwrap(),
        schedule: sc.schedule().unwrap(),
        dt: sc.dt().unwrap(),
        observers: Observers::every(200, sc.omega_tight().unwrap()),
        ground_tol: sc.ground_tol,
        initial_state: None,
        keep_trajectories: false,
    }
}

fn ensemble(c: &mut Criterion) {
    let spec = spec();
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for n in [4usize, 16] {
        let noise = NoiseConfig {
            seed: 1,
            n_trajectories: n,
            ..NoiseConfig::default()
        };
        group.bench_with_input(BenchmarkId::new("sequential", n), &noise, |b, noise| {
            b.iter(|| run_ensemble(&spec, noise, Execution::Sequential).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", n), &noise, |b, noise| {
            b.iter(|| run_ensemble(&spec, noise, Execution::Parallel { workers: None }).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble);
criterion_main!(benches);
