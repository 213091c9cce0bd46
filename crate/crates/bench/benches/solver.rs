use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ising_reram::bench::{kernel_energy_report, run_suite, BenchSuite};
use ising_reram::solver::{compute_delta, map_problem};
use ising_reram::*;

fn delta_readout(c: &mut Criterion) {
    let mut group = c.benchmark_group("compute_delta");
    for m in [2usize, 6, 10] {
        let problem = Problem::new(random_3sat(8, m, 3).unwrap());
        let n = problem.num_nodes();
        let spins = SpinState::from_mask(0x5555_5555 & ((1 << n) - 1), n);
        let mut xb = Crossbar::new(problem.fitted_device(DeviceConfig::default()), 1).unwrap();
        let mapping = map_problem(&problem.adjacency, &spins, &mut xb).unwrap();
        let params = HamiltonianParams::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                compute_delta(
                    &mut xb,
                    &mapping,
                    &spins,
                    &problem.degrees,
                    &params,
                    Tag::Iteration(0),
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    let cfg = SolverConfig::default();
    for (label, cnf) in BenchSuite::paper().instances {
        group.bench_function(label, |b| {
            b.iter(|| run(&cnf, &DeviceConfig::default(), &cfg).unwrap())
        });
    }
    let problem = Problem::new(random_3sat(8, 10, 11).unwrap());
    let device = problem.fitted_device(DeviceConfig::default());
    group.bench_function("random n=8 m=10", |b| {
        b.iter(|| solver::run_problem(&problem, &device, &cfg).unwrap())
    });
    group.finish();
}

fn harness(c: &mut Criterion) {
    c.bench_function("benchmark suite", |b| {
        b.iter(|| {
            run_suite(
                &BenchSuite::paper(),
                &DeviceConfig::default(),
                &SolverConfig::default(),
                0,
            )
            .unwrap()
        })
    });
    c.bench_function("kernel report 10 trials", |b| {
        b.iter(|| kernel_energy_report(&DeviceConfig::default(), 10, 0).unwrap())
    });
}

fn ground_state(c: &mut Criterion) {
    let g = build_graph(&bench::cnf_0x());
    c.bench_function("exhaustive ground state 6 nodes", |b| {
        b.iter(|| exhaustive_ground_state(&g, &HamiltonianParams::default()).unwrap())
    });
}

criterion_group!(benches, delta_readout, solve, harness, ground_state);
criterion_main!(benches);
