use ising_reram::solver::{
    apply_flips, compute_delta, derive_seed, map_problem, q_unit, select_flips,
};
use ising_reram::*;
use proptest::prelude::*;

/// Independent clause evaluation, no library helpers.
fn satisfies(cnf: &Cnf, bits: &[bool]) -> bool {
    cnf.clauses().iter().all(|c| {
        c.literals().iter().any(|l| {
            let d = l.to_dimacs();
            let v = bits[d.unsigned_abs() as usize - 1];
            if d > 0 {
                v
            } else {
                !v
            }
        })
    })
}

fn any_model(cnf: &Cnf) -> bool {
    let n = cnf.num_vars();
    (0u64..1 << n).any(|mask| {
        let bits: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        satisfies(cnf, &bits)
    })
}

fn arb_cnf() -> impl Strategy<Value = Cnf> {
    (3usize..=6, 1usize..=6, any::<u64>()).prop_map(|(n, m, seed)| random_3sat(n, m, seed).unwrap())
}

fn arb_graph() -> impl Strategy<Value = Graph> {
    (1usize..=8).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        let k = pairs.len();
        proptest::collection::vec(any::<bool>(), k).prop_map(move |keep| {
            let edges: Vec<_> = pairs
                .iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(&e, _)| e)
                .collect();
            Graph::from_edges(n, edges).unwrap()
        })
    })
}

fn arb_spins(n: usize) -> impl Strategy<Value = SpinState> {
    proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], n)
        .prop_map(|s| SpinState::new(s).unwrap())
}

fn fitted(base: DeviceConfig, n: usize) -> DeviceConfig {
    base.with_dims(n.max(1), 2 * n.max(1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ground_state_energy_decides_satisfiability(cnf in arb_cnf()) {
        let g = build_graph(&cnf);
        let p = HamiltonianParams::default();
        let (state, energy) = exhaustive_ground_state(&g, &p).unwrap();
        let target = -p.b_pen * cnf.num_clauses() as f64;
        let sat = any_model(&cnf);
        prop_assert_eq!(energy == target, sat);
        prop_assert!(energy >= target);
        if sat {
            let a = decode_solution(&g, &state, &cnf).expect("ground state decodes");
            prop_assert!(satisfies(&cnf, a.values()));
        }
    }

    #[test]
    fn ideal_delta_matches_oracle(
        (g, spins) in arb_graph().prop_flat_map(|g| { let n = g.num_nodes(); (Just(g), arb_spins(n)) })
    ) {
        let n = g.num_nodes();
        let adj = g.adjacency_matrix();
        let p = HamiltonianParams::default();
        let mut xb = Crossbar::new(fitted(DeviceConfig::ideal(), n), 3).unwrap();
        let m = map_problem(&adj, &spins, &mut xb).unwrap();
        let d = compute_delta(&mut xb, &m, &spins, &g.degrees(), &p, Tag::Init).unwrap();
        for (j, &v) in d.iter().enumerate() {
            prop_assert_eq!(v, delta_oracle(&g, &spins, &p, j).unwrap());
        }
    }

    #[test]
    fn in_window_noise_is_bounded(
        (g, spins, flips) in arb_graph().prop_flat_map(|g| {
            let n = g.num_nodes();
            (Just(g), arb_spins(n), proptest::collection::vec(0..n, 0..6))
        }),
        seed in any::<u64>(),
    ) {
        let n = g.num_nodes();
        let device = DeviceConfig { p_cell_success: 1.0, ..fitted(DeviceConfig::default(), n) };
        let p = HamiltonianParams::default();
        let bound = p.a_pen * g.max_degree() as f64 * device.tolerance / (device.g_state1 - device.g_state0);
        let mut xb = Crossbar::new(device, seed).unwrap();
        let mut spins = spins;
        let m = map_problem(&g.adjacency_matrix(), &spins, &mut xb).unwrap();
        for (t, &node) in flips.iter().enumerate() {
            apply_flips(&mut xb, &m, &mut spins, &[node], &g, Tag::Iteration(t as u32)).unwrap();
        }
        let d = compute_delta(&mut xb, &m, &spins, &g.degrees(), &p, Tag::Init).unwrap();
        for (j, &v) in d.iter().enumerate() {
            let exact = delta_oracle(&g, &spins, &p, j).unwrap();
            prop_assert!((v - exact).abs() <= bound + 1e-9, "node {j}: {v} vs {exact}, bound {bound}");
        }
    }

    #[test]
    fn independent_flips_move_energy_by_delta_sum(
        (g, spins) in arb_graph().prop_flat_map(|g| { let n = g.num_nodes(); (Just(g), arb_spins(n)) }),
        k in 1usize..=4,
    ) {
        let n = g.num_nodes();
        let p = HamiltonianParams::default();
        let cfg = SolverConfig { k, ..SolverConfig::default() };
        let mut xb = Crossbar::new(fitted(DeviceConfig::ideal(), n), 1).unwrap();
        let mut spins = spins;
        let m = map_problem(&g.adjacency_matrix(), &spins, &mut xb).unwrap();
        let d = compute_delta(&mut xb, &m, &spins, &g.degrees(), &p, Tag::Iteration(0)).unwrap();
        let before = hamiltonian_energy(&g, &spins, &p).unwrap();
        let th = q_unit(&d, None, 0, &cfg, 0.5);
        let flips = select_flips(&d, th.q, &cfg, &g);
        prop_assert!(flips.len() <= k);
        prop_assert!(g.is_independent(&flips));
        apply_flips(&mut xb, &m, &mut spins, &flips, &g, Tag::Iteration(0)).unwrap();
        let after = hamiltonian_energy(&g, &spins, &p).unwrap();
        let expected: f64 = flips.iter().map(|&j| d[j]).sum();
        prop_assert!((after - before - expected).abs() < 1e-9);
        if d.iter().any(|&x| x < 0.0) {
            prop_assert!(after < before, "greedy step must descend");
        }
    }

    #[test]
    fn dimacs_round_trip(cnf in arb_cnf()) {
        prop_assert_eq!(parse_dimacs(&cnf.to_dimacs()).unwrap(), cnf);
    }

    #[test]
    fn sat_verdicts_carry_models(cnf in arb_cnf(), seed in any::<u64>()) {
        let problem = Problem::new(cnf.clone());
        let device = problem.fitted_device(DeviceConfig { p_cell_success: 0.5, miss_spread: 40.0, ..DeviceConfig::default() });
        let cfg = SolverConfig { seed, restarts: 2, max_iters: 20, ..SolverConfig::default() };
        let r = solver::run_problem(&problem, &device, &cfg).unwrap();
        if let Some(a) = &r.assignment {
            prop_assert!(satisfies(&cnf, a.values()));
        } else {
            prop_assert_eq!(r.verdict, Verdict::Unknown);
        }
        let total: f64 = r.restarts.iter().map(|t| t.init_nj).sum();
        prop_assert!((total - r.energy.init_nj).abs() < 1e-9);
    }
}

#[test]
fn metropolis_acceptance_law() {
    use rand::{Rng, SeedableRng};
    let cfg = SolverConfig::default();
    let prior = [0.0, 1.0, 2.0, 3.0];
    let delta = [0.5, 1.0, 2.0];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let draws = 20_000;
    let t0 = q_unit(&delta, Some(&prior), 3, &cfg, 1.0).temperature;
    assert!(t0 > 0.0);
    for &d in &delta {
        let hits = (0..draws)
            .filter(|_| {
                let u = 1.0 - rng.random::<f64>();
                d < q_unit(&delta, Some(&prior), 3, &cfg, u).q
            })
            .count();
        let observed = hits as f64 / draws as f64;
        assert!(
            (observed - (-d / t0).exp()).abs() < 0.02,
            "Δ={d}: {observed}"
        );
    }
}

#[test]
fn no_false_sat_under_extreme_noise() {
    let unsat = bench::cnf_unsat8();
    let problem = Problem::new(unsat.clone());
    let device = problem.fitted_device(DeviceConfig {
        p_cell_success: 0.05,
        miss_spread: 60.0,
        energy_noise_sigma: 1.0,
        ..DeviceConfig::default()
    });
    for seed in 0..30 {
        let cfg = SolverConfig {
            seed,
            restarts: 3,
            max_iters: 30,
            ..SolverConfig::default()
        };
        let r = solver::run_problem(&problem, &device, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Unknown);
        assert!(r.assignment.is_none());
    }
}

#[test]
fn runs_are_deterministic_per_seed() {
    let problem = Problem::new(bench::cnf_2x());
    for seed in [0, 1, derive_seed(5, 9)] {
        let cfg = SolverConfig {
            seed,
            ..SolverConfig::default()
        };
        let a = solver::run_problem(&problem, &DeviceConfig::default(), &cfg).unwrap();
        let b = solver::run_problem(&problem, &DeviceConfig::default(), &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
    let suite = bench::BenchSuite {
        runs: 2,
        ..bench::BenchSuite::paper()
    };
    let x = bench::run_suite(
        &suite,
        &DeviceConfig::default(),
        &SolverConfig::default(),
        3,
    )
    .unwrap();
    let y = bench::run_suite(
        &suite,
        &DeviceConfig::default(),
        &SolverConfig::default(),
        3,
    )
    .unwrap();
    assert_eq!(x.to_csv(), y.to_csv());
}

#[test]
fn report_energies_trace_to_ledger_events() {
    let problem = Problem::new(bench::cnf_1x());
    let cfg = SolverConfig {
        seed: 4,
        max_iters: 8,
        ..SolverConfig::default()
    };
    let run =
        solver::run_restart(&problem, &DeviceConfig::default(), &cfg, 0, cfg.max_iters).unwrap();
    assert!(run.ledger.is_consistent());
    let (init, program, inference) = run.ledger.recompute();
    assert!((init - run.trace.init_nj).abs() < 1e-9);
    let it_program: f64 = run.trace.iterations.iter().map(|i| i.program_nj).sum();
    let it_inference: f64 = run.trace.iterations.iter().map(|i| i.inference_nj).sum();
    assert!((program - it_program).abs() < 1e-9);
    assert!((inference - it_inference).abs() < 1e-9);
}
