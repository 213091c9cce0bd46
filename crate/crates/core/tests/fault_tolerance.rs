//! Single-pair faults on every adjacency one of the benchmark instances,
//! over every spin configuration.

use ising_reram::bench::BenchSuite;
use ising_reram::solver::{compute_delta, map_problem};
use ising_reram::*;

#[derive(Clone, Copy, Debug)]
enum Fault {
    BothLow,
    BothHigh,
    Inverted,
}

fn check_instance(cnf: &Cnf) -> usize {
    let problem = Problem::new(cnf.clone());
    let n = problem.num_nodes();
    let device = problem.fitted_device(DeviceConfig::ideal());
    let p = HamiltonianParams::default();
    let (g0, g1) = (device.g_state0, device.g_state1);
    let mut checked = 0;
    for mask in 0u64..1 << n {
        let spins = SpinState::from_mask(mask, n);
        let mut clean_xb = Crossbar::new(device.clone(), 0).unwrap();
        let m = map_problem(&problem.adjacency, &spins, &mut clean_xb).unwrap();
        let clean =
            compute_delta(&mut clean_xb, &m, &spins, &problem.degrees, &p, Tag::Init).unwrap();
        for i in 0..n {
            for j in 0..n {
                if problem.adjacency.get(i, j) == 0 {
                    continue;
                }
                for fault in [Fault::BothLow, Fault::BothHigh, Fault::Inverted] {
                    let mut xb = Crossbar::new(device.clone(), 0).unwrap();
                    map_problem(&problem.adjacency, &spins, &mut xb).unwrap();
                    let (gp, gn) = match (fault, spins.get(j)) {
                        (Fault::BothLow, _) => (g0, g0),
                        (Fault::BothHigh, _) => (g1, g1),
                        (Fault::Inverted, 1) => (g0, g1),
                        (Fault::Inverted, _) => (g1, g0),
                    };
                    xb.inject_fault(m.row(i), m.col_pos(j), gp, Tag::Init)
                        .unwrap();
                    xb.inject_fault(m.row(i), m.col_neg(j), gn, Tag::Init)
                        .unwrap();
                    let faulty =
                        compute_delta(&mut xb, &m, &spins, &problem.degrees, &p, Tag::Init)
                            .unwrap();

                    // the term s_i s_j that row i contributes to column j's readout
                    let term = (spins.get(i) * spins.get(j)) as f64;
                    let shift = match fault {
                        Fault::BothLow | Fault::BothHigh => p.a_pen / 2.0 * term,
                        Fault::Inverted => p.a_pen * term,
                    };
                    for k in 0..n {
                        if k == j {
                            assert_eq!(
                                faulty[k],
                                clean[k] + shift,
                                "{fault:?} at ({i},{j}) mask {mask:b}"
                            );
                        } else {
                            assert_eq!(
                                faulty[k], clean[k],
                                "{fault:?} at ({i},{j}) leaked into {k}"
                            );
                        }
                    }
                    // the faulty readout term has magnitude 0 for stuck pairs and
                    // the opposite sign for inverted ones
                    let raw_clean = -2.0 / p.a_pen * (clean[j] - p.b_pen * spins.get(j) as f64);
                    let raw_faulty = -2.0 / p.a_pen * (faulty[j] - p.b_pen * spins.get(j) as f64);
                    let delta_term = raw_faulty - raw_clean;
                    match fault {
                        Fault::BothLow | Fault::BothHigh => assert_eq!(delta_term, -term),
                        Fault::Inverted => assert_eq!(delta_term, -2.0 * term),
                    }
                    checked += 1;
                }
            }
        }
    }
    checked
}

#[test]
fn pair_faults_attenuate_and_only_inversions_flip_sign() {
    let suite = BenchSuite::paper();
    let mut total = 0;
    for (_, cnf) in &suite.instances {
        total += check_instance(cnf);
    }
    assert!(total > 0);
}
