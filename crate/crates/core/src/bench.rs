//! Benchmark harness: kernel energy profiling, the four two-clause
//! benchmark instances, accuracy/energy suite runs, and the additive-energy
//! comparison.

use serde::{Deserialize, Serialize};

use crate::cnf::Cnf;
use crate::device::{Crossbar, DeviceConfig, Tag};
use crate::ising::{kernel_decompose, IsingGraph};
use crate::solver::{derive_seed, run_problem, run_restart, Problem, SolverConfig, SolverError};

/// Sub-matrix kinds: the clause triangle on the diagonal and the
/// inter-clause blocks with one, two or three conflict edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Kernel {
    #[serde(rename = "core")]
    Core,
    #[serde(rename = "1-inconn")]
    Inconn1,
    #[serde(rename = "2-inconn")]
    Inconn2,
    #[serde(rename = "3-inconn")]
    Inconn3,
}

impl Kernel {
    pub const ALL: [Kernel; 4] = [
        Kernel::Core,
        Kernel::Inconn1,
        Kernel::Inconn2,
        Kernel::Inconn3,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Kernel::Core => "core",
            Kernel::Inconn1 => "1-inconn",
            Kernel::Inconn2 => "2-inconn",
            Kernel::Inconn3 => "3-inconn",
        }
    }

    pub fn inconn(edges: usize) -> Option<Kernel> {
        match edges {
            1 => Some(Kernel::Inconn1),
            2 => Some(Kernel::Inconn2),
            3 => Some(Kernel::Inconn3),
            _ => None,
        }
    }

    /// 3×3 block of adjacency ones, `(row node, column node)`. Inter-clause
    /// blocks are taken from the benchmark instance with that many
    /// interconnections (clause 0 rows, clause 1 columns).
    pub fn block(self) -> Vec<(usize, usize)> {
        let ones = |cnf: Cnf, rows: usize, cols: usize| {
            let g = Problem::new(cnf).adjacency;
            let mut out = Vec::new();
            for r in 0..3 {
                for c in 0..3 {
                    if g.get(3 * rows + r, 3 * cols + c) == 1 {
                        out.push((r, c));
                    }
                }
            }
            out
        };
        match self {
            Kernel::Core => ones(cnf_0x(), 0, 0),
            Kernel::Inconn1 => ones(cnf_1x(), 0, 1),
            Kernel::Inconn2 => ones(cnf_2x(), 0, 1),
            Kernel::Inconn3 => ones(cnf_3x(), 0, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "initialize")]
    Initialize,
    #[serde(rename = "program-iteration")]
    ProgramIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEnergyRow {
    pub kernel: Kernel,
    pub phase: Phase,
    pub mean_nj: f64,
    pub std_nj: f64,
    pub samples: usize,
}

/// `(1 ∨ 2 ∨ 3) ∧ (4 ∨ 5 ∨ ¬6)`
pub fn cnf_0x() -> Cnf {
    Cnf::from_triples(6, &[[1, 2, 3], [4, 5, -6]])
}

/// `(1 ∨ ¬2 ∨ 3) ∧ (2 ∨ 3 ∨ 4)`
pub fn cnf_1x() -> Cnf {
    Cnf::from_triples(4, &[[1, -2, 3], [2, 3, 4]])
}

/// `(1 ∨ 2 ∨ ¬3) ∧ (¬2 ∨ 3 ∨ ¬4)`
pub fn cnf_2x() -> Cnf {
    Cnf::from_triples(4, &[[1, 2, -3], [-2, 3, -4]])
}

/// `(1 ∨ 2 ∨ 3) ∧ (¬1 ∨ ¬2 ∨ ¬3)`
pub fn cnf_3x() -> Cnf {
    Cnf::from_triples(3, &[[1, 2, 3], [-1, -2, -3]])
}

/// The eight polarity combinations over variables 1..3; unsatisfiable.
pub fn cnf_unsat8() -> Cnf {
    let triples: Vec<[i32; 3]> = (0..8)
        .map(|mask: i32| {
            let sign = |bit: i32, v: i32| if mask >> bit & 1 == 1 { -v } else { v };
            [sign(0, 1), sign(1, 2), sign(2, 3)]
        })
        .collect();
    Cnf::from_triples(3, &triples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSuite {
    pub instances: Vec<(String, Cnf)>,
    pub runs: usize,
    pub iters: usize,
    pub restarts_per_run: usize,
}

impl BenchSuite {
    /// 0-X … 3-X, 10 runs of at most 10 iterations each.
    pub fn paper() -> Self {
        BenchSuite {
            instances: vec![
                ("CNF 0-X".into(), cnf_0x()),
                ("CNF 1-X".into(), cnf_1x()),
                ("CNF 2-X".into(), cnf_2x()),
                ("CNF 3-X".into(), cnf_3x()),
            ],
            runs: 10,
            iters: 10,
            restarts_per_run: 1,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "paper" => Some(Self::paper()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub instance: String,
    pub iter_acc: f64,
    pub exec_energy_nj: f64,
    pub infer_energy_nj: f64,
    pub sat_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub instance: usize,
    pub run: usize,
    pub sat: bool,
    pub writing_iterations: usize,
    pub accurate_iterations: usize,
    pub execute_nj: f64,
    pub inference_nj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rows: Vec<AccuracyRow>,
    pub overall: AccuracyRow,
    pub runs: Vec<RunSummary>,
}

impl SuiteReport {
    /// Instance rows followed by the overall row.
    pub fn all_rows(&self) -> impl Iterator<Item = &AccuracyRow> {
        self.rows.iter().chain(std::iter::once(&self.overall))
    }

    pub fn to_csv(&self) -> String {
        write_csv(self.all_rows())
    }
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Energy to write each kernel into a fresh array, and to flip one of its
/// columns afterwards, averaged over `trials` random spin assignments.
///
/// A core column flip rewrites two adjacency pairs; an inter-clause column
/// holds a single adjacency and rewrites one.
pub fn kernel_energy_report(
    device: &DeviceConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<KernelEnergyRow>, SolverError> {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let trials = trials.max(1);
    let mut init_rows = Vec::new();
    let mut flip_rows = Vec::new();
    for (k, kernel) in Kernel::ALL.into_iter().enumerate() {
        let block = kernel.block();
        let mut columns: Vec<usize> = block.iter().map(|&(_, c)| c).collect();
        columns.dedup();
        columns.sort_unstable();
        columns.dedup();

        let mut init = Vec::with_capacity(trials);
        let mut flip = Vec::with_capacity(trials);
        for t in 0..trials {
            let stream = (k as u64) << 32 | t as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2 * stream));
            let mut xb = Crossbar::new(device.clone(), derive_seed(seed, 2 * stream + 1))?;
            let mut spins: [i8; 3] = [0; 3];
            for s in &mut spins {
                *s = if rng.random_bool(0.5) { 1 } else { -1 };
            }
            for &(r, c) in &block {
                xb.program_pair(r, 2 * c + 1, 2 * c, spins[c], Tag::Init)?;
            }
            init.push(xb.ledger().init_nj);

            let c = columns[rng.random_range(0..columns.len())];
            spins[c] = -spins[c];
            for &(r, _) in block.iter().filter(|&&(_, bc)| bc == c) {
                xb.program_pair(r, 2 * c + 1, 2 * c, spins[c], Tag::Iteration(0))?;
            }
            flip.push(xb.ledger().program_nj);
        }
        for (phase, samples, out) in [
            (Phase::Initialize, &init, &mut init_rows),
            (Phase::ProgramIteration, &flip, &mut flip_rows),
        ] {
            let (mean_nj, std_nj) = mean_std(samples);
            out.push(KernelEnergyRow {
                kernel,
                phase,
                mean_nj,
                std_nj,
                samples: samples.len(),
            });
        }
    }
    init_rows.extend(flip_rows);
    Ok(init_rows)
}

pub fn kernels_csv(rows: &[KernelEnergyRow]) -> String {
    write_csv(rows.iter())
}

fn write_csv<'a, T: Serialize + 'a>(rows: impl Iterator<Item = &'a T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("CSV is UTF-8")
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}

/// Runs every instance `suite.runs` times with at most `suite.iters`
/// iterations per run and aggregates accuracy, energy and verdicts.
/// Run seeds derive from `(seed, instance, run)`.
pub fn run_suite(
    suite: &BenchSuite,
    device: &DeviceConfig,
    solver: &SolverConfig,
    seed: u64,
) -> Result<SuiteReport, SolverError> {
    let mut runs = Vec::new();
    for (i, (_, cnf)) in suite.instances.iter().enumerate() {
        let problem = Problem::new(cnf.clone());
        for r in 0..suite.runs {
            let cfg = SolverConfig {
                max_iters: suite.iters,
                restarts: suite.restarts_per_run,
                seed: derive_seed(seed, (i as u64) << 32 | r as u64),
                ..solver.clone()
            };
            let report = run_problem(&problem, device, &cfg)?;
            let writing: Vec<_> = report
                .iterations()
                .filter(|it| it.cells_targeted > 0)
                .collect();
            runs.push(RunSummary {
                instance: i,
                run: r,
                sat: report.is_sat(),
                writing_iterations: writing.len(),
                accurate_iterations: writing.iter().filter(|it| it.iteration_accurate).count(),
                execute_nj: report.energy.execute_nj,
                inference_nj: report.energy.inference_nj,
            });
        }
    }
    let summarize = |label: &str, subset: Vec<&RunSummary>| {
        let writing: usize = subset.iter().map(|r| r.writing_iterations).sum();
        let accurate: usize = subset.iter().map(|r| r.accurate_iterations).sum();
        let n = subset.len().max(1) as f64;
        AccuracyRow {
            instance: label.to_string(),
            iter_acc: if writing == 0 {
                1.0
            } else {
                accurate as f64 / writing as f64
            },
            exec_energy_nj: subset.iter().map(|r| r.execute_nj).sum::<f64>() / n,
            infer_energy_nj: subset.iter().map(|r| r.inference_nj).sum::<f64>() / n,
            sat_rate: subset.iter().filter(|r| r.sat).count() as f64 / n,
        }
    };
    let rows = suite
        .instances
        .iter()
        .enumerate()
        .map(|(i, (label, _))| summarize(label, runs.iter().filter(|r| r.instance == i).collect()))
        .collect();
    let overall = summarize("Overall", runs.iter().collect());
    Ok(SuiteReport {
        rows,
        overall,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sublinearity {
    /// Execute energy (initialization + reprogramming) of the actual run.
    pub measured_nj: f64,
    /// Sum of the kernel means composing the run, measured with full-swing
    /// (nominal-centre) writes.
    pub predicted_nj: f64,
    pub iterations: usize,
    pub flips: usize,
}

/// Trials behind the kernel means of the additive prediction.
pub const PREDICTION_TRIALS: usize = 200;

/// Compares one run's execute energy against the additive prediction built
/// from kernel means: one core initialization per clause, one inter-clause
/// initialization per connected clause pair, and per flipped node one core
/// column flip plus one single-adjacency flip per conflict edge.
pub fn sublinearity_check(
    instance: &Cnf,
    device: &DeviceConfig,
    seed: u64,
    iterations: usize,
) -> Result<Sublinearity, SolverError> {
    let problem = Problem::new(instance.clone());
    let cfg = SolverConfig {
        seed,
        restarts: 1,
        ..SolverConfig::default()
    };
    let run = run_restart(&problem, device, &cfg, 0, iterations)?;

    let full_swing = DeviceConfig {
        shortcut_bias: false,
        ..device.clone()
    };
    let rows = kernel_energy_report(&full_swing, PREDICTION_TRIALS, derive_seed(seed, u64::MAX))?;
    let mean = |kernel: Kernel, phase: Phase| {
        rows.iter()
            .find(|r| r.kernel == kernel && r.phase == phase)
            .map(|r| r.mean_nj)
            .expect("every kernel is profiled")
    };
    let inconn_flip = [Kernel::Inconn1, Kernel::Inconn2, Kernel::Inconn3]
        .iter()
        .map(|&k| mean(k, Phase::ProgramIteration))
        .sum::<f64>()
        / 3.0;

    let profile = kernel_decompose(&problem.graph)?;
    let mut predicted = profile.core_count as f64 * mean(Kernel::Core, Phase::Initialize);
    for edges in 1..=3 {
        let kernel = Kernel::inconn(edges).expect("1..=3");
        predicted += profile.inconn.count(edges) as f64 * mean(kernel, Phase::Initialize);
    }
    let core_flip = mean(Kernel::Core, Phase::ProgramIteration);
    let mut flips = 0;
    for it in &run.trace.iterations {
        for &j in &it.flipped {
            flips += 1;
            predicted += core_flip + problem.graph.conflict_degree(j) as f64 * inconn_flip;
        }
    }
    Ok(Sublinearity {
        measured_nj: run.ledger.execute_nj(),
        predicted_nj: predicted,
        iterations: run.trace.iterations.len(),
        flips,
    })
}

/// Clause-pair composition of an instance, for reports.
pub fn kernel_counts(graph: &IsingGraph) -> Result<[(Kernel, usize); 4], SolverError> {
    let p = kernel_decompose(graph)?;
    Ok([
        (Kernel::Core, p.core_count),
        (Kernel::Inconn1, p.inconn.one),
        (Kernel::Inconn2, p.inconn.two),
        (Kernel::Inconn3, p.inconn.three),
    ])
}
