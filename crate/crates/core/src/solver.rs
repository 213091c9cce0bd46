//! Crossbar-in-the-loop spin-flip solver.
//!
//! The adjacency matrix is written into the crossbar with every column
//! signed by its node's spin and split into a differential column pair.
//! Each iteration drives the rows with the spin vector, subtracts the pair
//! currents to get the signed neighbour sum of every node, turns that into
//! the exact energy change of flipping the node, and picks up to `k`
//! independent nodes below a threshold `q`. Greedy descent runs while any
//! improving flip exists; otherwise `q` becomes a Metropolis threshold with
//! a geometrically cooled temperature. Flipped nodes are updated in the spin
//! store and their column pairs are reprogrammed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{Assignment, Cnf};
use crate::device::{CellState, Crossbar, DeviceConfig, DeviceError, EnergyLedger, Tag};
use crate::ising::{
    build_graph, decode_solution, hamiltonian_energy, AdjacencyMatrix, Graph, HamiltonianParams,
    IsingError, IsingGraph, SpinState,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Ising(#[from] IsingError),
    #[error("problem needs {rows_needed} rows and {cols_needed} columns, array is {rows}x{cols} (multi-tile mapping is not supported)")]
    DoesNotFit {
        rows_needed: usize,
        cols_needed: usize,
        rows: usize,
        cols: usize,
    },
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
}

/// Which end of the candidate list is taken first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Control {
    /// Most negative Δ first.
    #[default]
    Min,
    /// Largest Δ first.
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Maximum flips per iteration.
    pub k: usize,
    pub control: Control,
    /// Initial temperature, in units of the previous iteration's Δ spread.
    pub t0: f64,
    /// Geometric cooling factor per iteration.
    pub alpha: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub hamiltonian: HamiltonianParams,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 1,
            control: Control::Min,
            t0: 1.0,
            alpha: 0.95,
            max_iters: 100,
            restarts: 10,
            hamiltonian: HamiltonianParams::default(),
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let fail = |m: &str| Err(SolverError::InvalidConfig(m.to_string()));
        if self.k == 0 {
            return fail("k must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail("alpha must lie in (0, 1)");
        }
        if self.max_iters == 0 {
            return fail("max_iters must be at least 1");
        }
        if self.restarts == 0 {
            return fail("restarts must be at least 1");
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return fail("t0 must be positive");
        }
        self.hamiltonian.validate()?;
        Ok(())
    }
}

/// Placement of an `N`-node problem on the array: node `j` owns row
/// `row_offset + j` and the column pair `(col_offset + 2j + 1, col_offset + 2j)`
/// for its positive and negative weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossbarMapping {
    pub nodes: usize,
    pub row_offset: usize,
    pub col_offset: usize,
}

impl CrossbarMapping {
    pub fn row(&self, node: usize) -> usize {
        self.row_offset + node
    }

    pub fn col_pos(&self, node: usize) -> usize {
        self.col_offset + 2 * node + 1
    }

    pub fn col_neg(&self, node: usize) -> usize {
        self.col_offset + 2 * node
    }

    /// Row drive vector for the whole array: spins on mapped rows, 0 elsewhere.
    pub fn drive(&self, spins: &SpinState, rows: usize) -> Vec<i8> {
        let mut d = vec![0; rows];
        for j in 0..self.nodes {
            d[self.row(j)] = spins.get(j);
        }
        d
    }
}

/// Writes `s_j * adj(i, j)` into row `i`, column pair `j`, for every
/// adjacency one. Zero entries are left in State 0.
pub fn map_problem(
    adj: &AdjacencyMatrix,
    spins: &SpinState,
    xb: &mut Crossbar,
) -> Result<CrossbarMapping, SolverError> {
    map_problem_at(adj, spins, xb, 0, 0)
}

pub fn map_problem_at(
    adj: &AdjacencyMatrix,
    spins: &SpinState,
    xb: &mut Crossbar,
    row_offset: usize,
    col_offset: usize,
) -> Result<CrossbarMapping, SolverError> {
    let n = adj.size();
    if spins.len() != n {
        return Err(IsingError::SpinLength {
            expected: n,
            found: spins.len(),
        }
        .into());
    }
    let (rows_needed, cols_needed) = (row_offset + n, col_offset + 2 * n);
    if rows_needed > xb.rows() || cols_needed > xb.cols() {
        return Err(SolverError::DoesNotFit {
            rows_needed,
            cols_needed,
            rows: xb.rows(),
            cols: xb.cols(),
        });
    }
    let mapping = CrossbarMapping {
        nodes: n,
        row_offset,
        col_offset,
    };
    for i in 0..n {
        for j in 0..n {
            if adj.get(i, j) == 1 {
                xb.program_pair(
                    mapping.row(i),
                    mapping.col_pos(j),
                    mapping.col_neg(j),
                    spins.get(j),
                    Tag::Init,
                )?;
            }
        }
    }
    Ok(mapping)
}

/// Reads back the logical weight of row `i`, column pair `j`. `None` when the
/// pair is not one of the three valid encodings.
pub fn read_logical(
    xb: &Crossbar,
    mapping: &CrossbarMapping,
    i: usize,
    j: usize,
) -> Result<Option<i8>, DeviceError> {
    let pos = xb.classify(mapping.row(i), mapping.col_pos(j))?;
    let neg = xb.classify(mapping.row(i), mapping.col_neg(j))?;
    Ok(match (pos, neg) {
        (CellState::State1, CellState::State0) => Some(1),
        (CellState::State0, CellState::State1) => Some(-1),
        (CellState::State0, CellState::State0) => Some(0),
        _ => None,
    })
}

/// Normalised differential readout per node,
/// `(I_pos - I_neg) / (v_read * (g1 - g0))`, which equals
/// `s_j * Σ_i adj(i, j) s_i` on an ideal array.
pub fn differential_readout(
    xb: &mut Crossbar,
    mapping: &CrossbarMapping,
    spins: &SpinState,
    tag: Tag,
) -> Result<Vec<f64>, SolverError> {
    let drive = mapping.drive(spins, xb.rows());
    let currents = xb.read_columns(&drive, tag)?;
    let cfg = xb.config();
    let scale = cfg.v_read * (cfg.g_state1 - cfg.g_state0);
    Ok((0..mapping.nodes)
        .map(|j| (currents[mapping.col_pos(j)] - currents[mapping.col_neg(j)]) / scale)
        .collect())
}

/// Flip energy per node from the crossbar readout plus the digitally applied
/// degree and reward terms:
/// `Δ_j = -(a_pen / 2) (raw_j + s_j deg_j) + b_pen s_j`.
pub fn compute_delta(
    xb: &mut Crossbar,
    mapping: &CrossbarMapping,
    spins: &SpinState,
    degrees: &[usize],
    params: &HamiltonianParams,
    tag: Tag,
) -> Result<Vec<f64>, SolverError> {
    let raw = differential_readout(xb, mapping, spins, tag)?;
    Ok(delta_from_readout(&raw, spins, degrees, params))
}

pub fn delta_from_readout(
    raw: &[f64],
    spins: &SpinState,
    degrees: &[usize],
    params: &HamiltonianParams,
) -> Vec<f64> {
    raw.iter()
        .enumerate()
        .map(|(j, &r)| {
            let s = spins.get(j) as f64;
            -(params.a_pen / 2.0) * (r + s * degrees[j] as f64) + params.b_pen * s
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Greedy,
    Anneal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub q: f64,
    pub mode: Mode,
    /// Annealing temperature; 0 in greedy mode.
    pub temperature: f64,
}

/// Population standard deviation; `None` for empty or constant input.
fn spread(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (var > 0.0).then(|| var.sqrt())
}

/// Dynamic threshold. `q = 0` while an improving flip exists; otherwise
/// `q = -T_t ln u` with `T_t = t0 * alpha^t * σ(prior Δ)`, so a node with
/// `Δ > 0` passes with probability `exp(-Δ / T_t)`. `u` must lie in (0, 1].
pub fn q_unit(
    delta: &[f64],
    prior: Option<&[f64]>,
    t: usize,
    cfg: &SolverConfig,
    u: f64,
) -> Threshold {
    if delta.iter().any(|&d| d < 0.0) {
        return Threshold {
            q: 0.0,
            mode: Mode::Greedy,
            temperature: 0.0,
        };
    }
    let sigma = prior.and_then(spread).unwrap_or(cfg.hamiltonian.b_pen);
    let temperature = cfg.t0 * cfg.alpha.powi(t as i32) * sigma;
    Threshold {
        // -0.0 when u == 1
        q: -temperature * u.ln() + 0.0,
        mode: Mode::Anneal,
        temperature,
    }
}

/// Candidates `Δ_i < q`, ordered by the control function (ties to the lower
/// id), greedily filtered to an independent set of at most `k` nodes.
pub fn select_flips(delta: &[f64], q: f64, cfg: &SolverConfig, graph: &Graph) -> Vec<usize> {
    let mut candidates: Vec<usize> = (0..delta.len()).filter(|&i| delta[i] < q).collect();
    match cfg.control {
        Control::Min => candidates.sort_by(|&a, &b| delta[a].total_cmp(&delta[b]).then(a.cmp(&b))),
        Control::Max => candidates.sort_by(|&a, &b| delta[b].total_cmp(&delta[a]).then(a.cmp(&b))),
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(cfg.k);
    for c in candidates {
        if chosen.len() == cfg.k {
            break;
        }
        if chosen.iter().all(|&s| !graph.has_edge(s, c)) {
            chosen.push(c);
        }
    }
    chosen
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FlipOutcome {
    pub cells_targeted: usize,
    pub cells_correct: usize,
    pub iteration_accurate: bool,
    pub program_nj: f64,
}

/// Negates each flipped spin and rewrites the flipped node's column pair on
/// every neighbour row to the new sign. A flip of a degree-`d` node targets
/// `2d` cells. The iteration is accurate when every targeted cell lands in
/// its window and no other cell changes class.
pub fn apply_flips(
    xb: &mut Crossbar,
    mapping: &CrossbarMapping,
    spins: &mut SpinState,
    flips: &[usize],
    graph: &Graph,
    tag: Tag,
) -> Result<FlipOutcome, SolverError> {
    if flips.is_empty() {
        return Ok(FlipOutcome {
            iteration_accurate: true,
            ..FlipOutcome::default()
        });
    }
    let (rows, cols) = (xb.rows(), xb.cols());
    let mut before = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            before.push(xb.classify(r, c)?);
        }
    }
    let mut targeted = vec![false; rows * cols];
    let mut outcome = FlipOutcome::default();

    for &j in flips {
        spins.flip(j);
        let (cp, cn) = (mapping.col_pos(j), mapping.col_neg(j));
        for &i in graph.neighbors(j) {
            let r = mapping.row(i);
            let (a, b) = xb.program_pair(r, cp, cn, spins.get(j), tag)?;
            targeted[r * cols + cp] = true;
            targeted[r * cols + cn] = true;
            outcome.cells_targeted += 2;
            outcome.cells_correct += a.landed_in_window as usize + b.landed_in_window as usize;
            outcome.program_nj += a.energy_nj + b.energy_nj;
        }
    }

    let mut preserved = true;
    for r in 0..rows {
        for c in 0..cols {
            let idx = r * cols + c;
            if !targeted[idx] && xb.classify(r, c)? != before[idx] {
                preserved = false;
            }
        }
    }
    outcome.iteration_accurate = preserved && outcome.cells_correct == outcome.cells_targeted;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub t: usize,
    pub delta: Vec<f64>,
    pub q: f64,
    pub mode: Mode,
    pub flipped: Vec<usize>,
    pub cells_targeted: usize,
    pub cells_correct: usize,
    pub iteration_accurate: bool,
    pub program_nj: f64,
    pub inference_nj: f64,
    /// Hamiltonian of the spin store after the iteration.
    pub hamiltonian: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub initial_spins: SpinState,
    pub final_spins: SpinState,
    pub init_nj: f64,
    pub iterations: Vec<IterationTrace>,
    pub solved: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub init_nj: f64,
    pub program_nj: f64,
    pub inference_nj: f64,
    pub execute_nj: f64,
    pub events: usize,
}

impl EnergySummary {
    pub fn add(&mut self, ledger: &EnergyLedger) {
        self.init_nj += ledger.init_nj;
        self.program_nj += ledger.program_nj;
        self.inference_nj += ledger.inference_nj;
        self.execute_nj = self.init_nj + self.program_nj;
        self.events += ledger.events.len();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Sat,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub verdict: Verdict,
    /// Present exactly when the verdict is SAT; always verified.
    pub assignment: Option<Assignment>,
    pub final_spins: SpinState,
    pub restarts: Vec<RestartTrace>,
    pub energy: EnergySummary,
    pub iteration_accuracy: f64,
    /// Fraction of targeted cells that landed in their window.
    pub cell_accuracy: f64,
}

impl RunReport {
    pub fn is_sat(&self) -> bool {
        self.verdict == Verdict::Sat
    }

    pub fn iterations(&self) -> impl Iterator<Item = &IterationTrace> {
        self.restarts.iter().flat_map(|r| r.iterations.iter())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// A 3-SAT instance with its graph, adjacency matrix and degree table.
#[derive(Debug, Clone)]
pub struct Problem {
    pub cnf: Cnf,
    pub graph: IsingGraph,
    pub adjacency: AdjacencyMatrix,
    pub degrees: Vec<usize>,
}

impl Problem {
    pub fn new(cnf: Cnf) -> Self {
        let graph = build_graph(&cnf);
        let adjacency = graph.adjacency_matrix();
        let degrees = graph.degrees();
        Problem {
            cnf,
            graph,
            adjacency,
            degrees,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    /// Smallest device of the given kind that holds this problem on one tile.
    pub fn fitted_device(&self, base: DeviceConfig) -> DeviceConfig {
        let n = self.num_nodes();
        base.with_dims(n, 2 * n)
    }
}

/// SplitMix64 finaliser; mixes a base seed with a stream index.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        ^ stream
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Outcome of one restart: its trace and the crossbar ledger.
#[derive(Debug, Clone)]
pub struct RestartRun {
    pub trace: RestartTrace,
    pub ledger: EnergyLedger,
    pub assignment: Option<Assignment>,
}

/// One restart: random spins, fresh array, mapping, then up to `max_iters`
/// loop iterations. `max_iters = 0` stops right after mapping.
pub fn run_restart(
    problem: &Problem,
    device: &DeviceConfig,
    cfg: &SolverConfig,
    restart: usize,
    max_iters: usize,
) -> Result<RestartRun, SolverError> {
    let n = problem.num_nodes();
    let params = cfg.hamiltonian;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2 * restart as u64));
    let mut spins = SpinState::new(
        (0..n)
            .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
            .collect(),
    )?;
    let initial_spins = spins.clone();
    let mut xb = Crossbar::new(
        device.clone(),
        derive_seed(cfg.seed, 2 * restart as u64 + 1),
    )?;
    let mapping = map_problem(&problem.adjacency, &spins, &mut xb)?;
    let init_nj = xb.ledger().init_nj;

    let mut iterations = Vec::new();
    let mut prior: Option<Vec<f64>> = None;
    let mut assignment = None;
    for t in 0..max_iters {
        let tag = Tag::Iteration(t as u32);
        let inference_before = xb.ledger().inference_nj;
        let delta = compute_delta(&mut xb, &mapping, &spins, &problem.degrees, &params, tag)?;
        let inference_nj = xb.ledger().inference_nj - inference_before;

        let u = if delta.iter().any(|&d| d < 0.0) {
            1.0
        } else {
            1.0 - rng.random::<f64>()
        };
        let threshold = q_unit(&delta, prior.as_deref(), t, cfg, u);
        let flips = select_flips(&delta, threshold.q, cfg, &problem.graph);
        let outcome = apply_flips(&mut xb, &mapping, &mut spins, &flips, &problem.graph, tag)?;
        let hamiltonian = hamiltonian_energy(&problem.graph, &spins, &params)?;
        let done = flips.is_empty();
        iterations.push(IterationTrace {
            t,
            delta: delta.clone(),
            q: threshold.q,
            mode: threshold.mode,
            flipped: flips,
            cells_targeted: outcome.cells_targeted,
            cells_correct: outcome.cells_correct,
            iteration_accurate: outcome.iteration_accurate,
            program_nj: outcome.program_nj,
            inference_nj,
            hamiltonian,
        });
        assignment = decode_solution(&problem.graph, &spins, &problem.cnf);
        if assignment.is_some() || done {
            break;
        }
        prior = Some(delta);
    }

    let ledger = xb.into_ledger();
    Ok(RestartRun {
        trace: RestartTrace {
            restart,
            initial_spins,
            final_spins: spins,
            init_nj,
            iterations,
            solved: assignment.is_some(),
        },
        ledger,
        assignment,
    })
}

/// Full solve: restarts until a verified assignment is decoded or the
/// restart budget runs out.
pub fn run(cnf: &Cnf, device: &DeviceConfig, cfg: &SolverConfig) -> Result<RunReport, SolverError> {
    run_problem(&Problem::new(cnf.clone()), device, cfg)
}

pub fn run_problem(
    problem: &Problem,
    device: &DeviceConfig,
    cfg: &SolverConfig,
) -> Result<RunReport, SolverError> {
    cfg.validate()?;
    let mut restarts = Vec::with_capacity(cfg.restarts);
    let mut energy = EnergySummary::default();
    let mut assignment = None;
    for r in 0..cfg.restarts {
        let run = run_restart(problem, device, cfg, r, cfg.max_iters)?;
        energy.add(&run.ledger);
        restarts.push(run.trace);
        if run.assignment.is_some() {
            assignment = run.assignment;
            break;
        }
    }
    let final_spins = restarts
        .last()
        .map(|r| r.final_spins.clone())
        .expect("at least one restart");
    let (iteration_accuracy, cell_accuracy) = accuracy_of(&restarts);
    Ok(RunReport {
        verdict: if assignment.is_some() {
            Verdict::Sat
        } else {
            Verdict::Unknown
        },
        assignment,
        final_spins,
        restarts,
        energy,
        iteration_accuracy,
        cell_accuracy,
    })
}

fn accuracy_of(restarts: &[RestartTrace]) -> (f64, f64) {
    let writing: Vec<&IterationTrace> = restarts
        .iter()
        .flat_map(|r| &r.iterations)
        .filter(|it| it.cells_targeted > 0)
        .collect();
    if writing.is_empty() {
        return (1.0, 1.0);
    }
    let accurate = writing.iter().filter(|it| it.iteration_accurate).count();
    let targeted: usize = writing.iter().map(|it| it.cells_targeted).sum();
    let correct: usize = writing.iter().map(|it| it.cells_correct).sum();
    (
        accurate as f64 / writing.len() as f64,
        correct as f64 / targeted as f64,
    )
}

/// Accurate iterations over iterations that reprogrammed at least one cell.
/// A report with no reprogramming iterations scores 1.
pub fn iteration_accuracy(report: &RunReport) -> f64 {
    accuracy_of(&report.restarts).0
}
