//! 3-SAT solving on an emulated 1-bit ReRAM crossbar.
//!
//! The pipeline is: parse or generate a [`Cnf`](cnf::Cnf), reduce it to an
//! independent-set Ising graph ([`ising`]), write the spin-signed adjacency
//! matrix into a differential crossbar ([`device`]), and run the adaptive
//! greedy/annealing flip loop against the array ([`solver`]). The [`bench`]
//! module holds the kernel-energy and accuracy harnesses.

pub mod bench;
pub mod cnf;
pub mod config;
pub mod device;
pub mod ising;
pub mod solver;

pub use cnf::{
    brute_force_sat, parse_dimacs, random_3sat, verify_assignment, Assignment, Clause, Cnf,
    CnfError, Literal,
};
pub use config::{ConfigError, RunConfig};
pub use device::{
    CellState, Crossbar, DeviceConfig, DeviceError, EnergyCurve, EnergyLedger, Tag, WriteOutcome,
};
pub use ising::{
    build_graph, decode_solution, delta_oracle, exhaustive_ground_state, hamiltonian_energy,
    kernel_decompose, AdjacencyMatrix, Graph, HamiltonianParams, IsingError, IsingGraph,
    KernelProfile, SpinState,
};
pub use solver::{
    run, run_problem, Control, CrossbarMapping, IterationTrace, Problem, RunReport, SolverConfig,
    SolverError, Verdict,
};
