//! Reduction of 3-SAT to an Ising (maximum independent set) graph.
//!
//! Every literal occurrence becomes a node. The three nodes of a clause form
//! a triangle, and two occurrences of the same variable with opposite
//! polarity in different clauses are joined by a conflict edge. The formula
//! is satisfiable iff the graph has an independent set of size `m`, which is
//! exactly the ground state `-b_pen * m` of
//!
//! ```text
//! H(x) = a_pen * Σ_{(u,v) ∈ E} x_u x_v  -  b_pen * Σ_v x_v,   x_v = (1 + s_v) / 2
//! ```
//!
//! whenever `a_pen > b_pen > 0`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{verify_assignment, Assignment, Cnf, Literal};

/// Largest node count [`exhaustive_ground_state`] will enumerate.
pub const MAX_ENUMERATION_NODES: usize = 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IsingError {
    #[error("spin vector has {found} entries, graph has {expected} nodes")]
    SpinLength { expected: usize, found: usize },
    #[error("spin values must be -1 or +1, got {0}")]
    InvalidSpin(i8),
    #[error("node {node} out of range for {nodes} nodes")]
    NodeOutOfRange { node: usize, nodes: usize },
    #[error("{nodes} nodes exceeds the enumeration limit of {limit}")]
    TooManyNodes { nodes: usize, limit: usize },
    #[error("penalty weights must satisfy a_pen > b_pen > 0 (got a_pen={a_pen}, b_pen={b_pen})")]
    InvalidParams { a_pen: f64, b_pen: f64 },
    #[error("clauses {first} and {second} share {edges} conflict edges (at most 3 possible)")]
    KernelOverflow {
        first: usize,
        second: usize,
        edges: usize,
    },
    #[error("edge ({0}, {1}) is invalid")]
    InvalidEdge(usize, usize),
}

/// One ±1 spin per graph node. `+1` selects the node's literal occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinState(Vec<i8>);

impl SpinState {
    pub fn new(spins: Vec<i8>) -> Result<Self, IsingError> {
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(IsingError::InvalidSpin(bad));
        }
        Ok(SpinState(spins))
    }

    pub fn all_down(n: usize) -> Self {
        SpinState(vec![-1; n])
    }

    /// Bit `i` set means node `i` has spin `+1`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        SpinState(
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
                .collect(),
        )
    }

    pub fn to_mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, node: usize) -> i8 {
        self.0[node]
    }

    /// Binary occupation `x = (1 + s) / 2`.
    pub fn occupied(&self, node: usize) -> bool {
        self.0[node] == 1
    }

    pub fn flip(&mut self, node: usize) {
        self.0[node] = -self.0[node];
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .map(|(i, _)| i)
    }
}

impl TryFrom<Vec<i8>> for SpinState {
    type Error = IsingError;

    fn try_from(value: Vec<i8>) -> Result<Self, Self::Error> {
        SpinState::new(value)
    }
}

impl From<SpinState> for Vec<i8> {
    fn from(value: SpinState) -> Self {
        value.0
    }
}

/// Penalty weights of the independent-set Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HamiltonianParams {
    pub a_pen: f64,
    pub b_pen: f64,
}

impl Default for HamiltonianParams {
    fn default() -> Self {
        HamiltonianParams {
            a_pen: 2.0,
            b_pen: 1.0,
        }
    }
}

impl HamiltonianParams {
    pub fn new(a_pen: f64, b_pen: f64) -> Result<Self, IsingError> {
        let p = HamiltonianParams { a_pen, b_pen };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), IsingError> {
        // written so that NaN fails too
        if self.b_pen > 0.0 && self.a_pen > self.b_pen && self.a_pen.is_finite() {
            Ok(())
        } else {
            Err(IsingError::InvalidParams {
                a_pen: self.a_pen,
                b_pen: self.b_pen,
            })
        }
    }
}

/// Plain undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from unordered pairs; duplicates collapse, self-loops
    /// and out-of-range endpoints are rejected.
    pub fn from_edges(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, IsingError> {
        let mut list: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u == v || u >= num_nodes || v >= num_nodes {
                return Err(IsingError::InvalidEdge(u, v));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        list.dedup();
        let mut neighbors = vec![Vec::new(); num_nodes];
        for &(u, v) in &list {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        Ok(Graph {
            neighbors,
            edges: list,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sorted `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors
            .get(u)
            .is_some_and(|n| n.binary_search(&v).is_ok())
    }

    pub fn is_independent(&self, nodes: &[usize]) -> bool {
        nodes
            .iter()
            .enumerate()
            .all(|(i, &u)| nodes[i + 1..].iter().all(|&v| !self.has_edge(u, v)))
    }

    pub fn adjacency_matrix(&self) -> AdjacencyMatrix {
        let n = self.num_nodes();
        let mut entries = vec![0u8; n * n];
        for &(u, v) in &self.edges {
            entries[u * n + v] = 1;
            entries[v * n + u] = 1;
        }
        AdjacencyMatrix { size: n, entries }
    }

    /// Debug export: `N E` header, then one `u v` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.num_nodes(), self.num_edges());
        for (u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    fn check_spins(&self, spins: &SpinState) -> Result<(), IsingError> {
        if spins.len() != self.num_nodes() {
            return Err(IsingError::SpinLength {
                expected: self.num_nodes(),
                found: spins.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsingNode {
    pub id: usize,
    pub clause_index: usize,
    pub position_in_clause: usize,
    pub literal: Literal,
}

/// Ising graph of a 3-SAT instance. Nodes are ordered clause-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsingGraph {
    nodes: Vec<IsingNode>,
    graph: Graph,
    num_clauses: usize,
}

impl IsingGraph {
    pub fn nodes(&self) -> &[IsingNode] {
        &self.nodes
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn num_clauses(&self) -> usize {
        self.num_clauses
    }

    /// Node id of `position` (0..3) in clause `clause`.
    pub fn node_id(clause: usize, position: usize) -> usize {
        3 * clause + position
    }

    /// Edges joining different clauses.
    pub fn conflict_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.graph
            .edges()
            .iter()
            .copied()
            .filter(|&(u, v)| u / 3 != v / 3)
    }

    /// Number of conflict edges incident to `node`.
    pub fn conflict_degree(&self, node: usize) -> usize {
        self.graph
            .neighbors(node)
            .iter()
            .filter(|&&v| v / 3 != node / 3)
            .count()
    }
}

impl std::ops::Deref for IsingGraph {
    type Target = Graph;

    fn deref(&self) -> &Graph {
        &self.graph
    }
}

/// Dense symmetric 0/1 adjacency matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyMatrix {
    size: usize,
    entries: Vec<u8>,
}

impl AdjacencyMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.entries[row * self.size + col]
    }

    pub fn ones(&self) -> usize {
        self.entries.iter().filter(|&&e| e == 1).count()
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InconnHistogram {
    pub one: usize,
    pub two: usize,
    pub three: usize,
}

impl InconnHistogram {
    pub fn count(&self, edges: usize) -> usize {
        match edges {
            1 => self.one,
            2 => self.two,
            3 => self.three,
            _ => 0,
        }
    }

    pub fn total_pairs(&self) -> usize {
        self.one + self.two + self.three
    }

    pub fn total_edges(&self) -> usize {
        self.one + 2 * self.two + 3 * self.three
    }
}

/// Kernel decomposition: one core triangle per clause plus the
/// inter-clause blocks bucketed by conflict-edge count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelProfile {
    pub core_count: usize,
    pub inconn: InconnHistogram,
    /// Conflict-edge count per connected clause pair `(i, j)`, `i < j`.
    pub pairs: BTreeMap<(usize, usize), usize>,
}

pub fn build_graph(cnf: &Cnf) -> IsingGraph {
    let mut nodes = Vec::with_capacity(3 * cnf.num_clauses());
    for (ci, clause) in cnf.clauses().iter().enumerate() {
        for (pos, &literal) in clause.literals().iter().enumerate() {
            nodes.push(IsingNode {
                id: IsingGraph::node_id(ci, pos),
                clause_index: ci,
                position_in_clause: pos,
                literal,
            });
        }
    }
    let mut edges = Vec::new();
    for c in 0..cnf.num_clauses() {
        let base = 3 * c;
        edges.extend([(base, base + 1), (base, base + 2), (base + 1, base + 2)]);
    }
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            if a.clause_index != b.clause_index && a.literal.conflicts_with(b.literal) {
                edges.push((a.id, b.id));
            }
        }
    }
    let graph = Graph::from_edges(nodes.len(), edges).expect("edges are built in range");
    IsingGraph {
        nodes,
        graph,
        num_clauses: cnf.num_clauses(),
    }
}

pub fn adjacency_matrix(g: &Graph) -> AdjacencyMatrix {
    g.adjacency_matrix()
}

pub fn kernel_decompose(g: &IsingGraph) -> Result<KernelProfile, IsingError> {
    let mut pairs: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (u, v) in g.conflict_edges() {
        let (a, b) = (u / 3, v / 3);
        *pairs.entry((a.min(b), a.max(b))).or_default() += 1;
    }
    let mut inconn = InconnHistogram::default();
    for (&(first, second), &edges) in &pairs {
        match edges {
            1 => inconn.one += 1,
            2 => inconn.two += 1,
            3 => inconn.three += 1,
            _ => {
                return Err(IsingError::KernelOverflow {
                    first,
                    second,
                    edges,
                })
            }
        }
    }
    Ok(KernelProfile {
        core_count: g.num_clauses(),
        inconn,
        pairs,
    })
}

/// `a_pen * Σ_E x_u x_v - b_pen * Σ_v x_v`.
pub fn hamiltonian_energy(
    g: &Graph,
    spins: &SpinState,
    p: &HamiltonianParams,
) -> Result<f64, IsingError> {
    g.check_spins(spins)?;
    let violated = g
        .edges()
        .iter()
        .filter(|&&(u, v)| spins.occupied(u) && spins.occupied(v))
        .count();
    let selected = spins.selected().count();
    Ok(p.a_pen * violated as f64 - p.b_pen * selected as f64)
}

/// Energy change from negating spin `node`, closed form
/// `Δ_j = -s_j * (a_pen * Σ_{i ∈ N(j)} x_i - b_pen)`.
pub fn delta_oracle(
    g: &Graph,
    spins: &SpinState,
    p: &HamiltonianParams,
    node: usize,
) -> Result<f64, IsingError> {
    g.check_spins(spins)?;
    if node >= g.num_nodes() {
        return Err(IsingError::NodeOutOfRange {
            node,
            nodes: g.num_nodes(),
        });
    }
    let occupied_neighbors = g
        .neighbors(node)
        .iter()
        .filter(|&&i| spins.occupied(i))
        .count();
    let s = spins.get(node) as f64;
    Ok(-s * (p.a_pen * occupied_neighbors as f64 - p.b_pen))
}

/// Minimum-energy spin state by exhaustive Gray-code enumeration. Ties go
/// to the lowest occupation mask (node 0 least significant).
pub fn exhaustive_ground_state(
    g: &Graph,
    p: &HamiltonianParams,
) -> Result<(SpinState, f64), IsingError> {
    let n = g.num_nodes();
    if n > MAX_ENUMERATION_NODES {
        return Err(IsingError::TooManyNodes {
            nodes: n,
            limit: MAX_ENUMERATION_NODES,
        });
    }
    let masks: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | 1 << u))
        .collect();
    let energy = |edges: u32, size: u32| p.a_pen * edges as f64 - p.b_pen * size as f64;

    let (mut set, mut edges, mut size) = (0u32, 0u32, 0u32);
    let mut best = (energy(0, 0), 0u32);
    for step in 1u64..(1u64 << n) {
        let bit = step.trailing_zeros() as usize;
        let b = 1u32 << bit;
        if set & b == 0 {
            edges += (masks[bit] & set).count_ones();
            set |= b;
            size += 1;
        } else {
            set &= !b;
            edges -= (masks[bit] & set).count_ones();
            size -= 1;
        }
        let e = energy(edges, size);
        if e < best.0 || (e == best.0 && set < best.1) {
            best = (e, set);
        }
    }
    Ok((SpinState::from_mask(best.1 as u64, n), best.0))
}

/// Reads an assignment off the spin state: the `+1` nodes must form an
/// independent set with exactly one node per clause; each selected literal
/// is made true, every other variable false. Returns `None` unless the
/// result satisfies `cnf`.
pub fn decode_solution(g: &IsingGraph, spins: &SpinState, cnf: &Cnf) -> Option<Assignment> {
    if spins.len() != g.num_nodes() {
        return None;
    }
    let selected: Vec<usize> = spins.selected().collect();
    if selected.len() != g.num_clauses() {
        return None;
    }
    let mut seen = vec![false; g.num_clauses()];
    for &v in &selected {
        let c = g.nodes()[v].clause_index;
        if std::mem::replace(&mut seen[c], true) {
            return None;
        }
    }
    if !g.is_independent(&selected) {
        return None;
    }
    let mut assignment = Assignment::all_false(cnf.num_vars());
    for &v in &selected {
        let lit = g.nodes()[v].literal;
        assignment.set(lit.variable(), !lit.is_negated());
    }
    verify_assignment(cnf, &assignment).then_some(assignment)
}
