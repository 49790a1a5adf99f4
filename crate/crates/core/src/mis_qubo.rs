//! MIS as QUBO / Ising, solution verification, and the exact and greedy
//! baseline solvers.
//!
//! QUBO cost over bits `b`:
//!
//! ```text
//! H(b) = A * sum_{(i,j) in E} b_i b_j  -  B * sum_i b_i      (0 < B < A)
//! ```
//!
//! with every edge counted once. Ising energy over spins `s = 2b - 1`:
//!
//! ```text
//! E(s) = -1/2 * sum_{i != j} J_ij s_i s_j  -  sum_i h_i s_i
//! ```
//!
//! and `H(b) = E(s) + offset` for every configuration.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bitset::{BitMatrix, BitSet};
use crate::error::{Error, Result};
use crate::market_graph::MarketGraph;

pub const DEFAULT_PENALTY: f64 = 2.0;
pub const DEFAULT_REWARD: f64 = 1.0;
pub const DEFAULT_EXACT_NODE_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    n_bits: usize,
    /// `(i, j, q)` with `i < j`, each unordered pair at most once.
    quadratic: Vec<(usize, usize, f64)>,
    linear: Vec<f64>,
    penalty: f64,
    reward: f64,
    adjacency: Option<BitMatrix>,
}

/// Encodes the MIS of `graph` with penalty `A` and reward `B`.
pub fn to_qubo(graph: &MarketGraph, penalty: f64, reward: f64) -> Result<QuboProblem> {
    if !(reward > 0.0 && penalty > reward && penalty.is_finite()) {
        return Err(Error::InvalidPenalty {
            a: penalty,
            b: reward,
        });
    }
    let n = graph.n_nodes();
    Ok(QuboProblem {
        n_bits: n,
        quadratic: graph.edges().into_iter().map(|(i, j)| (i, j, penalty)).collect(),
        linear: vec![-reward; n],
        penalty,
        reward,
        adjacency: Some(graph.adjacency().clone()),
    })
}

impl QuboProblem {
    /// A general QUBO with no graph structure attached.
    pub fn from_terms(n_bits: usize, quadratic: Vec<(usize, usize, f64)>, linear: Vec<f64>) -> Result<Self> {
        if linear.len() != n_bits {
            return Err(Error::InvalidArgument(format!(
                "{} linear terms for {n_bits} bits",
                linear.len()
            )));
        }
        let mut seen = std::collections::BTreeMap::new();
        for (i, j, q) in quadratic {
            if i == j || i.max(j) >= n_bits {
                return Err(Error::InvalidArgument(format!("bad quadratic pair ({i}, {j})")));
            }
            *seen.entry((i.min(j), i.max(j))).or_insert(0.0) += q;
        }
        Ok(Self {
            n_bits,
            quadratic: seen.into_iter().map(|((i, j), q)| (i, j, q)).collect(),
            linear,
            penalty: f64::NAN,
            reward: f64::NAN,
            adjacency: None,
        })
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn quadratic(&self) -> &[(usize, usize, f64)] {
        &self.quadratic
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn reward(&self) -> f64 {
        self.reward
    }

    pub fn cost(&self, bits: &[bool]) -> f64 {
        assert_eq!(bits.len(), self.n_bits);
        let quad: f64 = self
            .quadratic
            .iter()
            .filter(|(i, j, _)| bits[*i] && bits[*j])
            .map(|(_, _, q)| q)
            .sum();
        let lin: f64 = self.linear.iter().zip(bits).filter(|(_, b)| **b).map(|(c, _)| c).sum();
        quad + lin
    }
}

/// Off-diagonal couplings of an Ising problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// Row-major `n x n`, symmetric, zero diagonal.
    Dense(Vec<f64>),
    /// `J_ij = weight` on the set bits of a symmetric adjacency matrix, zero
    /// elsewhere.
    Masked { adjacency: BitMatrix, weight: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    n_spins: usize,
    coupling: Coupling,
    bias: Vec<f64>,
    offset: f64,
}

/// Substitutes `b = (s + 1) / 2`. A QUBO that came from [`to_qubo`] keeps
/// its adjacency as a masked coupling.
pub fn qubo_to_ising(q: &QuboProblem) -> IsingProblem {
    let n = q.n_bits;
    let mut bias = vec![0.0; n];
    let mut offset = 0.0;
    for (i, &c) in q.linear.iter().enumerate() {
        bias[i] -= c / 2.0;
        offset += c / 2.0;
    }
    for &(i, j, w) in &q.quadratic {
        bias[i] -= w / 4.0;
        bias[j] -= w / 4.0;
        offset += w / 4.0;
    }
    let coupling = match &q.adjacency {
        Some(adjacency) => Coupling::Masked {
            adjacency: adjacency.clone(),
            weight: -q.penalty / 4.0,
        },
        None => {
            let mut dense = vec![0.0; n * n];
            for &(i, j, w) in &q.quadratic {
                dense[i * n + j] -= w / 4.0;
                dense[j * n + i] -= w / 4.0;
            }
            Coupling::Dense(dense)
        }
    };
    IsingProblem {
        n_spins: n,
        coupling,
        bias,
        offset,
    }
}

impl IsingProblem {
    pub fn new(coupling: Coupling, bias: Vec<f64>, offset: f64) -> Result<Self> {
        let n = bias.len();
        match &coupling {
            Coupling::Dense(j) => {
                if j.len() != n * n {
                    return Err(Error::InvalidArgument(format!("coupling has {} entries for {n} spins", j.len())));
                }
                for a in 0..n {
                    if j[a * n + a] != 0.0 {
                        return Err(Error::InvalidArgument(format!("nonzero diagonal at {a}")));
                    }
                    for b in a + 1..n {
                        if j[a * n + b] != j[b * n + a] {
                            return Err(Error::InvalidArgument(format!("asymmetric coupling at ({a}, {b})")));
                        }
                    }
                }
            }
            Coupling::Masked { adjacency, .. } => {
                if adjacency.dim() != n {
                    return Err(Error::InvalidArgument("adjacency size mismatch".into()));
                }
            }
        }
        Ok(Self {
            n_spins: n,
            coupling,
            bias,
            offset,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn j(&self, a: usize, b: usize) -> f64 {
        match &self.coupling {
            Coupling::Dense(j) => j[a * self.n_spins + b],
            Coupling::Masked { adjacency, weight } => {
                if adjacency.get(a, b) {
                    *weight
                } else {
                    0.0
                }
            }
        }
    }

    /// Same problem with an explicit dense coupling matrix.
    pub fn to_dense(&self) -> IsingProblem {
        let n = self.n_spins;
        let dense = (0..n * n).map(|k| self.j(k / n, k % n)).collect();
        IsingProblem {
            n_spins: n,
            coupling: Coupling::Dense(dense),
            bias: self.bias.clone(),
            offset: self.offset,
        }
    }

    /// All nonzero off-diagonal couplings, counted over ordered pairs.
    pub fn nonzero_couplings(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_spins;
        (0..n).flat_map(move |a| (0..n).filter(move |&b| b != a).map(move |b| self.j(a, b)))
            .filter(|&v| v != 0.0)
    }

    /// `E(s) = -1/2 s^T J s - h^T s` for `s` in `{-1, +1}^n` (any real
    /// vector is accepted).
    pub fn energy<S: Copy + Into<f64>>(&self, spins: &[S]) -> f64 {
        assert_eq!(spins.len(), self.n_spins);
        let s: Vec<f64> = spins.iter().map(|&v| v.into()).collect();
        let n = self.n_spins;
        let mut pair = 0.0;
        match &self.coupling {
            Coupling::Dense(j) => {
                for a in 0..n {
                    for b in a + 1..n {
                        pair += j[a * n + b] * s[a] * s[b];
                    }
                }
            }
            Coupling::Masked { adjacency, weight } => {
                for a in 0..n {
                    let row = adjacency.row_set(a);
                    let local: f64 = row.iter().filter(|&b| b > a).map(|b| s[b]).sum();
                    pair += weight * s[a] * local;
                }
            }
        }
        let field: f64 = self.bias.iter().zip(&s).map(|(h, v)| h * v).sum();
        -pair - field
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Sb,
    Greedy,
    Exact,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Sb => "sb",
            SolverKind::Greedy => "greedy",
            SolverKind::Exact => "exact",
        })
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sb" => Ok(SolverKind::Sb),
            "greedy" => Ok(SolverKind::Greedy),
            "exact" => Ok(SolverKind::Exact),
            other => Err(Error::InvalidArgument(format!("unknown solver {other:?}"))),
        }
    }
}

/// A candidate independent set. `nodes` is sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "MisSolutionJson", try_from = "MisSolutionJson")]
pub struct MisSolution {
    pub nodes: Vec<usize>,
    pub feasible: bool,
    pub source: SolverKind,
    pub tickers: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct MisSolutionJson {
    size: usize,
    feasible: bool,
    nodes: Vec<usize>,
    tickers: Vec<String>,
    source: SolverKind,
}

impl From<MisSolution> for MisSolutionJson {
    fn from(s: MisSolution) -> Self {
        Self {
            size: s.nodes.len(),
            feasible: s.feasible,
            nodes: s.nodes,
            tickers: s.tickers,
            source: s.source,
        }
    }
}

impl TryFrom<MisSolutionJson> for MisSolution {
    type Error = String;

    fn try_from(j: MisSolutionJson) -> std::result::Result<Self, String> {
        if j.size != j.nodes.len() {
            return Err(format!("size {} does not match {} nodes", j.size, j.nodes.len()));
        }
        Ok(Self {
            nodes: j.nodes,
            feasible: j.feasible,
            source: j.source,
            tickers: j.tickers,
        })
    }
}

impl MisSolution {
    /// Checks `nodes` against `graph` and fills in feasibility and tickers.
    pub fn new(graph: &MarketGraph, mut nodes: Vec<usize>, source: SolverKind) -> Result<Self> {
        nodes.sort_unstable();
        nodes.dedup();
        let feasible = verify(graph, &nodes)?.feasible;
        let tickers = nodes.iter().map(|&i| graph.tickers()[i].clone()).collect();
        Ok(Self {
            nodes,
            feasible,
            source,
            tickers,
        })
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }
}

/// Nodes whose spin is `+1`.
pub fn decode(spins: &[i8]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, &s) in spins.iter().enumerate() {
        match s {
            1 => out.push(i),
            -1 => {}
            other => {
                return Err(Error::Decode {
                    index: i,
                    value: other as f64,
                })
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub feasible: bool,
    pub violated: Vec<(usize, usize)>,
}

pub fn verify(graph: &MarketGraph, selected: &[usize]) -> Result<Verification> {
    for &v in selected {
        graph.check(v)?;
    }
    let set = BitSet::from_indices(graph.n_nodes(), selected.iter().copied());
    let mut violated = Vec::new();
    for a in set.iter() {
        let mut hits = graph.neighbors(a);
        hits.intersect_with(&set);
        violated.extend(hits.iter().filter(|&b| b > a).map(|b| (a, b)));
    }
    Ok(Verification {
        feasible: violated.is_empty(),
        violated,
    })
}

/// Minimum-degree greedy: repeatedly take a node of least residual degree
/// (lowest index on ties) and delete it with its neighbours.
pub fn solve_greedy(graph: &MarketGraph) -> MisSolution {
    let n = graph.n_nodes();
    let adj = graph.adjacency();
    let mut residual = BitSet::full(n);
    let mut chosen = Vec::new();
    let mut degree: Vec<usize> = graph.degrees();
    while let Some(v) = residual.iter().min_by_key(|&v| (degree[v], v)) {
        chosen.push(v);
        let mut removed = graph.neighbors(v);
        removed.intersect_with(&residual);
        removed.insert(v);
        residual.difference_with(&removed);
        for u in residual.iter() {
            degree[u] -= adj.row_intersection_count(u, &removed);
        }
    }
    MisSolution::new(graph, chosen, SolverKind::Greedy).expect("greedy nodes are in range")
}

#[derive(Debug, Clone, Copy)]
pub struct ExactOptions {
    pub node_limit: usize,
    pub deadline: Option<Instant>,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            node_limit: DEFAULT_EXACT_NODE_LIMIT,
            deadline: None,
        }
    }
}

pub fn solve_exact(graph: &MarketGraph, node_limit: usize) -> Result<MisSolution> {
    solve_exact_with(
        graph,
        ExactOptions {
            node_limit,
            deadline: None,
        },
    )
}

/// Branch and bound for the maximum independent set, searched as a maximum
/// clique of the complement graph. The bound at each node is a greedy clique
/// cover of the candidates in the original graph (a colouring of the
/// complement): an independent set takes at most one node per clique. The
/// incumbent starts from the greedy solution.
pub fn solve_exact_with(graph: &MarketGraph, options: ExactOptions) -> Result<MisSolution> {
    let n = graph.n_nodes();
    if n > options.node_limit {
        return Err(Error::SizeLimit {
            n_nodes: n,
            limit: options.node_limit,
        });
    }
    let greedy = solve_greedy(graph);
    let mut search = Search {
        adj: graph.adjacency(),
        best: greedy.nodes,
        current: Vec::new(),
        deadline: options.deadline,
        ticks: 0,
    };
    search.expand(BitSet::full(n))?;
    MisSolution::new(graph, search.best, SolverKind::Exact)
}

struct Search<'a> {
    adj: &'a BitMatrix,
    best: Vec<usize>,
    current: Vec<usize>,
    deadline: Option<Instant>,
    ticks: u64,
}

impl Search<'_> {
    fn expand(&mut self, mut candidates: BitSet) -> Result<()> {
        self.ticks += 1;
        if self.ticks % 1024 == 1 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return Err(Error::Timeout);
                }
            }
        }
        let (order, bounds) = self.cover(&candidates);
        for k in (0..order.len()).rev() {
            if self.current.len() + bounds[k] <= self.best.len() {
                return Ok(());
            }
            let v = order[k];
            self.current.push(v);
            let mut next = candidates.clone();
            next.difference_with(&self.adj.row_set(v));
            next.remove(v);
            if next.is_empty() {
                if self.current.len() > self.best.len() {
                    self.best = self.current.clone();
                }
            } else {
                self.expand(next)?;
            }
            self.current.pop();
            candidates.remove(v);
        }
        Ok(())
    }

    /// Greedy partition of `candidates` into cliques of the graph. Returns
    /// the nodes in class order with, for each, the number of classes up to
    /// and including its own.
    fn cover(&self, candidates: &BitSet) -> (Vec<usize>, Vec<usize>) {
        let mut uncovered = candidates.clone();
        let mut order = Vec::with_capacity(candidates.count());
        let mut bounds = Vec::with_capacity(order.capacity());
        let mut class = 0;
        while !uncovered.is_empty() {
            class += 1;
            let mut open = uncovered.clone();
            while let Some(v) = open.first() {
                uncovered.remove(v);
                open.remove(v);
                open.intersect_with(&self.adj.row_set(v));
                order.push(v);
                bounds.push(class);
            }
        }
        (order, bounds)
    }
}

/// Best feasible candidate: largest size, then lexicographically smallest
/// node list.
pub fn select_best(candidates: &[MisSolution]) -> Result<MisSolution> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates to select from".into()));
    }
    candidates
        .iter()
        .filter(|c| c.feasible)
        .min_by(|a, b| b.size().cmp(&a.size()).then_with(|| a.nodes.cmp(&b.nodes)))
        .cloned()
        .ok_or(Error::NoFeasibleSolution)
}

/// Makes `selected` independent by dropping the higher-degree endpoint of
/// each violated edge (higher index on ties), then extends it greedily in
/// ascending `(degree, index)` order.
pub fn repair(graph: &MarketGraph, selected: &[usize]) -> Result<Vec<usize>> {
    let n = graph.n_nodes();
    for &v in selected {
        graph.check(v)?;
    }
    let degrees = graph.degrees();
    let mut set = BitSet::from_indices(n, selected.iter().copied());
    for (a, b) in verify(graph, selected)?.violated {
        if set.contains(a) && set.contains(b) {
            let drop = if (degrees[a], a) > (degrees[b], b) { a } else { b };
            set.remove(drop);
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (degrees[v], v));
    for v in order {
        if !set.contains(v) && graph.adjacency().row_intersection_count(v, &set) == 0 {
            set.insert(v);
        }
    }
    Ok(set.iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(mask: u32, n: usize) -> Vec<bool> {
        (0..n).map(|i| mask >> i & 1 == 1).collect()
    }

    fn spins(b: &[bool]) -> Vec<f64> {
        b.iter().map(|&x| if x { 1.0 } else { -1.0 }).collect()
    }

    /// Independence number by enumerating all subsets.
    fn brute_alpha(g: &MarketGraph) -> usize {
        let n = g.n_nodes();
        (0u32..1 << n)
            .filter(|m| g.edges().iter().all(|&(i, j)| !(m >> i & 1 == 1 && m >> j & 1 == 1)))
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap()
    }

    #[test]
    fn rejects_bad_penalty() {
        let g = MarketGraph::empty(2);
        assert!(matches!(to_qubo(&g, 1.0, 1.0), Err(Error::InvalidPenalty { .. })));
        assert!(matches!(to_qubo(&g, 1.0, 2.0), Err(Error::InvalidPenalty { .. })));
        assert!(to_qubo(&g, 2.0, 0.0).is_err());
    }

    #[test]
    fn k2_costs() {
        let q = to_qubo(&MarketGraph::complete(2), 2.0, 1.0).unwrap();
        assert_eq!(q.cost(&[false, false]), 0.0);
        assert_eq!(q.cost(&[true, true]), 0.0);
        assert_eq!(q.cost(&[true, false]), -1.0);
        assert_eq!(q.cost(&[false, true]), -1.0);
    }

    #[test]
    fn triangle_minimum_is_single_node() {
        let q = to_qubo(&MarketGraph::complete(3), 2.0, 1.0).unwrap();
        let costs: Vec<(u32, f64)> = (0..8).map(|m| (m, q.cost(&bits(m, 3)))).collect();
        let min = costs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        assert_eq!(min, -1.0);
        let argmin: Vec<u32> = costs.iter().filter(|c| c.1 == min).map(|c| c.0).collect();
        assert_eq!(argmin, vec![1, 2, 4]);
    }

    #[test]
    fn zero_qubo_maps_to_zero_ising() {
        let q = QuboProblem::from_terms(3, vec![], vec![0.0; 3]).unwrap();
        let ising = qubo_to_ising(&q);
        assert_eq!(ising.bias(), &[0.0; 3]);
        assert_eq!(ising.offset(), 0.0);
        assert!(ising.nonzero_couplings().next().is_none());
    }

    #[test]
    fn one_bit_qubo_bias_points_up() {
        let q = QuboProblem::from_terms(1, vec![], vec![-1.0]).unwrap();
        let ising = qubo_to_ising(&q);
        assert_eq!(ising.bias(), &[0.5]);
        assert_eq!(ising.offset(), -0.5);
        assert_eq!(ising.energy(&[1.0]) + ising.offset(), q.cost(&[true]));
        assert_eq!(ising.energy(&[-1.0]) + ising.offset(), q.cost(&[false]));
    }

    #[test]
    fn k2_equivalence_all_configurations() {
        let q = to_qubo(&MarketGraph::complete(2), 2.0, 1.0).unwrap();
        let ising = qubo_to_ising(&q);
        for m in 0..4 {
            let b = bits(m, 2);
            assert_eq!(ising.energy(&spins(&b)) + ising.offset(), q.cost(&b));
        }
    }

    #[test]
    fn masked_and_dense_energies_agree() {
        let g = MarketGraph::cycle(7);
        let ising = qubo_to_ising(&to_qubo(&g, 2.0, 1.0).unwrap());
        let dense = ising.to_dense();
        for m in 0..128 {
            let s = spins(&bits(m, 7));
            assert_eq!(ising.energy(&s), dense.energy(&s));
        }
    }

    #[test]
    fn general_qubo_equivalence() {
        let q = QuboProblem::from_terms(3, vec![(0, 1, 1.5), (2, 1, -0.75)], vec![0.25, -2.0, 1.0]).unwrap();
        let ising = qubo_to_ising(&q);
        for m in 0..8 {
            let b = bits(m, 3);
            assert!((ising.energy(&spins(&b)) + ising.offset() - q.cost(&b)).abs() < 1e-12);
        }
    }

    #[test]
    fn ising_validation() {
        assert!(IsingProblem::new(Coupling::Dense(vec![0.0, 1.0, 2.0, 0.0]), vec![0.0; 2], 0.0).is_err());
        assert!(IsingProblem::new(Coupling::Dense(vec![1.0, 0.0, 0.0, 0.0]), vec![0.0; 2], 0.0).is_err());
        assert!(IsingProblem::new(Coupling::Dense(vec![0.0, 1.0, 1.0, 0.0]), vec![0.0; 2], 0.0).is_ok());
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode(&[-1, -1, -1]).unwrap(), Vec::<usize>::new());
        assert_eq!(decode(&[1, 1, 1]).unwrap(), vec![0, 1, 2]);
        assert_eq!(decode(&[1, -1, 1]).unwrap(), vec![0, 2]);
        assert!(matches!(decode(&[1, 0]), Err(Error::Decode { index: 1, .. })));
    }

    #[test]
    fn verify_examples() {
        let path = MarketGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(verify(&path, &[]).unwrap().feasible);
        assert!(verify(&path, &[0, 2]).unwrap().feasible);
        let v = verify(&path, &[1, 2]).unwrap();
        assert!(!v.feasible);
        assert_eq!(v.violated, vec![(1, 2)]);
        assert!(matches!(verify(&path, &[3]), Err(Error::Index { index: 3, .. })));
    }

    #[test]
    fn exact_examples() {
        assert_eq!(solve_exact(&MarketGraph::empty(5), 64).unwrap().size(), 5);
        assert_eq!(solve_exact(&MarketGraph::complete(5), 64).unwrap().size(), 1);
        let c5 = MarketGraph::cycle(5);
        assert_eq!(brute_alpha(&c5), 2);
        let s = solve_exact(&c5, 64).unwrap();
        assert_eq!(s.size(), 2);
        assert!(s.feasible);
        assert_eq!(s.source, SolverKind::Exact);
    }

    #[test]
    fn exact_size_limit() {
        assert!(matches!(
            solve_exact(&MarketGraph::empty(65), 64),
            Err(Error::SizeLimit { n_nodes: 65, limit: 64 })
        ));
    }

    #[test]
    fn exact_deadline_in_past_times_out() {
        let g = MarketGraph::cycle(60);
        let r = solve_exact_with(
            &g,
            ExactOptions {
                node_limit: 100,
                deadline: Some(Instant::now()),
            },
        );
        assert!(matches!(r, Err(Error::Timeout)));
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(solve_greedy(&MarketGraph::empty(6)).size(), 6);
        let star = MarketGraph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let s = solve_greedy(&star);
        assert_eq!(s.nodes, vec![1, 2, 3, 4]);
        assert!(s.feasible);
    }

    #[test]
    fn select_best_examples() {
        let mk = |nodes: Vec<usize>, feasible| MisSolution {
            tickers: vec![String::new(); nodes.len()],
            nodes,
            feasible,
            source: SolverKind::Sb,
        };
        let best = select_best(&[mk(vec![0, 1, 2], true), mk((0..10).collect(), false)]).unwrap();
        assert_eq!(best.nodes, vec![0, 1, 2]);
        let best = select_best(&[mk(vec![0, 1, 2, 3], true), mk(vec![0, 1, 2, 3, 4, 5], true)]).unwrap();
        assert_eq!(best.size(), 6);
        let best = select_best(&[mk(vec![1, 3], true), mk(vec![0, 2], true)]).unwrap();
        assert_eq!(best.nodes, vec![0, 2]);
        assert!(matches!(select_best(&[mk(vec![0], false)]), Err(Error::NoFeasibleSolution)));
        assert!(matches!(select_best(&[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn repair_produces_maximal_independent_set() {
        let path = MarketGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let fixed = repair(&path, &[0, 1, 2, 3]).unwrap();
        assert!(verify(&path, &fixed).unwrap().feasible);
        assert_eq!(fixed.len(), 2);
    }

    #[test]
    fn solution_json_shape() {
        let g = MarketGraph::cycle(5);
        let s = solve_exact(&g, 64).unwrap();
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        assert_eq!(v["size"], 2);
        assert_eq!(v["feasible"], true);
        assert_eq!(v["source"], "exact");
        assert_eq!(v["nodes"].as_array().unwrap().len(), 2);
        assert_eq!(v["tickers"].as_array().unwrap().len(), 2);
        let back: MisSolution = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }
}
