//! Ballistic simulated bifurcation (bSB).
//!
//! Each spin is an oscillator with position `x` and momentum `p`. One step
//! runs the two pipeline stages:
//!
//! * MM: `dp_i = c0 * sum_j J_ij x_j`
//! * TE: `p_i += dt * (-(alpha0 - alpha(k)) x_i + eta * h_i + dp_i)`,
//!   `x_i += dt * p_i`, then the inelastic wall: where `|x_i| > 1`,
//!   `x_i = sgn(x_i)` and `p_i = 0`.
//!
//! `alpha(k)` ramps linearly from 0 at the first step to `alpha0` at the
//! last. After `n_steps` the spins are `sgn(x)` with `sgn(0) = +1`.
//!
//! Forces point down the gradient of `E(s) = -1/2 s^T J s - h^T s`. The
//! dynamics only descend that energy when the coupling and the bias carry
//! the same coefficient, so `c0` defaults to `eta`. Setting
//! `coupling_scale` to anything else reweights the two terms.
//!
//! Run `r` draws its initial positions from ChaCha8 seeded with `seed` on
//! stream `r`, uniform in `[-0.1, 0.1]`, with zero momenta. Results are
//! bit-identical for equal inputs regardless of thread count: every run is
//! sequential, and each MM row is reduced in ascending column order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::market_graph::MarketGraph;
use crate::mis_qubo::{
    decode, qubo_to_ising, repair, select_best, to_qubo, Coupling, IsingProblem, MisSolution, SolverKind,
    DEFAULT_PENALTY, DEFAULT_REWARD,
};

/// Half-width of the uniform initial-position distribution.
pub const INITIAL_SPREAD: f64 = 0.1;

/// Rows per parallel MM task.
const ROW_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbParams {
    pub n_steps: usize,
    pub dt: f64,
    pub eta: f64,
    pub alpha0: f64,
    /// MM output multiplier `c0`; `None` means `c0 = eta`.
    pub coupling_scale: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SbParams {
    fn default() -> Self {
        Self {
            n_steps: 1000,
            dt: 0.2,
            eta: 0.2,
            alpha0: 1.0,
            coupling_scale: None,
            restarts: 10,
            seed: 0,
        }
    }
}

impl SbParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("invalid SB parameter: {what}")));
        if self.n_steps < 1 {
            return bad("n_steps must be >= 1");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return bad("alpha0 must be positive");
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad("eta must be non-negative");
        }
        if self.coupling_scale.is_none() && self.eta == 0.0 {
            return bad("eta = 0 needs an explicit coupling_scale");
        }
        if let Some(c) = self.coupling_scale {
            if !(c > 0.0 && c.is_finite()) {
                return bad("coupling_scale must be positive");
            }
        }
        if self.restarts < 1 {
            return bad("restarts must be >= 1");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    /// Linear detuning ramp, 0 at the first step and `alpha0` at the last.
    pub fn alpha(&self, k: usize) -> f64 {
        if self.n_steps <= 1 {
            return 0.0;
        }
        self.alpha0 * k as f64 / (self.n_steps - 1) as f64
    }
}

/// Effective coefficients used by the kernel: the MM output is multiplied by
/// `coupling` and the bias by `bias`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub coupling: f64,
    pub bias: f64,
}

/// `c0 = coupling_scale`, defaulting to `eta`; the bias always uses `eta`.
pub fn resolve_scales(params: &SbParams) -> Scales {
    Scales {
        coupling: params.coupling_scale.unwrap_or(params.eta),
        bias: params.eta,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub step: usize,
}

impl SbState {
    pub fn zeros(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            p: vec![0.0; n],
            step: 0,
        }
    }

    /// Random positions in `[-0.1, 0.1]` from stream `run` of `seed`.
    pub fn initial(n: usize, seed: u64, run: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run as u64);
        let dist = Uniform::new_inclusive(-INITIAL_SPREAD, INITIAL_SPREAD).expect("ordered bounds");
        Self {
            x: (0..n).map(|_| dist.sample(&mut rng)).collect(),
            p: vec![0.0; n],
            step: 0,
        }
    }

    pub fn spins(&self) -> Vec<i8> {
        self.x.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect()
    }
}

/// Precomputed problem view and scratch buffers for stepping one run.
pub struct SbKernel<'a> {
    problem: &'a IsingProblem,
    params: SbParams,
    scales: Scales,
    field: Vec<f64>,
    upper: BitSet,
    lower: BitSet,
    interior: BitSet,
    parallel: bool,
}

impl<'a> SbKernel<'a> {
    pub fn new(problem: &'a IsingProblem, params: &SbParams) -> Result<Self> {
        params.validate()?;
        let n = problem.n_spins();
        Ok(Self {
            problem,
            params: *params,
            scales: resolve_scales(params),
            field: vec![0.0; n],
            upper: BitSet::new(n),
            lower: BitSet::new(n),
            interior: BitSet::new(n),
            parallel: n >= 4 * ROW_CHUNK,
        })
    }

    pub fn scales(&self) -> Scales {
        self.scales
    }

    /// Row-parallel MM on or off (default: on for larger problems).
    pub fn with_parallel_rows(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    /// `sum_j J_ij x_j` for every row, unscaled.
    pub fn coupling_field(&mut self, x: &[f64]) -> &[f64] {
        let n = self.problem.n_spins();
        assert_eq!(x.len(), n);
        match self.problem.coupling() {
            Coupling::Dense(j) => {
                let row = |i: usize| -> f64 { j[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum() };
                fill_rows(&mut self.field, self.parallel, row);
            }
            Coupling::Masked { adjacency, weight } => {
                self.upper.clear();
                self.lower.clear();
                self.interior.clear();
                for (i, &v) in x.iter().enumerate() {
                    if v == 1.0 {
                        self.upper.insert(i);
                    } else if v == -1.0 {
                        self.lower.insert(i);
                    } else {
                        self.interior.insert(i);
                    }
                }
                let (upper, lower, interior) = (&self.upper, &self.lower, &self.interior);
                let w = *weight;
                let row = |i: usize| -> f64 {
                    let bits = adjacency.row(i);
                    let mut walls: i64 = 0;
                    let mut free = 0.0;
                    for (k, &a) in bits.iter().enumerate() {
                        walls += (a & upper.words()[k]).count_ones() as i64;
                        walls -= (a & lower.words()[k]).count_ones() as i64;
                        let mut m = a & interior.words()[k];
                        while m != 0 {
                            free += x[k * 64 + m.trailing_zeros() as usize];
                            m &= m - 1;
                        }
                    }
                    w * (walls as f64 + free)
                };
                fill_rows(&mut self.field, self.parallel, row);
            }
        }
        &self.field
    }

    /// Advances `state` by one step.
    pub fn step(&mut self, state: &mut SbState) -> Result<()> {
        let k = state.step;
        let dt = self.params.dt;
        let detune = self.params.alpha0 - self.params.alpha(k);
        let Scales { coupling, bias } = self.scales;
        self.coupling_field(&state.x);
        let h = self.problem.bias();
        for i in 0..state.x.len() {
            let dp = coupling * self.field[i];
            state.p[i] += dt * (-detune * state.x[i] + bias * h[i] + dp);
            state.x[i] += dt * state.p[i];
            if state.x[i].abs() > 1.0 {
                state.x[i] = state.x[i].signum();
                state.p[i] = 0.0;
            }
            if !(state.x[i].is_finite() && state.p[i].is_finite()) {
                return Err(Error::Divergence { step: k });
            }
        }
        debug_assert!(state.x.iter().all(|v| v.abs() <= 1.0));
        state.step += 1;
        Ok(())
    }
}

fn fill_rows<F>(out: &mut [f64], parallel: bool, row: F)
where
    F: Fn(usize) -> f64 + Sync,
{
    if parallel {
        out.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(c, chunk)| {
            for (k, v) in chunk.iter_mut().enumerate() {
                *v = row(c * ROW_CHUNK + k);
            }
        });
    } else {
        for (i, v) in out.iter_mut().enumerate() {
            *v = row(i);
        }
    }
}

/// One bSB step from `state` (convenience wrapper around [`SbKernel`]).
pub fn sb_step(state: &SbState, problem: &IsingProblem, params: &SbParams) -> Result<SbState> {
    if state.x.len() != problem.n_spins() || state.p.len() != problem.n_spins() {
        return Err(Error::InvalidArgument("state size does not match the problem".into()));
    }
    let mut next = state.clone();
    SbKernel::new(problem, params)?.step(&mut next)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum RunStatus {
    Completed,
    Diverged { step: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbRunResult {
    pub run_index: usize,
    pub seed_used: u64,
    pub spins: Vec<i8>,
    pub energy: f64,
    /// Nodes with spin `+1`.
    pub decoded: Vec<usize>,
    pub status: RunStatus,
}

impl SbRunResult {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

/// Runs `restarts` independent trajectories in parallel and returns them in
/// run order. A diverged run is reported with its status and the spins it
/// had reached; the others are unaffected.
pub fn sb_solve(problem: &IsingProblem, params: &SbParams) -> Result<Vec<SbRunResult>> {
    params.validate()?;
    let runs: Vec<usize> = (0..params.restarts).collect();
    runs.par_iter().map(|&r| run_one(problem, params, r)).collect()
}

fn run_one(problem: &IsingProblem, params: &SbParams, run: usize) -> Result<SbRunResult> {
    let n = problem.n_spins();
    let mut kernel = SbKernel::new(problem, params)?;
    let mut state = SbState::initial(n, params.seed, run);
    let mut status = RunStatus::Completed;
    for _ in 0..params.n_steps {
        if let Err(Error::Divergence { step }) = kernel.step(&mut state) {
            log::warn!("bSB run {run} diverged at step {step}");
            status = RunStatus::Diverged { step };
            break;
        }
    }
    let spins = state.spins();
    let energy = problem.energy(&spins.iter().map(|&s| s as f64).collect::<Vec<_>>());
    Ok(SbRunResult {
        run_index: run,
        seed_used: params.seed,
        decoded: decode(&spins)?,
        spins,
        energy,
        status,
    })
}

/// All intermediate products of [`solve_mis_sb`].
#[derive(Debug, Clone)]
pub struct MisSbOutcome {
    pub runs: Vec<SbRunResult>,
    pub candidates: Vec<MisSolution>,
    pub best: Result<MisSolution, NoFeasible>,
}

/// Marker for "every run violated an edge or diverged".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoFeasible;

/// Map to QUBO (A = 2, B = 1) and Ising, run the restarts, verify each
/// decoded set and keep the best feasible one.
pub fn solve_mis_sb(graph: &MarketGraph, params: &SbParams) -> Result<MisSolution> {
    solve_mis_sb_detailed(graph, params, false)?
        .best
        .map_err(|_| Error::NoFeasibleSolution)
}

/// Like [`solve_mis_sb`]; with `repair` every run's set is made independent
/// and maximal before selection instead of being discarded.
pub fn solve_mis_sb_detailed(graph: &MarketGraph, params: &SbParams, repair_runs: bool) -> Result<MisSbOutcome> {
    params.validate()?;
    if graph.n_nodes() == 0 {
        let empty = MisSolution::new(graph, Vec::new(), SolverKind::Sb)?;
        return Ok(MisSbOutcome {
            runs: Vec::new(),
            candidates: vec![empty.clone()],
            best: Ok(empty),
        });
    }
    let ising = qubo_to_ising(&to_qubo(graph, DEFAULT_PENALTY, DEFAULT_REWARD)?);
    let runs = sb_solve(&ising, params)?;
    let mut candidates = Vec::with_capacity(runs.len());
    for run in &runs {
        let nodes = if repair_runs {
            repair(graph, &run.decoded)?
        } else {
            run.decoded.clone()
        };
        let mut sol = MisSolution::new(graph, nodes, SolverKind::Sb)?;
        sol.feasible &= run.completed() || repair_runs;
        candidates.push(sol);
    }
    let best = select_best(&candidates).map_err(|_| NoFeasible);
    Ok(MisSbOutcome { runs, candidates, best })
}
