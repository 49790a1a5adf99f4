//! C ABI over `mis-portfolio`.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns an
//! [`MpStatus`]; on failure a description is available from
//! [`mp_last_error`] on the same thread. Strings returned by the library are
//! released with [`mp_string_free`]. Panics never unwind into C: they are
//! reported as `MP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mis_portfolio::backtest::{run_backtest, BacktestConfig, BacktestReport, Lookback, Weighting};
use mis_portfolio::market_graph::{build_graph, MarketGraph};
use mis_portfolio::mis_qubo::{solve_exact, solve_greedy, MisSolution, SolverKind, DEFAULT_EXACT_NODE_LIMIT};
use mis_portfolio::sb_solver::{solve_mis_sb_detailed, SbParams};
use mis_portfolio::timeseries::{correlation, load_prices, log_returns, synth_panel, PricePanel, DEFAULT_LOOKBACK_DAYS};
use mis_portfolio::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    InsufficientData = 5,
    SizeLimit = 6,
    Timeout = 7,
    NoFeasibleSolution = 8,
    Numerical = 9,
    Data = 10,
    Panic = 11,
}

impl From<&Error> for MpStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => MpStatus::Io,
            Error::Parse { .. } | Error::Json(_) => MpStatus::Parse,
            Error::InsufficientData { .. } | Error::EmptyUniverse => MpStatus::InsufficientData,
            Error::SizeLimit { .. } => MpStatus::SizeLimit,
            Error::Timeout => MpStatus::Timeout,
            Error::NoFeasibleSolution => MpStatus::NoFeasibleSolution,
            Error::Divergence { .. } | Error::UndefinedDensity(_) => MpStatus::Numerical,
            Error::ZeroVolatility(_)
            | Error::MissingPrice { .. }
            | Error::Accounting(_)
            | Error::EmptyPortfolio
            | Error::Range { .. } => MpStatus::Data,
            _ => MpStatus::InvalidArgument,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpSolver {
    Sb = 0,
    Greedy = 1,
    Exact = 2,
}

impl From<MpSolver> for SolverKind {
    fn from(s: MpSolver) -> Self {
        match s {
            MpSolver::Sb => SolverKind::Sb,
            MpSolver::Greedy => SolverKind::Greedy,
            MpSolver::Exact => SolverKind::Exact,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpWeighting {
    Ew = 0,
    Ivw = 1,
}

/// SB parameters. `coupling_scale <= 0` selects the default.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpSbParams {
    pub n_steps: usize,
    pub dt: f64,
    pub eta: f64,
    pub alpha0: f64,
    pub coupling_scale: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl From<&MpSbParams> for SbParams {
    fn from(p: &MpSbParams) -> Self {
        SbParams {
            n_steps: p.n_steps,
            dt: p.dt,
            eta: p.eta,
            alpha0: p.alpha0,
            coupling_scale: (p.coupling_scale > 0.0).then_some(p.coupling_scale),
            restarts: p.restarts,
            seed: p.seed,
        }
    }
}

/// Backtest settings; the SB dynamics use their defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpBacktestConfig {
    pub theta: f64,
    pub weighting: MpWeighting,
    pub cost_rate: f64,
    pub lookback_days: usize,
    pub solver: MpSolver,
    pub restarts: usize,
    pub seed: u64,
    pub repair: bool,
}

/// Price panel handle.
pub struct MpPanel(PricePanel);
/// Market graph handle.
pub struct MpGraph(MarketGraph);
/// Independent-set handle.
pub struct MpSolution(MisSolution);
/// Backtest report handle.
pub struct MpReport(BacktestReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, records any failure and converts it to a status.
fn guard(f: impl FnOnce() -> Result<(), (MpStatus, String)>) -> MpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MpStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MpStatus::Panic
        }
    }
}

fn core(e: Error) -> (MpStatus, String) {
    (MpStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (MpStatus, String) {
    (MpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (MpStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (MpStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (MpStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (MpStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_panel_load(path: *const c_char, out: *mut *mut MpPanel) -> MpStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let loaded = load_prices(path).map_err(core)?;
        put(out, MpPanel(loaded.panel))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_panel_synth(
    n_stocks: usize,
    n_days: usize,
    n_factors: usize,
    seed: u64,
    out: *mut *mut MpPanel,
) -> MpStatus {
    guard(|| {
        let panel = synth_panel(n_stocks, n_days, n_factors, seed).map_err(core)?;
        put(out, MpPanel(panel))
    })
}

/// # Safety
/// `panel` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mp_panel_n_tickers(panel: *const MpPanel) -> usize {
    panel.as_ref().map_or(0, |p| p.0.n_tickers())
}

/// # Safety
/// `panel` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mp_panel_n_dates(panel: *const MpPanel) -> usize {
    panel.as_ref().map_or(0, |p| p.0.n_dates())
}

/// # Safety
/// `panel` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mp_panel_free(panel: *mut MpPanel) {
    if !panel.is_null() {
        drop(Box::from_raw(panel));
    }
}

/// Graph over the trailing `window_days` returns of `panel`; `window_days = 0`
/// uses the default lookback.
///
/// # Safety
/// `panel` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_graph_build(
    panel: *const MpPanel,
    theta: f64,
    window_days: usize,
    out: *mut *mut MpGraph,
) -> MpStatus {
    guard(|| {
        let panel = as_ref(panel, "panel")?;
        let window = if window_days == 0 { DEFAULT_LOOKBACK_DAYS } else { window_days };
        let returns = log_returns(&panel.0).map_err(core)?;
        let corr = correlation(&returns, window).map_err(core)?;
        put(out, MpGraph(build_graph(&corr, theta)))
    })
}

/// Graph from `n_edges` pairs stored flat in `edges` (`2 * n_edges` entries).
///
/// # Safety
/// `edges` must point to `2 * n_edges` values (or be NULL when `n_edges` is 0);
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_graph_from_edges(
    n_nodes: usize,
    edges: *const usize,
    n_edges: usize,
    out: *mut *mut MpGraph,
) -> MpStatus {
    guard(|| {
        let flat: &[usize] = if n_edges == 0 {
            &[]
        } else if edges.is_null() {
            return Err(null("edges"));
        } else {
            std::slice::from_raw_parts(edges, 2 * n_edges)
        };
        let pairs: Vec<(usize, usize)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        put(out, MpGraph(MarketGraph::from_edges(n_nodes, &pairs).map_err(core)?))
    })
}

/// # Safety
/// `graph` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mp_graph_n_nodes(graph: *const MpGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n_nodes())
}

/// # Safety
/// `graph` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mp_graph_n_edges(graph: *const MpGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n_edges())
}

/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_graph_density(graph: *const MpGraph, out: *mut f64) -> MpStatus {
    guard(|| {
        let d = as_ref(graph, "graph")?.0.edge_density().map_err(core)?;
        out.as_mut().map(|o| *o = d).ok_or_else(|| null("output pointer"))
    })
}

/// # Safety
/// `graph` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mp_graph_free(graph: *mut MpGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

#[no_mangle]
pub extern "C" fn mp_sb_params_default() -> MpSbParams {
    let p = SbParams::default();
    MpSbParams {
        n_steps: p.n_steps,
        dt: p.dt,
        eta: p.eta,
        alpha0: p.alpha0,
        coupling_scale: p.coupling_scale.unwrap_or(0.0),
        restarts: p.restarts,
        seed: p.seed,
    }
}

/// Solves `graph` for an independent set. `params` is used by the SB solver
/// and may be NULL for defaults.
///
/// # Safety
/// `graph` must be a live handle, `params` NULL or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mp_solve(
    graph: *const MpGraph,
    solver: MpSolver,
    params: *const MpSbParams,
    out: *mut *mut MpSolution,
) -> MpStatus {
    guard(|| {
        let graph = &as_ref(graph, "graph")?.0;
        let solution = match solver {
            MpSolver::Greedy => solve_greedy(graph),
            MpSolver::Exact => solve_exact(graph, DEFAULT_EXACT_NODE_LIMIT).map_err(core)?,
            MpSolver::Sb => {
                let params = params.as_ref().map(SbParams::from).unwrap_or_default();
                solve_mis_sb_detailed(graph, &params, false)
                    .map_err(core)?
                    .best
                    .map_err(|_| core(Error::NoFeasibleSolution))?
            }
        };
        put(out, MpSolution(solution))
    })
}

/// # Safety
/// `solution` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mp_solution_size(solution: *const MpSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.size())
}

/// # Safety
/// `solution` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mp_solution_feasible(solution: *const MpSolution) -> bool {
    solution.as_ref().is_some_and(|s| s.0.feasible)
}

/// Copies up to `capacity` node indices into `buffer` and stores the full
/// count in `written`. A short buffer is not an error; compare the counts.
///
/// # Safety
/// `buffer` must hold `capacity` values (or be NULL when `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn mp_solution_nodes(
    solution: *const MpSolution,
    buffer: *mut usize,
    capacity: usize,
    written: *mut usize,
) -> MpStatus {
    guard(|| {
        let nodes = &as_ref(solution, "solution")?.0.nodes;
        let k = nodes.len().min(capacity);
        if k > 0 {
            if buffer.is_null() {
                return Err(null("buffer"));
            }
            ptr::copy_nonoverlapping(nodes.as_ptr(), buffer, k);
        }
        if let Some(w) = written.as_mut() {
            *w = nodes.len();
        }
        Ok(())
    })
}

/// JSON form of the solution; release with [`mp_string_free`]. NULL on error.
///
/// # Safety
/// `solution` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mp_solution_to_json(solution: *const MpSolution) -> *mut c_char {
    to_json(solution.as_ref().map(|s| &s.0))
}

/// # Safety
/// `solution` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mp_solution_free(solution: *mut MpSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

#[no_mangle]
pub extern "C" fn mp_backtest_config_default() -> MpBacktestConfig {
    let c = BacktestConfig::default();
    MpBacktestConfig {
        theta: c.theta,
        weighting: MpWeighting::Ew,
        cost_rate: c.cost_rate,
        lookback_days: DEFAULT_LOOKBACK_DAYS,
        solver: MpSolver::Sb,
        restarts: c.restarts,
        seed: c.seed,
        repair: c.repair,
    }
}

/// # Safety
/// `panel` must be a live handle, `config` valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mp_backtest_run(
    panel: *const MpPanel,
    config: *const MpBacktestConfig,
    out: *mut *mut MpReport,
) -> MpStatus {
    guard(|| {
        let panel = as_ref(panel, "panel")?;
        let c = as_ref(config, "config")?;
        let cfg = BacktestConfig {
            theta: c.theta,
            weighting: match c.weighting {
                MpWeighting::Ew => Weighting::Ew,
                MpWeighting::Ivw => Weighting::Ivw,
            },
            cost_rate: c.cost_rate,
            lookback: Lookback::Days(c.lookback_days),
            solver: c.solver.into(),
            restarts: c.restarts,
            seed: c.seed,
            repair: c.repair,
            ..BacktestConfig::default()
        };
        put(out, MpReport(run_backtest(&panel.0, &cfg).map_err(core)?))
    })
}

/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mp_report_n_months(report: *const MpReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.months.len())
}

/// Annualized return, risk and Sharpe ratio. Sharpe markers map to +inf,
/// -inf and NaN. Fails with `MP_STATUS_INSUFFICIENT_DATA` when the report
/// is too short to summarize.
///
/// # Safety
/// `report` must be a live handle; output pointers may be NULL.
#[no_mangle]
pub unsafe extern "C" fn mp_report_summary(
    report: *const MpReport,
    annual_return: *mut f64,
    annual_risk: *mut f64,
    sharpe: *mut f64,
) -> MpStatus {
    guard(|| {
        let r = &as_ref(report, "report")?.0;
        let s = r.summary.ok_or_else(|| {
            core(Error::InsufficientData {
                needed: mis_portfolio::backtest::MIN_SUMMARY_MONTHS,
                available: r.monthly_returns.len(),
            })
        })?;
        for (p, v) in [(annual_return, s.annual_return), (annual_risk, s.annual_risk), (sharpe, s.sharpe.as_f64())] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Report JSON; release with [`mp_string_free`]. NULL on error.
///
/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mp_report_to_json(report: *const MpReport) -> *mut c_char {
    to_json(report.as_ref().map(|r| &r.0))
}

/// # Safety
/// `report` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mp_report_free(report: *mut MpReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

fn to_json<T: serde::Serialize>(value: Option<&T>) -> *mut c_char {
    let mut result = ptr::null_mut();
    guard(|| {
        let v = value.ok_or_else(|| null("handle"))?;
        let text = serde_json::to_string(v).map_err(|e| core(e.into()))?;
        result = into_c_string(text);
        Ok(())
    });
    result
}
