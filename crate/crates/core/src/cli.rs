//! `misport` command line: argument definitions and subcommand drivers.
//!
//! Exit codes are 0 on success, 1 for runtime or data errors and 2 for usage
//! errors, which include unreadable input paths and invalid flag combinations
//! detected before any work starts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::backtest::{
    difr_for_report, load_caps, run_backtest, sweep_theta, theta_grid, write_difr_csv, BacktestConfig,
    BacktestReport, Lookback, Weighting,
};
use crate::error::Error;
use crate::market_graph::{build_graph, MarketGraph};
use crate::mis_qubo::{
    solve_exact_with, solve_greedy, ExactOptions, MisSolution, SolverKind, DEFAULT_EXACT_NODE_LIMIT,
};
use crate::sb_solver::{solve_mis_sb_detailed, SbParams};
use crate::timeseries::{
    correlation, load_prices, log_returns, synth_panel, synth_panel_with, PricePanel, SynthConfig,
    DEFAULT_LOOKBACK_DAYS,
};

#[derive(Debug, Parser)]
#[command(name = "misport", version, about = "Correlation-diversified portfolios from maximum independent sets")]
pub struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Info)]
    pub log_level: LogLevel,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogLevel {
    Quiet,
    Info,
    Debug,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic factor-model price panel.
    Synth(SynthArgs),
    /// Build a market graph and write its edge list.
    BuildGraph(BuildGraphArgs),
    /// Find an independent set of an edge-list graph.
    Solve(SolveArgs),
    /// Run the monthly strategy simulation.
    Backtest(BacktestArgs),
    /// Backtest over a grid of thresholds and weightings.
    Sweep(SweepArgs),
    /// Time and compare solvers on synthetic market graphs.
    Bench(BenchArgs),
    /// Per-stock return difference against a cap-weighted benchmark.
    Difr(DifrArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 20, value_parser = positive)]
    pub stocks: usize,
    #[arg(long, default_value_t = 1000, value_parser = positive)]
    pub days: usize,
    #[arg(long, default_value_t = 3, value_parser = positive)]
    pub factors: usize,
    /// Use the wider market-like parameter set (ignores --factors).
    #[arg(long)]
    pub market_like: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    #[arg(long)]
    pub prices: PathBuf,
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = DEFAULT_LOOKBACK_DAYS, value_parser = positive)]
    pub window_days: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Edge-list file.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverKind::Sb)]
    pub solver: SolverKind,
    #[arg(long, default_value_t = 10, value_parser = positive)]
    pub restarts: usize,
    /// SB parameters as JSON; unspecified fields keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Repair infeasible SB runs instead of discarding them.
    #[arg(long)]
    pub repair: bool,
    #[arg(long, default_value_t = DEFAULT_EXACT_NODE_LIMIT)]
    pub node_limit: usize,
    /// Time budget for the exact solver.
    #[arg(long)]
    pub timeout_secs: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Strategy flags shared by `backtest`, `sweep` and `difr`.
#[derive(Debug, Args)]
pub struct StrategyArgs {
    #[arg(long)]
    pub prices: PathBuf,
    /// Trading cost in basis points of traded amount (10 = 0.1%).
    #[arg(long, default_value_t = 10.0)]
    pub cost_bps: f64,
    #[arg(long, default_value_t = DEFAULT_LOOKBACK_DAYS, value_parser = positive, conflicts_with = "window_months")]
    pub window_days: usize,
    /// Calendar-month lookback instead of trailing days.
    #[arg(long, value_parser = positive)]
    pub window_months: Option<usize>,
    #[arg(long, value_enum, default_value_t = SolverKind::Sb)]
    pub solver: SolverKind,
    #[arg(long, default_value_t = 10, value_parser = positive)]
    pub restarts: usize,
    /// SB parameters as JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub repair: bool,
    /// Drop zero-volatility names under IVW instead of failing.
    #[arg(long)]
    pub drop_zero_vol: bool,
    #[arg(long, default_value_t = DEFAULT_EXACT_NODE_LIMIT)]
    pub node_limit: usize,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, value_enum, default_value_t = Weighting::Ew)]
    pub weighting: Weighting,
    /// Report JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Cumulative-return CSV (default: next to --out with a `.cumulative.csv` suffix).
    #[arg(long)]
    pub cumulative_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[arg(long, default_value_t = 0.18, allow_negative_numbers = true)]
    pub theta_min: f64,
    #[arg(long, default_value_t = 0.36, allow_negative_numbers = true)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub theta_step: f64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Weighting::Ew, Weighting::Ivw])]
    pub weightings: Vec<Weighting>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [20, 50, 100], value_parser = positive)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 10, value_parser = positive)]
    pub graphs_per_size: usize,
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SolverKind::Exact, SolverKind::Greedy, SolverKind::Sb])]
    pub solvers: Vec<SolverKind>,
    /// Per-graph budget for the exact solver.
    #[arg(long, default_value_t = 10.0)]
    pub timeout_secs: f64,
    #[arg(long, default_value_t = 10, value_parser = positive)]
    pub restarts: usize,
    /// Trading days per synthetic panel (one correlation window).
    #[arg(long, default_value_t = DEFAULT_LOOKBACK_DAYS + 1, value_parser = positive)]
    pub days: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DifrArgs {
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, value_enum, default_value_t = Weighting::Ew)]
    pub weighting: Weighting,
    /// `date,ticker,cap` CSV.
    #[arg(long)]
    pub caps: PathBuf,
    /// First rebalance date of the period (YYYY-MM-DD).
    #[arg(long)]
    pub from: NaiveDate,
    /// Last month-end of the period (YYYY-MM-DD).
    #[arg(long)]
    pub to: NaiveDate,
    #[arg(long)]
    pub out: PathBuf,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.log_level);
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn init_logging(level: LogLevel) {
    let filter = match level {
        LogLevel::Quiet => log::LevelFilter::Error,
        LogLevel::Info => log::LevelFilter::Info,
        LogLevel::Debug => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(filter)
        .format_target(false)
        .try_init();
}

pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::debug!("thread pool already initialised: {e}");
        }
    }
    let seed = cli.seed;
    match cli.command {
        Command::Synth(a) => cmd_synth(a, seed),
        Command::BuildGraph(a) => cmd_build_graph(a),
        Command::Solve(a) => cmd_solve(a, seed),
        Command::Backtest(a) => cmd_backtest(a, seed),
        Command::Sweep(a) => cmd_sweep(a, seed),
        Command::Bench(a) => cmd_bench(a, seed),
        Command::Difr(a) => cmd_difr(a, seed),
    }
}

fn input(path: &Path) -> CliResult<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::Usage(format!("cannot read input file {}", path.display())))
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e).into())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(Error::from)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn load_panel(path: &Path) -> CliResult<PricePanel> {
    let loaded = load_prices(input(path)?)?;
    if !loaded.dropped.is_empty() {
        log::info!("dropped {} ticker(s) with missing or invalid prices", loaded.dropped.len());
    }
    Ok(loaded.panel)
}

fn load_sb_params(path: Option<&PathBuf>) -> CliResult<SbParams> {
    match path {
        None => Ok(SbParams::default()),
        Some(p) => {
            let text = std::fs::read_to_string(input(p)?).map_err(|e| Error::io(p, e))?;
            SbParams::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

fn cmd_synth(a: SynthArgs, seed: u64) -> CliResult<()> {
    let panel = if a.market_like {
        synth_panel_with(&SynthConfig::market_like(a.stocks, a.days, seed))?
    } else {
        synth_panel(a.stocks, a.days, a.factors, seed)?
    };
    panel.save_csv(&a.out)?;
    println!("wrote {} stocks x {} days to {}", a.stocks, a.days, a.out.display());
    Ok(())
}

fn cmd_build_graph(a: BuildGraphArgs) -> CliResult<()> {
    let panel = load_panel(&a.prices)?;
    let corr = correlation(&log_returns(&panel)?, a.window_days)?;
    let graph = build_graph(&corr, a.theta);
    graph.save_edge_list(&a.out)?;
    let density = graph
        .edge_density()
        .map(|d| format!("{d:.6}"))
        .unwrap_or_else(|_| "undefined".into());
    println!(
        "nodes {} edges {} density {density} theta {}",
        graph.n_nodes(),
        graph.n_edges(),
        a.theta
    );
    Ok(())
}

fn cmd_solve(a: SolveArgs, seed: u64) -> CliResult<()> {
    let graph = MarketGraph::load_edge_list(input(&a.graph)?)?;
    let solution = match a.solver {
        SolverKind::Greedy => solve_greedy(&graph),
        SolverKind::Exact => {
            let options = ExactOptions {
                node_limit: a.node_limit,
                deadline: deadline(a.timeout_secs)?,
            };
            solve_exact_with(&graph, options)?
        }
        SolverKind::Sb => {
            let params = SbParams {
                restarts: a.restarts,
                seed,
                ..load_sb_params(a.config.as_ref())?
            };
            let outcome = solve_mis_sb_detailed(&graph, &params, a.repair)?;
            for (run, cand) in outcome.runs.iter().zip(&outcome.candidates) {
                println!(
                    "run {} energy {:.6} size {} feasible {}",
                    run.run_index,
                    run.energy,
                    cand.size(),
                    cand.feasible
                );
            }
            outcome.best.map_err(|_| Error::NoFeasibleSolution)?
        }
    };
    write_json(&a.out, &solution)?;
    println!("{} size {} -> {}", a.solver, solution.size(), a.out.display());
    Ok(())
}

fn deadline(secs: Option<f64>) -> CliResult<Option<Instant>> {
    match secs {
        None => Ok(None),
        Some(s) if s >= 0.0 && s.is_finite() => Ok(Some(Instant::now() + Duration::from_secs_f64(s))),
        Some(s) => Err(CliError::Usage(format!("--timeout-secs {s} must be non-negative"))),
    }
}

fn strategy_config(s: &StrategyArgs, theta: f64, weighting: Weighting, seed: u64) -> CliResult<BacktestConfig> {
    let cfg = BacktestConfig {
        theta,
        weighting,
        cost_rate: s.cost_bps / 10_000.0,
        lookback: match s.window_months {
            Some(m) => Lookback::Months(m),
            None => Lookback::Days(s.window_days),
        },
        solver: s.solver,
        restarts: s.restarts,
        seed,
        sb: load_sb_params(s.config.as_ref())?,
        repair: s.repair,
        drop_zero_vol: s.drop_zero_vol,
        exact_node_limit: s.node_limit,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn print_summary(report: &BacktestReport) {
    let flagged = report.months.iter().filter(|m| !m.feasible).count();
    match &report.summary {
        Some(s) => println!(
            "{} months, annual return {:.4}, annual risk {:.4}, sharpe {}",
            s.n_months, s.annual_return, s.annual_risk, s.sharpe
        ),
        None => println!("{} monthly returns (too few to summarize)", report.monthly_returns.len()),
    }
    if flagged > 0 {
        println!("{flagged} month(s) without a feasible set held the previous portfolio");
    }
}

fn cmd_backtest(a: BacktestArgs, seed: u64) -> CliResult<()> {
    let cfg = strategy_config(&a.strategy, a.theta, a.weighting, seed)?;
    let panel = load_panel(&a.strategy.prices)?;
    let report = run_backtest(&panel, &cfg)?;
    write_json(&a.out, &report)?;
    let cum_path = a
        .cumulative_out
        .clone()
        .unwrap_or_else(|| a.out.with_extension("cumulative.csv"));
    let mut w = create(&cum_path)?;
    report.write_cumulative_csv(&mut w)?;
    print_summary(&report);
    println!("report -> {}, cumulative -> {}", a.out.display(), cum_path.display());
    Ok(())
}

fn cmd_sweep(a: SweepArgs, seed: u64) -> CliResult<()> {
    let thetas =
        theta_grid(a.theta_min, a.theta_max, a.theta_step).map_err(|e| CliError::Usage(e.to_string()))?;
    let base = strategy_config(&a.strategy, thetas[0], a.weightings[0], seed)?;
    for &t in &thetas {
        BacktestConfig { theta: t, ..base.clone() }
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let panel = load_panel(&a.strategy.prices)?;
    let table = sweep_theta(&panel, &base, &thetas, &a.weightings)?;
    table.write_csv(create(&a.out)?)?;
    let failed = table
        .rows
        .iter()
        .flat_map(|r| &r.cells)
        .filter(|c| c.outcome.is_err())
        .count();
    println!(
        "{} thresholds x {} weightings -> {}{}",
        table.rows.len(),
        a.weightings.len(),
        a.out.display(),
        if failed > 0 {
            format!(" ({failed} setting(s) failed)")
        } else {
            String::new()
        }
    );
    Ok(())
}

/// One `(size, solver)` line of the bench table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BenchRow {
    pub n_nodes: usize,
    pub solver: SolverKind,
    pub graphs: usize,
    pub completed: usize,
    pub timeouts: usize,
    pub infeasible: usize,
    pub status: String,
    pub mean_time_secs: Option<f64>,
    pub mean_size: Option<f64>,
    /// Mean ratio to the largest set any solver found on the same graph.
    pub relative_size: Option<f64>,
    pub mean_edge_density: f64,
}

enum Attempt {
    Found(usize, f64),
    Timeout,
    Infeasible,
}

/// Runs every solver on `graphs_per_size` synthetic market graphs per size.
/// The exact solver has no size limit here; `timeout_secs` bounds it instead.
pub fn run_bench(a: &BenchArgs, seed: u64) -> crate::Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &n in &a.sizes {
        let mut attempts: Vec<Vec<Attempt>> = a.solvers.iter().map(|_| Vec::new()).collect();
        let mut best = Vec::new();
        let mut density = 0.0;
        for g in 0..a.graphs_per_size {
            let graph_seed = seed.wrapping_add((n as u64) << 20).wrapping_add(g as u64);
            let panel = synth_panel_with(&SynthConfig::market_like(n, a.days, graph_seed))?;
            let returns = log_returns(&panel)?;
            let graph = build_graph(&correlation(&returns, returns.n_rows())?, a.theta);
            density += graph.edge_density().unwrap_or(0.0);
            let mut top = 0;
            for (k, &solver) in a.solvers.iter().enumerate() {
                let attempt = bench_one(&graph, solver, a, graph_seed)?;
                if let Attempt::Found(size, _) = attempt {
                    top = top.max(size);
                }
                attempts[k].push(attempt);
            }
            best.push(top);
        }
        for (k, &solver) in a.solvers.iter().enumerate() {
            let list = &attempts[k];
            let found: Vec<(usize, usize, f64)> = list
                .iter()
                .enumerate()
                .filter_map(|(g, at)| match at {
                    Attempt::Found(s, t) => Some((g, *s, *t)),
                    _ => None,
                })
                .collect();
            let timeouts = list.iter().filter(|at| matches!(at, Attempt::Timeout)).count();
            let infeasible = list.iter().filter(|at| matches!(at, Attempt::Infeasible)).count();
            let mean = |xs: &mut dyn Iterator<Item = f64>| -> Option<f64> {
                let v: Vec<f64> = xs.collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            };
            let status = if found.len() == list.len() {
                "ok"
            } else if found.is_empty() {
                if timeouts > 0 {
                    "timeout"
                } else {
                    "infeasible"
                }
            } else {
                "partial"
            };
            rows.push(BenchRow {
                n_nodes: n,
                solver,
                graphs: list.len(),
                completed: found.len(),
                timeouts,
                infeasible,
                status: status.into(),
                mean_time_secs: mean(&mut found.iter().map(|f| f.2)),
                mean_size: mean(&mut found.iter().map(|f| f.1 as f64)),
                relative_size: mean(&mut found.iter().map(|&(g, s, _)| {
                    if best[g] == 0 {
                        1.0
                    } else {
                        s as f64 / best[g] as f64
                    }
                })),
                mean_edge_density: density / a.graphs_per_size as f64,
            });
        }
    }
    Ok(rows)
}

fn bench_one(graph: &MarketGraph, solver: SolverKind, a: &BenchArgs, seed: u64) -> crate::Result<Attempt> {
    let start = Instant::now();
    let result: crate::Result<MisSolution> = match solver {
        SolverKind::Greedy => Ok(solve_greedy(graph)),
        SolverKind::Exact => solve_exact_with(
            graph,
            ExactOptions {
                node_limit: usize::MAX,
                deadline: Some(start + Duration::from_secs_f64(a.timeout_secs)),
            },
        ),
        SolverKind::Sb => {
            let params = SbParams {
                restarts: a.restarts,
                seed,
                ..SbParams::default()
            };
            crate::sb_solver::solve_mis_sb(graph, &params)
        }
    };
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok(sol) => Ok(Attempt::Found(sol.size(), secs)),
        Err(Error::Timeout) => Ok(Attempt::Timeout),
        Err(Error::NoFeasibleSolution) => Ok(Attempt::Infeasible),
        Err(e) => Err(e),
    }
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], w: W) -> crate::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)
            .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
    }
    out.flush().map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))
}

fn cmd_bench(a: BenchArgs, seed: u64) -> CliResult<()> {
    if !(a.timeout_secs >= 0.0 && a.timeout_secs.is_finite()) {
        return Err(CliError::Usage("--timeout-secs must be non-negative".into()));
    }
    if !(-1.0..=1.0).contains(&a.theta) {
        return Err(CliError::Usage(format!("--theta {} outside [-1, 1]", a.theta)));
    }
    if a.days < 3 {
        return Err(CliError::Usage("--days must be at least 3".into()));
    }
    let rows = run_bench(&a, seed)?;
    write_bench_csv(&rows, create(&a.out)?)?;
    for r in &rows {
        println!(
            "n={:<5} {:<6} {:>3}/{} done, mean time {}, relative size {}",
            r.n_nodes,
            r.solver.to_string(),
            r.completed,
            r.graphs,
            r.mean_time_secs.map_or("-".into(), |t| format!("{t:.4}s")),
            r.relative_size.map_or("-".into(), |x| format!("{:.1}%", 100.0 * x)),
        );
    }
    Ok(())
}

fn cmd_difr(a: DifrArgs, seed: u64) -> CliResult<()> {
    let cfg = strategy_config(&a.strategy, a.theta, a.weighting, seed)?;
    if a.from >= a.to {
        return Err(CliError::Usage(format!("--from {} must precede --to {}", a.from, a.to)));
    }
    let caps = load_caps(input(&a.caps)?)?;
    let panel = load_panel(&a.strategy.prices)?;
    let report = run_backtest(&panel, &cfg)?;
    let rows = difr_for_report(&panel, &report, &caps, a.from, a.to)?;
    write_difr_csv(&rows, create(&a.out)?)?;
    let show = |r: &crate::backtest::DifrRow| println!("{:>4} {:<10} {:+.6}", r.rank, r.ticker, r.difr);
    let k = rows.len().min(5);
    rows[..k].iter().for_each(show);
    if rows.len() > 2 * k {
        println!("   ...");
    }
    rows[rows.len().saturating_sub(k).max(k)..].iter().for_each(show);
    Ok(())
}
