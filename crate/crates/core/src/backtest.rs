//! Monthly rebalancing simulation of the MIS portfolio strategy, and the
//! θ-sweep and DIFR analyses built on it.
//!
//! At each month-end close the trailing window of daily log returns, up to and
//! including that day, gives correlations and volatilities. The market graph
//! at `theta` is solved for an independent set, which is weighted EW or IVW and
//! traded at the same close. Turnover is measured against the pre-cost target
//! (`value_before * w`), and `cost_rate * turnover` is taken out of the value
//! before the new holdings are set, so `value_after = value_before - cost`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::market_graph::{build_graph, MarketGraph};
use crate::mis_qubo::{solve_exact, solve_greedy, MisSolution, SolverKind, DEFAULT_EXACT_NODE_LIMIT};
use crate::sb_solver::{solve_mis_sb_detailed, SbParams};
use crate::timeseries::{
    correlation_of, log_returns, volatility_of, CorrelationMatrix, PricePanel, DEFAULT_LOOKBACK_DAYS,
    ZERO_VOLATILITY,
};

pub const DEFAULT_COST_RATE: f64 = 0.001;
pub const DEFAULT_THETA: f64 = 0.25;
/// Fewest monthly returns [`summarize`] accepts.
pub const MIN_SUMMARY_MONTHS: usize = 12;

const INITIAL_VALUE: f64 = 1.0;
/// Risk at or below this fraction of the mean absolute return is zero.
const ZERO_RISK: f64 = 1e-12;
const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Equal weights.
    Ew,
    /// Inverse-volatility weights.
    Ivw,
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Ew => "ew",
            Weighting::Ivw => "ivw",
        })
    }
}

/// Length of the estimation window behind each rebalance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lookback {
    /// Trailing daily returns.
    Days(usize),
    /// Daily returns since the month-end this many months earlier.
    Months(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    pub theta: f64,
    pub weighting: Weighting,
    pub cost_rate: f64,
    pub lookback: Lookback,
    pub solver: SolverKind,
    pub restarts: usize,
    pub seed: u64,
    /// SB dynamics; `restarts` and `seed` here are overridden per month.
    pub sb: SbParams,
    /// Repair infeasible SB runs instead of discarding them.
    pub repair: bool,
    /// Under IVW, drop zero-volatility names with a warning instead of failing.
    pub drop_zero_vol: bool,
    pub exact_node_limit: usize,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            weighting: Weighting::Ew,
            cost_rate: DEFAULT_COST_RATE,
            lookback: Lookback::Days(DEFAULT_LOOKBACK_DAYS),
            solver: SolverKind::Sb,
            restarts: 10,
            seed: 0,
            sb: SbParams::default(),
            repair: false,
            drop_zero_vol: false,
            exact_node_limit: DEFAULT_EXACT_NODE_LIMIT,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidArgument(what));
        if !(-1.0..=1.0).contains(&self.theta) {
            return bad(format!("theta {} outside [-1, 1]", self.theta));
        }
        // A cost rate of 0.5 or more can wipe out the portfolio in one trade.
        if !(self.cost_rate >= 0.0 && self.cost_rate < 0.5) {
            return bad(format!("cost rate {} outside [0, 0.5)", self.cost_rate));
        }
        match self.lookback {
            Lookback::Days(0) | Lookback::Months(0) => return bad("lookback must be positive".into()),
            _ => {}
        }
        if self.restarts == 0 {
            return bad("restarts must be >= 1".into());
        }
        self.sb_params(0).validate()
    }

    fn sb_params(&self, seed: u64) -> SbParams {
        SbParams {
            restarts: self.restarts,
            seed,
            ..self.sb
        }
    }
}

pub fn weights_ew(n: usize) -> Result<Vec<f64>> {
    normalize(vec![1.0; n])
}

/// `w_i = v_i^-1 / sum_k v_k^-1`, aligned with `tickers`.
pub fn weights_ivw(tickers: &[String], vols: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(tickers.len(), vols.len());
    if let Some(k) = vols.iter().position(|&v| !(v > ZERO_VOLATILITY)) {
        return Err(Error::ZeroVolatility(tickers[k].clone()));
    }
    // Scaling by the smallest volatility keeps equal volatilities at exactly
    // 1.0, so EW and IVW agree bit for bit in that case.
    let v_min = vols.iter().copied().fold(f64::INFINITY, f64::min);
    normalize(vols.iter().map(|&v| v_min / v).collect())
}

fn normalize(mut raw: Vec<f64>) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::EmptyPortfolio);
    }
    let total: f64 = raw.iter().sum();
    raw.iter_mut().for_each(|w| *w /= total);
    Ok(raw)
}

/// `value / prev_value - 1`
pub fn monthly_return(prev_value: f64, value: f64) -> Result<f64> {
    if !(prev_value > 0.0) {
        return Err(Error::Accounting(prev_value));
    }
    Ok(value / prev_value - 1.0)
}

/// Holdings after a rebalance. Weights and shares are keyed by ticker.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Portfolio {
    pub date: Option<NaiveDate>,
    pub holdings: BTreeMap<String, f64>,
    pub shares: BTreeMap<String, f64>,
    pub cash: f64,
    pub value: f64,
}

impl Portfolio {
    pub fn cash(value: f64) -> Self {
        Self {
            cash: value,
            value,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RebalanceOutcome {
    pub portfolio: Portfolio,
    pub value_before: f64,
    pub turnover: f64,
    pub cost: f64,
}

/// Moves `prev` (marked to `prices`) into `new_weights`. Turnover is
/// `sum |value_before * w_new - current|` over all names; converting cash is
/// not a trade.
pub fn rebalance(
    prev: &Portfolio,
    new_weights: &BTreeMap<String, f64>,
    prices: &BTreeMap<String, f64>,
    date: NaiveDate,
    cost_rate: f64,
) -> Result<RebalanceOutcome> {
    let price = |t: &str| {
        prices
            .get(t)
            .copied()
            .filter(|p| *p > 0.0 && p.is_finite())
            .ok_or_else(|| Error::MissingPrice {
                ticker: t.to_string(),
                date: date.to_string(),
            })
    };
    check_weights(new_weights.values().copied())?;
    let mut current = BTreeMap::new();
    for (t, &s) in &prev.shares {
        current.insert(t.as_str(), s * price(t)?);
    }
    let value_before = prev.cash + current.values().sum::<f64>();
    let names: BTreeSet<&str> = current.keys().copied().chain(new_weights.keys().map(String::as_str)).collect();
    let mut turnover = 0.0;
    for t in names {
        let target = value_before * new_weights.get(t).copied().unwrap_or(0.0);
        turnover += (target - current.get(t).copied().unwrap_or(0.0)).abs();
    }
    let cost = cost_rate * turnover;
    let value = value_before - cost;
    if !(value > 0.0) {
        return Err(Error::Accounting(value));
    }
    let mut shares = BTreeMap::new();
    for (t, &w) in new_weights {
        shares.insert(t.clone(), value * w / price(t)?);
    }
    Ok(RebalanceOutcome {
        portfolio: Portfolio {
            date: Some(date),
            holdings: new_weights.clone(),
            shares,
            cash: 0.0,
            value,
        },
        value_before,
        turnover,
        cost,
    })
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    let mut count = 0;
    for w in weights {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidArgument(format!("weight {w} is not positive")));
        }
        total += w;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyPortfolio);
    }
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Index of the last date of every calendar month in `dates`. The final date
/// always closes the last, possibly partial, month.
pub fn month_ends(dates: &[NaiveDate]) -> Vec<usize> {
    (0..dates.len())
        .filter(|&i| {
            i + 1 == dates.len() || (dates[i + 1].year(), dates[i + 1].month()) != (dates[i].year(), dates[i].month())
        })
        .collect()
}

/// Annualized statistics of a monthly return series. Sharpe can be a marker
/// when the risk is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub annual_return: f64,
    pub annual_risk: f64,
    pub sharpe: Sharpe,
    pub n_months: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sharpe {
    Value(f64),
    /// Zero risk, positive mean.
    PosInfinite,
    /// Zero risk, negative mean.
    NegInfinite,
    /// Zero risk, zero mean.
    Undefined,
}

impl Sharpe {
    pub fn as_f64(self) -> f64 {
        match self {
            Sharpe::Value(x) => x,
            Sharpe::PosInfinite => f64::INFINITY,
            Sharpe::NegInfinite => f64::NEG_INFINITY,
            Sharpe::Undefined => f64::NAN,
        }
    }
}

impl fmt::Display for Sharpe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sharpe::Value(x) => write!(f, "{x}"),
            Sharpe::PosInfinite => f.write_str("+inf"),
            Sharpe::NegInfinite => f.write_str("-inf"),
            Sharpe::Undefined => f.write_str("undefined"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SharpeJson {
    Value(f64),
    Marker(String),
}

impl Serialize for Sharpe {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Sharpe::Value(x) => SharpeJson::Value(*x),
            other => SharpeJson::Marker(other.to_string()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Sharpe {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match SharpeJson::deserialize(d)? {
            SharpeJson::Value(x) => Ok(Sharpe::Value(x)),
            SharpeJson::Marker(m) => match m.as_str() {
                "+inf" => Ok(Sharpe::PosInfinite),
                "-inf" => Ok(Sharpe::NegInfinite),
                "undefined" => Ok(Sharpe::Undefined),
                other => Err(serde::de::Error::custom(format!("unknown Sharpe marker {other:?}"))),
            },
        }
    }
}

/// `12 * mean`, `sqrt(12) * std` (population) and their ratio.
pub fn summarize(monthly_returns: &[f64]) -> Result<Summary> {
    let n = monthly_returns.len();
    if n < MIN_SUMMARY_MONTHS {
        return Err(Error::InsufficientData {
            needed: MIN_SUMMARY_MONTHS,
            available: n,
        });
    }
    let len = n as f64;
    let mean = monthly_returns.iter().sum::<f64>() / len;
    let var = monthly_returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / len;
    let mean_abs = monthly_returns.iter().map(|r| r.abs()).sum::<f64>() / len;
    let std = var.sqrt();
    let annual_return = 12.0 * mean;
    let (annual_risk, sharpe) = if std <= ZERO_RISK * mean_abs {
        let marker = if mean > 0.0 {
            Sharpe::PosInfinite
        } else if mean < 0.0 {
            Sharpe::NegInfinite
        } else {
            Sharpe::Undefined
        };
        (0.0, marker)
    } else {
        let risk = 12f64.sqrt() * std;
        (risk, Sharpe::Value(annual_return / risk))
    };
    Ok(Summary {
        annual_return,
        annual_risk,
        sharpe,
        n_months: n,
    })
}

/// One rebalance date of a backtest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthRecord {
    pub date: NaiveDate,
    /// Return of the month that ends here; `None` at the first rebalance.
    #[serde(rename = "return")]
    pub monthly_return: Option<f64>,
    pub n_constituents: usize,
    /// `None` for universes of fewer than two stocks.
    pub edge_density: Option<f64>,
    pub turnover: f64,
    pub cost: f64,
    /// `false` when no feasible set was found and the previous holdings were kept.
    pub feasible: bool,
    pub mis_size: Option<usize>,
    pub value_before: f64,
    pub value_after: f64,
    /// Weights held after this date's trades.
    pub holdings: BTreeMap<String, f64>,
    /// Node degrees in this month's graph, in panel ticker order.
    #[serde(skip)]
    pub degrees: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub config: BacktestConfig,
    pub tickers: Vec<String>,
    /// `None` when there are fewer than [`MIN_SUMMARY_MONTHS`] returns.
    pub summary: Option<Summary>,
    pub monthly_returns: Vec<f64>,
    /// `prod (1 + R) - 1` through each month of `monthly_returns`.
    pub cumulative: Vec<f64>,
    pub months: Vec<MonthRecord>,
}

impl BacktestReport {
    /// Rebalance date to weights held after it.
    pub fn weight_series(&self) -> WeightSeries {
        self.months.iter().map(|m| (m.date, m.holdings.clone())).collect()
    }

    /// Mean degree per ticker over rebalance dates in `[from, to)`.
    pub fn average_degrees(&self, from: NaiveDate, to: NaiveDate) -> BTreeMap<String, f64> {
        let months: Vec<&MonthRecord> = self.months.iter().filter(|m| m.date >= from && m.date < to).collect();
        let mut out = BTreeMap::new();
        if months.is_empty() {
            return out;
        }
        for (i, t) in self.tickers.iter().enumerate() {
            let total: usize = months.iter().map(|m| m.degrees.get(i).copied().unwrap_or(0)).sum();
            out.insert(t.clone(), total as f64 / months.len() as f64);
        }
        out
    }

    /// `date,return,cumulative`, one row per rebalance; the first row has an
    /// empty return and zero cumulative return.
    pub fn write_cumulative_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
        out.write_record(["date", "return", "cumulative"]).map_err(csv_err)?;
        let mut growth = 1.0;
        for m in &self.months {
            let ret = match m.monthly_return {
                Some(r) => {
                    growth *= 1.0 + r;
                    r.to_string()
                }
                None => String::new(),
            };
            out.write_record([m.date.to_string(), ret, (growth - 1.0).to_string()])
                .map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))
    }
}

/// Correlations and volatilities behind one rebalance.
struct Signal {
    date_index: usize,
    corr: CorrelationMatrix,
    vols: Vec<f64>,
}

fn monthly_signals(panel: &PricePanel, lookback: Lookback) -> Result<Vec<Signal>> {
    let returns = log_returns(panel)?;
    let ends = month_ends(panel.dates());
    // Return row r is dated dates[r + 1], so rows [d - len, d) end at date d.
    let schedule: Vec<(usize, usize)> = match lookback {
        Lookback::Days(len) => ends.iter().filter(|&&d| d >= len).map(|&d| (d, len)).collect(),
        Lookback::Months(m) => (m..ends.len()).map(|k| (ends[k], ends[k] - ends[k - m])).collect(),
    };
    if schedule.len() < 2 {
        let needed = match lookback {
            Lookback::Days(len) => len + 2,
            Lookback::Months(m) => m + 2,
        };
        return Err(Error::InsufficientData {
            needed,
            available: panel.n_dates(),
        });
    }
    schedule
        .into_par_iter()
        .map(|(d, len)| {
            let window = returns.window(d, len)?;
            Ok(Signal {
                date_index: d,
                corr: correlation_of(window, panel.tickers().to_vec()),
                vols: volatility_of(window),
            })
        })
        .collect()
}

/// Per-month solver seeds, drawn from `seed` on a stream chosen by `theta`
/// so that sweep settings are independent.
fn month_seeds(seed: u64, theta: f64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(theta.to_bits());
    (0..n).map(|_| rng.next_u64()).collect()
}

/// Best independent set of `graph` under `config`; `None` when every SB run
/// was infeasible.
pub fn solve_month(graph: &MarketGraph, config: &BacktestConfig, seed: u64) -> Result<Option<MisSolution>> {
    match config.solver {
        SolverKind::Greedy => Ok(Some(solve_greedy(graph))),
        SolverKind::Exact => solve_exact(graph, config.exact_node_limit).map(Some),
        SolverKind::Sb => Ok(solve_mis_sb_detailed(graph, &config.sb_params(seed), config.repair)?
            .best
            .ok()),
    }
}

pub fn run_backtest(panel: &PricePanel, config: &BacktestConfig) -> Result<BacktestReport> {
    config.validate()?;
    let signals = monthly_signals(panel, config.lookback)?;
    simulate(panel, &signals, config)
}

fn simulate(panel: &PricePanel, signals: &[Signal], config: &BacktestConfig) -> Result<BacktestReport> {
    let tickers = panel.tickers();
    let prices = panel.prices();
    let n = tickers.len();
    let seeds = month_seeds(config.seed, config.theta, signals.len());

    // Value held in each name, plus uninvested cash before the first trade.
    let mut vals = vec![0.0; n];
    let mut cash = INITIAL_VALUE;
    let mut prev: Option<(usize, f64, f64)> = None; // date index, value before, value after
    let mut months = Vec::with_capacity(signals.len());

    for (signal, &seed) in signals.iter().zip(&seeds) {
        let d = signal.date_index;
        let date = panel.dates()[d];

        let monthly_return = match prev {
            None => None,
            Some((p, before, after)) => {
                let mut growth = cash / after;
                for (i, v) in vals.iter_mut().enumerate() {
                    if *v > 0.0 {
                        let g = prices[[d, i]] / prices[[p, i]];
                        growth += *v / after * g;
                        *v *= g;
                    }
                }
                Some(after / before * growth - 1.0)
            }
        };
        let value_before = cash + vals.iter().sum::<f64>();

        let graph = build_graph(&signal.corr, config.theta);
        let edge_density = graph.edge_density().ok();
        // An empty selection cannot be weighted, so it is handled like an
        // infeasible month.
        let solution = solve_month(&graph, config, seed)?.filter(|s| s.size() > 0);
        let mis_size = solution.as_ref().map(MisSolution::size);
        let target = match &solution {
            Some(sol) => target_weights(sol, &signal.vols, tickers, config, date)?,
            None => {
                log::warn!("{date}: no feasible independent set, holding previous portfolio");
                None
            }
        };

        let (turnover, cost, value_after) = match &target {
            Some(target) => {
                let mut dense = vec![0.0; n];
                for &(i, w) in target {
                    dense[i] = w;
                }
                let turnover: f64 = vals.iter().zip(&dense).map(|(v, w)| (value_before * w - v).abs()).sum();
                let cost = config.cost_rate * turnover;
                let value_after = value_before - cost;
                for (v, w) in vals.iter_mut().zip(&dense) {
                    *v = value_after * w;
                }
                cash = 0.0;
                (turnover, cost, value_after)
            }
            None => (0.0, 0.0, value_before),
        };

        let holdings = vals
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(i, v)| (tickers[i].clone(), v / value_after))
            .collect::<BTreeMap<_, _>>();
        months.push(MonthRecord {
            date,
            monthly_return,
            n_constituents: holdings.len(),
            edge_density,
            turnover,
            cost,
            feasible: target.is_some(),
            mis_size,
            value_before,
            value_after,
            holdings,
            degrees: graph.degrees(),
        });
        prev = Some((d, value_before, value_after));
    }

    let monthly_returns: Vec<f64> = months.iter().filter_map(|m| m.monthly_return).collect();
    let mut growth = 1.0;
    let cumulative = monthly_returns
        .iter()
        .map(|r| {
            growth *= 1.0 + r;
            growth - 1.0
        })
        .collect();
    Ok(BacktestReport {
        config: config.clone(),
        tickers: tickers.to_vec(),
        summary: summarize(&monthly_returns).ok(),
        monthly_returns,
        cumulative,
        months,
    })
}

/// Sparse `(ticker index, weight)` target, or `None` when IVW dropped every name.
fn target_weights(
    solution: &MisSolution,
    vols: &[f64],
    tickers: &[String],
    config: &BacktestConfig,
    date: NaiveDate,
) -> Result<Option<Vec<(usize, f64)>>> {
    let mut nodes = solution.nodes.clone();
    if config.weighting == Weighting::Ivw && config.drop_zero_vol {
        nodes.retain(|&i| {
            let keep = vols[i] > ZERO_VOLATILITY;
            if !keep {
                log::warn!("{date}: dropping {} with zero volatility", tickers[i]);
            }
            keep
        });
        if nodes.is_empty() {
            return Ok(None);
        }
    }
    let weights = match config.weighting {
        Weighting::Ew => weights_ew(nodes.len())?,
        Weighting::Ivw => {
            let names: Vec<String> = nodes.iter().map(|&i| tickers[i].clone()).collect();
            let v: Vec<f64> = nodes.iter().map(|&i| vols[i]).collect();
            weights_ivw(&names, &v)?
        }
    };
    Ok(Some(nodes.into_iter().zip(weights).collect()))
}

/// `n = round((max - min) / step) + 1` evenly spaced thresholds.
pub fn theta_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min <= max) {
        return Err(Error::InvalidArgument(format!("bad theta range {min}..{max}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("theta step {step} must be positive")));
    }
    let n = ((max - min) / step).round() as usize + 1;
    // Rounding keeps grid points such as 0.19 free of accumulated noise.
    Ok((0..n).map(|k| ((min + k as f64 * step) * 1e10).round() / 1e10).collect())
}

/// Edge-density and MIS-size statistics of one θ across its months.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphStats {
    pub density_max: f64,
    pub density_min: f64,
    pub density_avg: f64,
    pub size_max: usize,
    pub size_min: usize,
    pub size_avg: f64,
    /// Population standard deviation.
    pub size_sd: f64,
}

impl GraphStats {
    pub fn from_report(report: &BacktestReport) -> Option<Self> {
        let dens: Vec<f64> = report.months.iter().filter_map(|m| m.edge_density).collect();
        let sizes: Vec<usize> = report.months.iter().filter_map(|m| m.mis_size).collect();
        if dens.is_empty() || sizes.is_empty() {
            return None;
        }
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let s: Vec<f64> = sizes.iter().map(|&k| k as f64).collect();
        let size_avg = mean(&s);
        let size_sd = (s.iter().map(|k| (k - size_avg) * (k - size_avg)).sum::<f64>() / s.len() as f64).sqrt();
        Some(Self {
            density_max: dens.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            density_min: dens.iter().copied().fold(f64::INFINITY, f64::min),
            density_avg: mean(&dens),
            size_max: *sizes.iter().max()?,
            size_min: *sizes.iter().min()?,
            size_avg,
            size_sd,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub weighting: Weighting,
    /// Failed settings keep their error message; the sweep carries on.
    pub outcome: std::result::Result<BacktestReport, String>,
}

impl SweepCell {
    pub fn summary(&self) -> Option<Summary> {
        self.outcome.as_ref().ok().and_then(|r| r.summary)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    pub stats: Option<GraphStats>,
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub weightings: Vec<Weighting>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// One line per θ: graph statistics, then return, risk and Sharpe for
    /// each weighting (`ew_return,ew_risk,ew_sharpe,...`).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
        let mut header: Vec<String> = [
            "theta",
            "density_max",
            "density_min",
            "density_avg",
            "size_max",
            "size_min",
            "size_avg",
            "size_sd",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for wt in &self.weightings {
            header.extend(["return", "risk", "sharpe"].iter().map(|c| format!("{wt}_{c}")));
        }
        out.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            let mut rec = vec![row.theta.to_string()];
            match &row.stats {
                Some(s) => rec.extend([
                    s.density_max.to_string(),
                    s.density_min.to_string(),
                    s.density_avg.to_string(),
                    s.size_max.to_string(),
                    s.size_min.to_string(),
                    s.size_avg.to_string(),
                    s.size_sd.to_string(),
                ]),
                None => rec.extend(std::iter::repeat_n(String::new(), 7)),
            }
            for cell in &row.cells {
                match cell.summary() {
                    Some(s) => rec.extend([
                        s.annual_return.to_string(),
                        s.annual_risk.to_string(),
                        s.sharpe.to_string(),
                    ]),
                    None => rec.extend(std::iter::repeat_n(String::new(), 3)),
                }
            }
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))
    }
}

/// One backtest per `(theta, weighting)`, all settings in parallel. Each θ
/// draws its own month seeds from `base.seed`, so weightings at the same θ
/// share their independent sets.
pub fn sweep_theta(
    panel: &PricePanel,
    base: &BacktestConfig,
    thetas: &[f64],
    weightings: &[Weighting],
) -> Result<SweepTable> {
    if thetas.is_empty() || weightings.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one theta and one weighting".into()));
    }
    base.validate()?;
    let signals = monthly_signals(panel, base.lookback)?;
    let settings: Vec<(f64, Weighting)> = thetas
        .iter()
        .flat_map(|&t| weightings.iter().map(move |&w| (t, w)))
        .collect();
    let outcomes: Vec<std::result::Result<BacktestReport, String>> = settings
        .par_iter()
        .map(|&(theta, weighting)| {
            let cfg = BacktestConfig {
                theta,
                weighting,
                ..base.clone()
            };
            cfg.validate()
                .and_then(|_| simulate(panel, &signals, &cfg))
                .map_err(|e| {
                    log::warn!("sweep setting theta={theta} {weighting} failed: {e}");
                    e.to_string()
                })
        })
        .collect();
    let mut outcomes = outcomes.into_iter();
    let rows = thetas
        .iter()
        .map(|&theta| {
            let cells: Vec<SweepCell> = weightings
                .iter()
                .map(|&weighting| SweepCell {
                    weighting,
                    outcome: outcomes.next().expect("one outcome per setting"),
                })
                .collect();
            let stats = cells
                .iter()
                .find_map(|c| c.outcome.as_ref().ok())
                .and_then(GraphStats::from_report);
            SweepRow { theta, stats, cells }
        })
        .collect();
    Ok(SweepTable {
        weightings: weightings.to_vec(),
        rows,
    })
}

/// Rebalance date to the weights held from that date on.
pub type WeightSeries = BTreeMap<NaiveDate, BTreeMap<String, f64>>;

/// Market capitalizations keyed by date, then ticker.
pub type CapTable = BTreeMap<NaiveDate, BTreeMap<String, f64>>;

/// Reads a `date,ticker,cap` CSV.
pub fn read_caps<R: Read>(reader: R) -> Result<CapTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let parse_err = |row: usize, column: usize, message: String| Error::Parse { row, column, message };
    let header = rdr.headers().map_err(|e| parse_err(1, 1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["date", "ticker", "cap"] {
        return Err(parse_err(1, 1, "header must be `date,ticker,cap`".into()));
    }
    let mut caps = CapTable::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| parse_err(row, 1, e.to_string()))?;
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| parse_err(row, 1, format!("bad date {:?}: {e}", &rec[0])))?;
        let cap: f64 = rec[2]
            .parse()
            .ok()
            .filter(|c: &f64| *c > 0.0 && c.is_finite())
            .ok_or_else(|| parse_err(row, 3, format!("cap {:?} is not a positive number", &rec[2])))?;
        caps.entry(date).or_default().insert(rec[1].to_string(), cap);
    }
    Ok(caps)
}

pub fn load_caps(path: impl AsRef<Path>) -> Result<CapTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_caps(std::io::BufReader::new(file))
}

/// Cap-weighted benchmark per date, restricted to `universe` and summing to 1.
pub fn benchmark_weights(caps: &CapTable, universe: &[String]) -> Result<WeightSeries> {
    let known: BTreeSet<&str> = universe.iter().map(String::as_str).collect();
    let mut out = WeightSeries::new();
    for (&date, row) in caps {
        let kept: Vec<(&String, f64)> = row.iter().filter(|(t, _)| known.contains(t.as_str())).map(|(t, &c)| (t, c)).collect();
        if kept.is_empty() {
            continue;
        }
        let total: f64 = kept.iter().map(|(_, c)| c).sum();
        out.insert(date, kept.into_iter().map(|(t, c)| (t.clone(), c / total)).collect());
    }
    Ok(out)
}

/// One stock's row of the DIFR table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifrRow {
    pub rank: usize,
    pub ticker: String,
    pub difr: f64,
    /// `sum_t R_i(t) w_mis_i(t)`
    pub mis_return: f64,
    /// `sum_t R_i(t) w_bench_i(t)`
    pub benchmark_return: f64,
    pub avg_degree: Option<f64>,
    pub avg_weight_mis: f64,
    pub avg_weight_benchmark: f64,
}

/// Per-stock return contribution of the MIS strategy minus the benchmark
/// over the months between consecutive `mis` dates inside `[from, to]`.
/// `R_i(t)` is the simple return over month `t`, and both weight series are
/// those held during it: `mis` at its start date and the latest benchmark
/// weights on or before it. Rows are ranked by descending DIFR.
pub fn difr_analysis(
    panel: &PricePanel,
    mis: &WeightSeries,
    benchmark: &WeightSeries,
    from: NaiveDate,
    to: NaiveDate,
    degrees: Option<&BTreeMap<String, f64>>,
) -> Result<Vec<DifrRow>> {
    let range_err = || Error::Range {
        from: from.to_string(),
        to: to.to_string(),
    };
    let (first, last) = match (mis.keys().next(), mis.keys().next_back()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(range_err()),
    };
    if from < first || to > last || from >= to {
        return Err(range_err());
    }
    let dates: Vec<NaiveDate> = mis.range(from..=to).map(|(&d, _)| d).collect();
    if dates.len() < 2 {
        return Err(range_err());
    }
    let date_index = |d: NaiveDate| panel.dates().binary_search(&d).map_err(|_| range_err());
    let column: BTreeMap<&str, usize> = panel.tickers().iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let prices = panel.prices();

    #[derive(Default)]
    struct Acc {
        mis: f64,
        bench: f64,
        w_mis: f64,
        w_bench: f64,
    }
    let mut acc: BTreeMap<String, Acc> = BTreeMap::new();
    for pair in dates.windows(2) {
        let (start, end) = (pair[0], pair[1]);
        let (p0, p1) = (date_index(start)?, date_index(end)?);
        let bench = benchmark.range(..=start).next_back().map(|(_, w)| w).ok_or_else(range_err)?;
        let month_return = |t: &str| -> Result<f64> {
            let &c = column.get(t).ok_or_else(|| Error::MissingPrice {
                ticker: t.to_string(),
                date: start.to_string(),
            })?;
            Ok(prices[[p1, c]] / prices[[p0, c]] - 1.0)
        };
        for (t, &w) in &mis[&start] {
            let r = month_return(t)?;
            let a = acc.entry(t.clone()).or_default();
            a.mis += r * w;
            a.w_mis += w;
        }
        for (t, &w) in bench {
            let r = month_return(t)?;
            let a = acc.entry(t.clone()).or_default();
            a.bench += r * w;
            a.w_bench += w;
        }
    }
    let months = (dates.len() - 1) as f64;
    let mut rows: Vec<DifrRow> = acc
        .into_iter()
        .map(|(ticker, a)| DifrRow {
            rank: 0,
            avg_degree: degrees.and_then(|d| d.get(&ticker).copied()),
            ticker,
            difr: a.mis - a.bench,
            mis_return: a.mis,
            benchmark_return: a.bench,
            avg_weight_mis: a.w_mis / months,
            avg_weight_benchmark: a.w_bench / months,
        })
        .collect();
    rows.sort_by(|a, b| b.difr.total_cmp(&a.difr).then_with(|| a.ticker.cmp(&b.ticker)));
    for (k, row) in rows.iter_mut().enumerate() {
        row.rank = k + 1;
    }
    Ok(rows)
}

/// DIFR of a finished backtest against cap weights from `caps`.
pub fn difr_for_report(
    panel: &PricePanel,
    report: &BacktestReport,
    caps: &CapTable,
    from: NaiveDate,
    to: NaiveDate,
) -> Result<Vec<DifrRow>> {
    let bench = benchmark_weights(caps, panel.tickers())?;
    let degrees = report.average_degrees(from, to);
    difr_analysis(panel, &report.weight_series(), &bench, from, to, Some(&degrees))
}

pub fn write_difr_csv<W: Write>(rows: &[DifrRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)
            .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
    }
    out.flush().map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))
}

/// Daily closes as a ticker map, for [`rebalance`].
pub fn prices_at(panel: &PricePanel, date_index: usize) -> BTreeMap<String, f64> {
    let row = panel.prices().row(date_index);
    panel.tickers().iter().cloned().zip(row.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(t, v)| (t.to_string(), *v)).collect()
    }

    #[test]
    fn equal_weights() {
        assert_eq!(weights_ew(4).unwrap(), vec![0.25; 4]);
        assert_eq!(weights_ew(1).unwrap(), vec![1.0]);
        let w = weights_ew(3).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(w.iter().all(|&x| x == w[0]));
        assert!(matches!(weights_ew(0), Err(Error::EmptyPortfolio)));
    }

    #[test]
    fn inverse_vol_weights() {
        let names = |k: usize| (0..k).map(|i| format!("t{i}")).collect::<Vec<_>>();
        let w = weights_ivw(&names(2), &[0.1, 0.2]).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15);
        let w = weights_ivw(&names(3), &[0.1, 0.1, 0.05]).unwrap();
        for (a, b) in w.iter().zip([0.25, 0.25, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(weights_ivw(&names(5), &[0.3; 5]).unwrap(), weights_ew(5).unwrap());
        match weights_ivw(&names(2), &[0.1, 0.0]) {
            Err(Error::ZeroVolatility(t)) => assert_eq!(t, "t1"),
            other => panic!("expected zero volatility, got {other:?}"),
        }
    }

    #[test]
    fn rebalance_without_trades_is_free() {
        let prices = map(&[("a", 2.0), ("b", 4.0)]);
        let start = rebalance(&Portfolio::cash(100.0), &map(&[("a", 0.5), ("b", 0.5)]), &prices, d(2020, 1, 31), 0.0).unwrap();
        let moved = map(&[("a", 3.0), ("b", 4.0)]);
        // After the move a holds 75 and b 50: drifted weights 0.6 / 0.4.
        let again = rebalance(&start.portfolio, &map(&[("a", 0.6), ("b", 0.4)]), &moved, d(2020, 2, 28), 0.001).unwrap();
        assert!(again.turnover.abs() < 1e-12);
        assert!(again.cost.abs() < 1e-15);
        assert!((again.portfolio.value - 125.0).abs() < 1e-12);
    }

    #[test]
    fn full_liquidation_costs_both_legs() {
        let prices = map(&[("a", 1.0), ("b", 1.0)]);
        let held = rebalance(&Portfolio::cash(100.0), &map(&[("a", 1.0)]), &prices, d(2020, 1, 31), 0.0).unwrap();
        let out = rebalance(&held.portfolio, &map(&[("b", 1.0)]), &prices, d(2020, 2, 28), 0.001).unwrap();
        assert!((out.turnover - 200.0).abs() < 1e-12);
        assert!((out.cost - 0.2).abs() < 1e-12);
        assert!((out.portfolio.value - 99.8).abs() < 1e-12);
    }

    #[test]
    fn buy_fifty_sell_thirty() {
        let prices = map(&[("a", 1.0), ("b", 1.0)]);
        let prev = Portfolio {
            date: None,
            holdings: BTreeMap::new(),
            shares: map(&[("a", 30.0), ("b", 50.0)]),
            cash: 20.0,
            value: 100.0,
        };
        let out = rebalance(&prev, &map(&[("b", 1.0)]), &prices, d(2020, 1, 31), 0.001).unwrap();
        assert!((out.turnover - 80.0).abs() < 1e-12);
        assert!((out.cost - 0.08).abs() < 1e-12);
    }

    #[test]
    fn rebalance_reports_missing_price() {
        let held = rebalance(&Portfolio::cash(1.0), &map(&[("a", 1.0)]), &map(&[("a", 1.0)]), d(2020, 1, 31), 0.0).unwrap();
        match rebalance(&held.portfolio, &map(&[("b", 1.0)]), &map(&[("b", 1.0)]), d(2020, 2, 28), 0.0) {
            Err(Error::MissingPrice { ticker, date }) => {
                assert_eq!(ticker, "a");
                assert_eq!(date, "2020-02-28");
            }
            other => panic!("expected missing price, got {other:?}"),
        }
    }

    #[test]
    fn monthly_return_examples() {
        assert!((monthly_return(100.0, 105.0).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(monthly_return(100.0, 100.0).unwrap(), 0.0);
        assert!((monthly_return(100.0, 90.0).unwrap() + 0.10).abs() < 1e-15);
        assert!(matches!(monthly_return(0.0, 1.0), Err(Error::Accounting(_))));
    }

    #[test]
    fn summary_examples() {
        let flat = summarize(&[0.01; 12]).unwrap();
        assert!((flat.annual_return - 0.12).abs() < 1e-15);
        assert_eq!(flat.annual_risk, 0.0);
        assert_eq!(flat.sharpe, Sharpe::PosInfinite);

        let alt: Vec<f64> = (0..12).map(|k| if k % 2 == 0 { 0.01 } else { -0.01 }).collect();
        assert_eq!(summarize(&alt).unwrap().sharpe, Sharpe::Value(0.0));

        let r = [0.02, -0.01, 0.03, 0.0, 0.015, -0.02, 0.01, 0.005, 0.0, 0.04, -0.03, 0.01];
        let doubled: Vec<f64> = r.iter().map(|x| 2.0 * x).collect();
        assert_eq!(summarize(&r).unwrap().sharpe, summarize(&doubled).unwrap().sharpe);

        assert_eq!(summarize(&[0.0; 12]).unwrap().sharpe, Sharpe::Undefined);
        assert_eq!(summarize(&[-0.01; 12]).unwrap().sharpe, Sharpe::NegInfinite);
        assert!(matches!(summarize(&[0.01; 11]), Err(Error::InsufficientData { needed: 12, .. })));
    }

    #[test]
    fn sharpe_json_markers() {
        assert_eq!(serde_json::to_string(&Sharpe::Value(1.5)).unwrap(), "1.5");
        assert_eq!(serde_json::to_string(&Sharpe::PosInfinite).unwrap(), "\"+inf\"");
        for s in [Sharpe::Value(-0.25), Sharpe::PosInfinite, Sharpe::NegInfinite, Sharpe::Undefined] {
            let back: Sharpe = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn month_end_detection() {
        let dates = [d(2020, 1, 30), d(2020, 1, 31), d(2020, 2, 3), d(2020, 2, 28), d(2020, 3, 2)];
        assert_eq!(month_ends(&dates), vec![1, 3, 4]);
        assert!(month_ends(&[]).is_empty());
    }

    #[test]
    fn grid_has_expected_points() {
        let g = theta_grid(0.18, 0.36, 0.01).unwrap();
        assert_eq!(g.len(), 19);
        assert_eq!(g[1], 0.19);
        assert_eq!(*g.last().unwrap(), 0.36);
        assert_eq!(theta_grid(0.2, 0.2, 0.01).unwrap(), vec![0.2]);
        assert!(theta_grid(0.3, 0.2, 0.01).is_err());
        assert!(theta_grid(0.1, 0.2, 0.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(BacktestConfig::default().validate().is_ok());
        for bad in [
            BacktestConfig { theta: 1.5, ..Default::default() },
            BacktestConfig { cost_rate: -0.1, ..Default::default() },
            BacktestConfig { lookback: Lookback::Days(0), ..Default::default() },
            BacktestConfig { restarts: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn caps_parse_and_normalize() {
        let text = "date,ticker,cap\n2020-01-31,a,3\n2020-01-31,b,1\n2020-01-31,zz,6\n";
        let caps = read_caps(text.as_bytes()).unwrap();
        let w = benchmark_weights(&caps, &["a".into(), "b".into()]).unwrap();
        assert_eq!(w[&d(2020, 1, 31)], map(&[("a", 0.75), ("b", 0.25)]));
        assert!(matches!(
            read_caps("date,ticker,cap\n2020-01-31,a,-1\n".as_bytes()),
            Err(Error::Parse { row: 2, column: 3, .. })
        ));
    }
}
