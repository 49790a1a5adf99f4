mod common;

use std::collections::BTreeMap;

use common::{market_panel, panel_from, rel_close};
use mis_portfolio::backtest::*;
use mis_portfolio::mis_qubo::SolverKind;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exact_config(theta: f64, lookback_days: usize) -> BacktestConfig {
    BacktestConfig {
        theta,
        solver: SolverKind::Exact,
        lookback: Lookback::Days(lookback_days),
        ..BacktestConfig::default()
    }
}

#[test]
fn lone_stock_without_costs_is_buy_and_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut p = 50.0;
    let prices = Array2::from_shape_fn((400, 1), |_| {
        p *= (rng.random_range(-0.02..0.02f64)).exp();
        p
    });
    let panel = panel_from(prices);
    let cfg = BacktestConfig {
        cost_rate: 0.0,
        ..exact_config(0.25, 60)
    };
    let report = run_backtest(&panel, &cfg).unwrap();
    let idx: Vec<usize> = report
        .months
        .iter()
        .map(|m| panel.dates().binary_search(&m.date).unwrap())
        .collect();
    assert!(idx.len() > 12);
    for (k, w) in idx.windows(2).enumerate() {
        let own = panel.price(w[1], 0) / panel.price(w[0], 0) - 1.0;
        assert!((report.monthly_returns[k] - own).abs() < 1e-14, "month {k}");
    }
    let total = panel.price(*idx.last().unwrap(), 0) / panel.price(idx[0], 0) - 1.0;
    assert!(rel_close(*report.cumulative.last().unwrap(), total, 1e-12));
}

#[test]
fn full_threshold_graph_holds_one_name() {
    let panel = market_panel(12, 500, 5);
    let report = run_backtest(&panel, &exact_config(-1.0, 120)).unwrap();
    for m in &report.months {
        assert_eq!(m.n_constituents, 1, "{}", m.date);
        assert_eq!(m.edge_density, Some(1.0));
    }
}

#[test]
fn exact_and_sb_differ_only_where_sb_ties_or_falls_short() {
    let panel = market_panel(20, 700, 21);
    let cfg = BacktestConfig {
        cost_rate: 0.0,
        ..exact_config(0.25, 250)
    };
    let exact = run_backtest(&panel, &cfg).unwrap();
    let sb = run_backtest(
        &panel,
        &BacktestConfig {
            solver: SolverKind::Sb,
            ..cfg
        },
    )
    .unwrap();
    assert_eq!(exact.months.len(), sb.months.len());
    let mut agreed = 0;
    for (k, (e, s)) in exact.months.iter().zip(&sb.months).enumerate() {
        let best = e.mis_size.unwrap();
        match s.mis_size {
            Some(size) if e.holdings == s.holdings => {
                assert_eq!(size, best);
                agreed += 1;
            }
            // Either an equal-size tie or a shorter set.
            Some(size) => assert!(size <= best, "{}: sb beat the exact solver", e.date),
            None => assert!(!s.feasible),
        }
        // Without costs a month's return depends only on what was held.
        if k > 0 && exact.months[k - 1].holdings == sb.months[k - 1].holdings {
            assert_eq!(e.monthly_return, s.monthly_return, "{}", e.date);
        }
    }
    assert!(agreed > 0);
}

#[test]
fn costs_only_subtract() {
    let panel = market_panel(15, 600, 8);
    let free = run_backtest(
        &panel,
        &BacktestConfig {
            cost_rate: 0.0,
            ..exact_config(0.3, 200)
        },
    )
    .unwrap();
    let paid = run_backtest(&panel, &exact_config(0.3, 200)).unwrap();
    for ((a, b), (ma, mb)) in free.cumulative.iter().zip(&paid.cumulative).zip(free.months.iter().zip(&paid.months)) {
        assert_eq!(ma.holdings.keys().collect::<Vec<_>>(), mb.holdings.keys().collect::<Vec<_>>());
        assert!(a >= b);
    }
    assert!(paid.months.iter().map(|m| m.cost).sum::<f64>() > 0.0);
}

#[test]
fn equal_volatility_makes_ivw_equal_ew() {
    // Two mirror-image names: every daily move is a doubling or halving and
    // the second name moves opposite to the first.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut k: i32 = 0;
    let prices = Array2::from_shape_fn((300, 2), |(_, c)| {
        if c == 0 {
            k += if rng.random_bool(0.5) { 1 } else { -1 };
        }
        2f64.powi(if c == 0 { k } else { -k })
    });
    let panel = panel_from(prices);
    let ew = run_backtest(&panel, &exact_config(0.25, 40)).unwrap();
    let ivw = run_backtest(
        &panel,
        &BacktestConfig {
            weighting: Weighting::Ivw,
            ..exact_config(0.25, 40)
        },
    )
    .unwrap();
    assert!(ew.months.iter().all(|m| m.n_constituents == 2));
    assert_eq!(ew.monthly_returns, ivw.monthly_returns);
    assert_eq!(ew.cumulative, ivw.cumulative);
}

#[test]
fn one_setting_sweep_is_a_plain_backtest() {
    let panel = market_panel(14, 520, 2);
    let cfg = exact_config(0.27, 200);
    let table = sweep_theta(&panel, &cfg, &[0.27], &[Weighting::Ew]).unwrap();
    assert_eq!(table.rows.len(), 1);
    let swept = table.rows[0].cells[0].outcome.as_ref().unwrap();
    let direct = run_backtest(&panel, &cfg).unwrap();
    assert_eq!(swept.monthly_returns, direct.monthly_returns);
    assert_eq!(table.rows[0].cells[0].summary(), Some(summarize(&direct.monthly_returns).unwrap()));
}

#[test]
fn sweep_columns_are_monotone_in_theta() {
    let panel = market_panel(24, 600, 4);
    let thetas = theta_grid(0.1, 0.5, 0.05).unwrap();
    let table = sweep_theta(&panel, &exact_config(0.25, 250), &thetas, &[Weighting::Ew, Weighting::Ivw]).unwrap();
    let stats: Vec<GraphStats> = table.rows.iter().map(|r| r.stats.clone().unwrap()).collect();
    for w in stats.windows(2) {
        assert!(w[1].size_avg >= w[0].size_avg);
        assert!(w[1].density_avg <= w[0].density_avg);
    }
    let mut csv = Vec::new();
    table.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), thetas.len() + 1);
    assert!(text.lines().next().unwrap().ends_with("ew_sharpe,ivw_return,ivw_risk,ivw_sharpe"));
}

fn month_starts(panel: &mis_portfolio::timeseries::PricePanel) -> Vec<chrono::NaiveDate> {
    month_ends(panel.dates()).into_iter().map(|i| panel.dates()[i]).collect()
}

#[test]
fn identical_weights_give_zero_difr() {
    let panel = market_panel(6, 300, 1);
    let dates = month_starts(&panel);
    let series: WeightSeries = dates
        .iter()
        .map(|&d| (d, panel.tickers().iter().map(|t| (t.clone(), 1.0 / 6.0)).collect()))
        .collect();
    let rows = difr_analysis(&panel, &series, &series, dates[0], *dates.last().unwrap(), None).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.difr == 0.0));
}

#[test]
fn constant_return_name_held_only_by_mis() {
    let r: f64 = 0.02;
    let w = 0.4;
    // Column 0 steps up by 1 + r the day after each month end, so month-end
    // to month-end growth is exactly 1 + r.
    let dates = mis_portfolio::timeseries::business_days(common::start(), 260);
    let ends = month_ends(&dates);
    let prices = Array2::from_shape_fn((260, 2), |(t, c)| match c {
        0 => 100.0 * (1.0 + r).powi(ends.iter().filter(|&&e| e < t).count() as i32),
        _ => 10.0,
    });
    let panel = panel_from(prices);
    let ends: Vec<_> = ends.iter().map(|&i| panel.dates()[i]).collect();
    let mis: WeightSeries = ends
        .iter()
        .map(|&d| (d, BTreeMap::from([("T0".to_string(), w), ("T1".to_string(), 1.0 - w)])))
        .collect();
    let bench: WeightSeries = BTreeMap::from([(ends[0], BTreeMap::from([("T1".to_string(), 1.0)]))]);
    let t_months = 8;
    let rows = difr_analysis(&panel, &mis, &bench, ends[0], ends[t_months], None).unwrap();
    let t0 = rows.iter().find(|r| r.ticker == "T0").unwrap();
    assert!((t0.difr - t_months as f64 * r * w).abs() < 1e-12, "{}", t0.difr);
    assert_eq!(rows[0].ticker, "T0");
    assert_eq!(rows[0].rank, 1);
}

#[test]
fn difr_rejects_periods_outside_the_series() {
    let panel = market_panel(4, 200, 1);
    let dates = month_starts(&panel);
    let series: WeightSeries = dates[1..4]
        .iter()
        .map(|&d| (d, BTreeMap::from([("S0000".to_string(), 1.0)])))
        .collect();
    assert!(difr_analysis(&panel, &series, &series, dates[0], dates[3], None).is_err());
    assert!(difr_analysis(&panel, &series, &series, dates[1], dates[1], None).is_err());
}

#[test]
fn report_json_has_the_documented_shape() {
    let panel = market_panel(10, 420, 6);
    let report = run_backtest(&panel, &exact_config(0.3, 120)).unwrap();
    let v: serde_json::Value = serde_json::to_value(&report).unwrap();
    for key in ["annual_return", "annual_risk", "sharpe"] {
        assert!(v["summary"].get(key).is_some(), "{key}");
    }
    let m = &v["months"][1];
    for key in ["date", "return", "n_constituents", "edge_density", "turnover", "cost", "feasible"] {
        assert!(m.get(key).is_some(), "{key}");
    }
}
