#![allow(dead_code)]

use chrono::NaiveDate;
use mis_portfolio::timeseries::{business_days, synth_panel_with, PricePanel, SynthConfig};
use ndarray::Array2;

pub fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 1, 1).unwrap()
}

/// Market-like synthetic panel: moderately correlated names.
pub fn market_panel(n_stocks: usize, n_days: usize, seed: u64) -> PricePanel {
    synth_panel_with(&SynthConfig::market_like(n_stocks, n_days, seed)).unwrap()
}

/// Panel from explicit prices, one column per ticker `T0`, `T1`, ...
pub fn panel_from(prices: Array2<f64>) -> PricePanel {
    let (rows, cols) = prices.dim();
    let tickers = (0..cols).map(|i| format!("T{i}")).collect();
    PricePanel::new(business_days(start(), rows), tickers, prices).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
