//! Price panels, log returns, trailing volatility and Pearson correlation.
//!
//! Standard deviations use the population convention (divide by the window
//! length). Correlations are computed from unit-normalised centred columns,
//! mirrored from the upper triangle so the matrix is bitwise symmetric, and
//! clamped to `[-1, 1]`. A column whose volatility is zero over the window is
//! flagged and gets correlation 0 against every other column.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use ndarray::{s, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};

/// Volatilities at or below this are treated as exactly zero.
pub const ZERO_VOLATILITY: f64 = 1e-14;

/// Three years of business days.
pub const DEFAULT_LOOKBACK_DAYS: usize = 756;

/// Dividend-adjusted closing prices, one row per business day and one
/// column per ticker.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    prices: Array2<f64>,
}

impl PricePanel {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, prices: Array2<f64>) -> Result<Self> {
        if prices.dim() != (dates.len(), tickers.len()) {
            return Err(Error::InvalidArgument(format!(
                "price matrix is {:?}, expected {} dates x {} tickers",
                prices.dim(),
                dates.len(),
                tickers.len()
            )));
        }
        if tickers.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        if let Some(w) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "dates not strictly increasing at {}",
                dates[w + 1]
            )));
        }
        if let Some(((t, i), p)) = prices.indexed_iter().find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "price {p} for {} on {} is not strictly positive",
                tickers[i], dates[t]
            )));
        }
        Ok(Self {
            dates,
            tickers,
            prices,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn prices(&self) -> &Array2<f64> {
        &self.prices
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn price(&self, date_index: usize, ticker_index: usize) -> f64 {
        self.prices[[date_index, ticker_index]]
    }

    /// Panel restricted to the given columns, in the given order.
    pub fn select_tickers(&self, columns: &[usize]) -> Result<Self> {
        let n = self.n_tickers();
        if let Some(&bad) = columns.iter().find(|&&c| c >= n) {
            return Err(Error::Index { index: bad, len: n });
        }
        let prices = self.prices.select(Axis(1), columns);
        let tickers = columns.iter().map(|&c| self.tickers[c].clone()).collect();
        Self::new(self.dates.clone(), tickers, prices)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let to_err = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
        let mut header = Vec::with_capacity(self.n_tickers() + 1);
        header.push("date".to_string());
        header.extend(self.tickers.iter().cloned());
        w.write_record(&header).map_err(to_err)?;
        for (t, date) in self.dates.iter().enumerate() {
            let mut rec = Vec::with_capacity(self.n_tickers() + 1);
            rec.push(date.format("%Y-%m-%d").to_string());
            rec.extend(self.prices.row(t).iter().map(|p| p.to_string()));
            w.write_record(&rec).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    Missing,
    NonPositive,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropReason::Missing => f.write_str("missing value"),
            DropReason::NonPositive => f.write_str("non-positive price"),
        }
    }
}

/// A ticker excluded while loading, with the first offending data row
/// (1-based file line number).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedTicker {
    pub ticker: String,
    pub reason: DropReason,
    pub row: usize,
}

#[derive(Debug, Clone)]
pub struct LoadedPanel {
    pub panel: PricePanel,
    pub dropped: Vec<DroppedTicker>,
}

pub fn load_prices(path: impl AsRef<Path>) -> Result<LoadedPanel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_prices(std::io::BufReader::new(file))
}

/// Parses the price CSV: header `date,<ticker>...`, ISO dates in the first
/// column, `.` decimals, empty cell = missing. Tickers with a missing or
/// non-positive value anywhere are dropped for the whole panel.
pub fn read_prices<R: Read>(reader: R) -> Result<LoadedPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_parse_error(e, 1))?,
        None => {
            return Err(Error::Parse {
                row: 1,
                column: 1,
                message: "empty file".into(),
            })
        }
    };
    if header.len() < 2 || !header[0].eq_ignore_ascii_case("date") {
        return Err(Error::Parse {
            row: 1,
            column: 1,
            message: "header must be `date,<ticker>,...`".into(),
        });
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = tickers.len();

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut dropped: Vec<Option<(DropReason, usize)>> = vec![None; n];

    for (k, rec) in records.enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| csv_parse_error(e, row))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != n + 1 {
            return Err(Error::Parse {
                row,
                column: rec.len().min(n + 1),
                message: format!("expected {} fields, found {}", n + 1, rec.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| Error::Parse {
            row,
            column: 1,
            message: format!("bad date {:?}: {e}", &rec[0]),
        })?;
        if let Some(prev) = dates.last() {
            if *prev >= date {
                return Err(Error::Parse {
                    row,
                    column: 1,
                    message: format!("date {date} does not follow {prev}"),
                });
            }
        }
        dates.push(date);
        for (i, cell) in rec.iter().skip(1).enumerate() {
            let value = if cell.is_empty() {
                mark(&mut dropped[i], DropReason::Missing, row);
                f64::NAN
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row,
                    column: i + 2,
                    message: format!("not a number: {cell:?}"),
                })?;
                if !v.is_finite() {
                    mark(&mut dropped[i], DropReason::Missing, row);
                } else if v <= 0.0 {
                    mark(&mut dropped[i], DropReason::NonPositive, row);
                }
                v
            };
            values.push(value);
        }
    }

    let keep: Vec<usize> = (0..n).filter(|&i| dropped[i].is_none()).collect();
    let dropped: Vec<DroppedTicker> = dropped
        .iter()
        .enumerate()
        .filter_map(|(i, d)| {
            d.map(|(reason, row)| DroppedTicker {
                ticker: tickers[i].clone(),
                reason,
                row,
            })
        })
        .collect();
    for d in &dropped {
        log::warn!("dropping ticker {} ({} at row {})", d.ticker, d.reason, d.row);
    }
    if keep.is_empty() {
        return Err(Error::EmptyUniverse);
    }

    let full = Array2::from_shape_vec((dates.len(), n), values)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let prices = full.select(Axis(1), &keep);
    let tickers = keep.iter().map(|&i| tickers[i].clone()).collect();
    Ok(LoadedPanel {
        panel: PricePanel::new(dates, tickers, prices)?,
        dropped,
    })
}

fn mark(slot: &mut Option<(DropReason, usize)>, reason: DropReason, row: usize) {
    if slot.is_none() {
        *slot = Some((reason, row));
    }
}

fn csv_parse_error(e: csv::Error, row: usize) -> Error {
    Error::Parse {
        row: e.position().map_or(row, |p| p.line() as usize),
        column: 1,
        message: e.to_string(),
    }
}

/// Daily log returns `ln(P(t) / P(t-1))`, dated by the later day.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    returns: Array2<f64>,
}

impl ReturnMatrix {
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.returns
    }

    pub fn n_rows(&self) -> usize {
        self.returns.nrows()
    }

    /// Rows `[end - len, end)`.
    pub fn window(&self, end: usize, len: usize) -> Result<ArrayView2<'_, f64>> {
        if len == 0 || end > self.n_rows() || len > end {
            return Err(Error::InsufficientData {
                needed: len.max(1),
                available: end.min(self.n_rows()),
            });
        }
        Ok(self.returns.slice(s![end - len..end, ..]))
    }
}

pub fn log_returns(panel: &PricePanel) -> Result<ReturnMatrix> {
    let t = panel.n_dates();
    if t < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: t,
        });
    }
    let p = panel.prices();
    let returns = Array2::from_shape_fn((t - 1, panel.n_tickers()), |(r, i)| {
        (p[[r + 1, i]] / p[[r, i]]).ln()
    });
    Ok(ReturnMatrix {
        dates: panel.dates()[1..].to_vec(),
        tickers: panel.tickers().to_vec(),
        returns,
    })
}

/// Population standard deviation of each column over the trailing
/// `window_days` rows.
pub fn volatility(returns: &ReturnMatrix, window_days: usize) -> Result<Vec<f64>> {
    let n = returns.n_rows();
    Ok(volatility_of(returns.window(n, window_days)?))
}

pub fn volatility_of(window: ArrayView2<'_, f64>) -> Vec<f64> {
    window
        .columns()
        .into_iter()
        .map(|col| {
            let len = col.len() as f64;
            let mean = col.sum() / len;
            let ss: f64 = col.iter().map(|r| (r - mean) * (r - mean)).sum();
            (ss / len).sqrt()
        })
        .collect()
}

/// Pearson correlation over the trailing window.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    tickers: Vec<String>,
    values: Array2<f64>,
    window_days: usize,
    zero_variance: Vec<usize>,
}

impl CorrelationMatrix {
    /// Wraps an explicit coefficient matrix. The input is symmetrised from its
    /// upper triangle and clamped.
    pub fn from_values(tickers: Vec<String>, mut values: Array2<f64>, window_days: usize) -> Result<Self> {
        let n = tickers.len();
        if values.dim() != (n, n) {
            return Err(Error::InvalidArgument(format!(
                "correlation matrix is {:?}, expected {n}x{n}",
                values.dim()
            )));
        }
        for i in 0..n {
            for j in i..n {
                let c = values[[i, j]];
                if c.is_nan() {
                    return Err(Error::InvalidArgument(format!("NaN coefficient at ({i}, {j})")));
                }
                let c = c.clamp(-1.0, 1.0);
                values[[i, j]] = c;
                values[[j, i]] = c;
            }
        }
        Ok(Self {
            tickers,
            values,
            window_days,
            zero_variance: Vec::new(),
        })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn len(&self) -> usize {
        self.tickers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tickers.is_empty()
    }

    pub fn window_days(&self) -> usize {
        self.window_days
    }

    /// Columns that had zero variance over the window.
    pub fn zero_variance(&self) -> &[usize] {
        &self.zero_variance
    }
}

pub fn correlation(returns: &ReturnMatrix, window_days: usize) -> Result<CorrelationMatrix> {
    let n = returns.n_rows();
    Ok(correlation_of(returns.window(n, window_days)?, returns.tickers().to_vec()))
}

pub fn correlation_of(window: ArrayView2<'_, f64>, tickers: Vec<String>) -> CorrelationMatrix {
    let (rows, n) = window.dim();
    let len = rows as f64;
    let mut z = window.to_owned();
    let mut zero_variance = Vec::new();
    for (i, mut col) in z.columns_mut().into_iter().enumerate() {
        let mean = col.sum() / len;
        col.mapv_inplace(|r| r - mean);
        let ss: f64 = col.iter().map(|c| c * c).sum();
        if (ss / len).sqrt() <= ZERO_VOLATILITY {
            zero_variance.push(i);
            col.fill(0.0);
        } else {
            let norm = ss.sqrt();
            col.mapv_inplace(|c| c / norm);
        }
    }
    let mut c = z.t().dot(&z);
    for i in 0..n {
        c[[i, i]] = 1.0;
        for j in i + 1..n {
            let v = c[[i, j]].clamp(-1.0, 1.0);
            c[[i, j]] = v;
            c[[j, i]] = v;
        }
    }
    if !zero_variance.is_empty() {
        log::debug!("{} zero-variance column(s) isolated", zero_variance.len());
    }
    CorrelationMatrix {
        tickers,
        values: c,
        window_days: rows,
        zero_variance,
    }
}

/// Parameters of the linear factor model behind [`synth_panel`].
///
/// Daily log return of stock `i`:
/// `drift + sum_k loading[i][k] * factor_vol * f_k(t) + idio_vol[i] * e_i(t)`
/// with `f`, `e` i.i.d. standard normal, loadings uniform in
/// `[loading_min, loading_max]`, idiosyncratic vols uniform in
/// `[idio_vol_min, idio_vol_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_stocks: usize,
    pub n_days: usize,
    pub n_factors: usize,
    pub seed: u64,
    pub factor_vol: f64,
    pub idio_vol_min: f64,
    pub idio_vol_max: f64,
    pub loading_min: f64,
    pub loading_max: f64,
    pub drift: f64,
    pub start: NaiveDate,
}

impl SynthConfig {
    pub fn new(n_stocks: usize, n_days: usize, n_factors: usize, seed: u64) -> Self {
        Self {
            n_stocks,
            n_days,
            n_factors,
            seed,
            factor_vol: 0.01,
            idio_vol_min: 0.005,
            idio_vol_max: 0.005,
            loading_min: 0.5,
            loading_max: 1.5,
            drift: 0.0002,
            start: NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date"),
        }
    }

    /// A market-wide factor plus sector-like factors with heterogeneous
    /// idiosyncratic risk. At a 0.25 threshold this produces dense graphs
    /// with a long tail of weakly correlated names, similar in shape to
    /// equity universes.
    pub fn market_like(n_stocks: usize, n_days: usize, seed: u64) -> Self {
        Self {
            n_factors: 4,
            factor_vol: 0.01,
            idio_vol_min: 0.004,
            idio_vol_max: 0.025,
            loading_min: 0.0,
            loading_max: 1.0,
            ..Self::new(n_stocks, n_days, 4, seed)
        }
    }
}

/// Deterministic synthetic prices from the default factor model.
pub fn synth_panel(n_stocks: usize, n_days: usize, n_factors: usize, seed: u64) -> Result<PricePanel> {
    synth_panel_with(&SynthConfig::new(n_stocks, n_days, n_factors, seed))
}

pub fn synth_panel_with(cfg: &SynthConfig) -> Result<PricePanel> {
    if cfg.n_stocks == 0 || cfg.n_days == 0 {
        return Err(Error::InvalidArgument(
            "n_stocks and n_days must be positive".into(),
        ));
    }
    if !(cfg.loading_min <= cfg.loading_max && cfg.idio_vol_min <= cfg.idio_vol_max) {
        return Err(Error::InvalidArgument("empty loading or volatility range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let uniform = |lo: f64, hi: f64| Uniform::new_inclusive(lo, hi).expect("ordered bounds");

    let load_dist = uniform(cfg.loading_min, cfg.loading_max);
    let loadings: Vec<f64> = (0..cfg.n_stocks * cfg.n_factors)
        .map(|_| load_dist.sample(&mut rng))
        .collect();
    let idio_dist = uniform(cfg.idio_vol_min, cfg.idio_vol_max);
    let idio: Vec<f64> = (0..cfg.n_stocks).map(|_| idio_dist.sample(&mut rng)).collect();

    let mut prices = Array2::<f64>::zeros((cfg.n_days, cfg.n_stocks));
    prices.row_mut(0).fill(100.0);
    let mut factors = vec![0.0; cfg.n_factors];
    for t in 1..cfg.n_days {
        for f in factors.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *f = cfg.factor_vol * z;
        }
        for i in 0..cfg.n_stocks {
            let e: f64 = StandardNormal.sample(&mut rng);
            let common: f64 = loadings[i * cfg.n_factors..(i + 1) * cfg.n_factors]
                .iter()
                .zip(&factors)
                .map(|(b, f)| b * f)
                .sum();
            let r = cfg.drift + common + idio[i] * e;
            prices[[t, i]] = prices[[t - 1, i]] * r.exp();
        }
    }

    let dates = business_days(cfg.start, cfg.n_days);
    let tickers = (0..cfg.n_stocks).map(|i| format!("S{i:04}")).collect();
    PricePanel::new(dates, tickers, prices)
}

/// `count` consecutive weekdays starting at `start` (rolled forward off a
/// weekend).
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}
