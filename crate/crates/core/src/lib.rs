pub mod backtest;
pub mod bitset;
pub mod cli;
pub mod error;
pub mod market_graph;
pub mod mis_qubo;
pub mod sb_solver;
pub mod timeseries;

pub use error::{Error, Result};
