//! Threshold market graph: stocks are nodes, and `i ~ j` whenever
//! `C[i][j] >= theta`.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::bitset::{BitMatrix, BitSet};
use crate::error::{Error, Result};
use crate::timeseries::CorrelationMatrix;

/// Undirected simple graph over a stock universe, stored as a packed
/// symmetric bit matrix with an empty diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketGraph {
    tickers: Vec<String>,
    adjacency: BitMatrix,
    theta: f64,
    n_edges: usize,
}

pub fn build_graph(corr: &CorrelationMatrix, theta: f64) -> MarketGraph {
    let n = corr.len();
    let c = corr.values();
    let mut adjacency = BitMatrix::new(n);
    let mut n_edges = 0;
    for i in 0..n {
        for j in i + 1..n {
            if c[[i, j]] >= theta {
                adjacency.set(i, j);
                adjacency.set(j, i);
                n_edges += 1;
            }
        }
    }
    MarketGraph {
        tickers: corr.tickers().to_vec(),
        adjacency,
        theta,
        n_edges,
    }
}

impl MarketGraph {
    /// Graph from an explicit edge list; tickers default to node indices.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let tickers = (0..n_nodes).map(|i| i.to_string()).collect();
        Self::from_edges_with(tickers, edges, f64::NAN)
    }

    pub fn from_edges_with(tickers: Vec<String>, edges: &[(usize, usize)], theta: f64) -> Result<Self> {
        let n = tickers.len();
        let mut adjacency = BitMatrix::new(n);
        let mut n_edges = 0;
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::Index { index: v, len: n });
                }
            }
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop at node {a}")));
            }
            if !adjacency.get(a, b) {
                adjacency.set(a, b);
                adjacency.set(b, a);
                n_edges += 1;
            }
        }
        Ok(Self {
            tickers,
            adjacency,
            theta,
            n_edges,
        })
    }

    pub fn empty(n_nodes: usize) -> Self {
        Self::from_edges(n_nodes, &[]).expect("no edges to validate")
    }

    pub fn complete(n_nodes: usize) -> Self {
        let edges: Vec<_> = (0..n_nodes)
            .flat_map(|i| (i + 1..n_nodes).map(move |j| (i, j)))
            .collect();
        Self::from_edges(n_nodes, &edges).expect("edges in range")
    }

    pub fn cycle(n_nodes: usize) -> Self {
        let edges: Vec<_> = (0..n_nodes).map(|i| (i, (i + 1) % n_nodes)).collect();
        Self::from_edges(n_nodes, &edges).expect("edges in range")
    }

    pub fn n_nodes(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn adjacency(&self) -> &BitMatrix {
        &self.adjacency
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.get(i, j)
    }

    pub fn neighbors(&self, i: usize) -> BitSet {
        self.adjacency.row_set(i)
    }

    /// Edges as `(i, j)` with `i < j`, lexicographically ordered.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_edges);
        for i in 0..self.n_nodes() {
            out.extend(self.adjacency.row_set(i).iter().filter(|&j| j > i).map(|j| (i, j)));
        }
        out
    }

    pub fn degree(&self, node: usize) -> Result<usize> {
        self.check(node)?;
        Ok(self.adjacency.row_count(node))
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n_nodes()).map(|i| self.adjacency.row_count(i)).collect()
    }

    /// `|E| / (n(n-1)/2)`
    pub fn edge_density(&self) -> Result<f64> {
        let n = self.n_nodes();
        if n < 2 {
            return Err(Error::UndefinedDensity(n));
        }
        Ok(self.n_edges as f64 / (n * (n - 1) / 2) as f64)
    }

    pub(crate) fn check(&self, node: usize) -> Result<()> {
        if node >= self.n_nodes() {
            return Err(Error::Index {
                index: node,
                len: self.n_nodes(),
            });
        }
        Ok(())
    }

    /// Edge-list text: a header line `n_nodes theta`, then one `i j` pair per
    /// line with `i < j`.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.n_nodes(), self.theta)?;
        for (i, j) in self.edges() {
            writeln!(w, "{i} {j}")?;
        }
        w.flush()
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_edge_list(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let parse_err = |row: usize, column: usize, message: String| Error::Parse { row, column, message };
        let (n_nodes, theta) = loop {
            match lines.next() {
                Some((k, line)) => {
                    let line = line.map_err(|e| parse_err(k + 1, 1, e.to_string()))?;
                    let line = line.trim();
                    if line.is_empty() {
                        continue;
                    }
                    let mut it = line.split_whitespace();
                    let n: usize = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| parse_err(k + 1, 1, "header must be `n_nodes theta`".into()))?;
                    let theta: f64 = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| parse_err(k + 1, 2, "header must be `n_nodes theta`".into()))?;
                    break (n, theta);
                }
                None => return Err(parse_err(1, 1, "empty edge list".into())),
            }
        };
        let mut edges = Vec::new();
        for (k, line) in lines {
            let line = line.map_err(|e| parse_err(k + 1, 1, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(parse_err(k + 1, 1, format!("expected `i j`, found {line:?}")));
            }
            let mut pair = [0usize; 2];
            for (c, f) in fields.iter().enumerate() {
                pair[c] = f
                    .parse()
                    .map_err(|_| parse_err(k + 1, c + 1, format!("bad node index {f:?}")))?;
            }
            edges.push((pair[0], pair[1]));
        }
        let tickers = (0..n_nodes).map(|i| i.to_string()).collect();
        Self::from_edges_with(tickers, &edges, theta)
    }

    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_edge_list(std::io::BufReader::new(file))
    }
}
