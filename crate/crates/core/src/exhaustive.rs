//! Brute-force search over every set partition of a small graph.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;
use crate::surprise::surprise_unchecked;

/// Largest node count accepted by [`best_partitions`] (Bell(12) = 4,213,597).
pub const MAX_NODES: usize = 12;

/// Values within this relative distance of the maximum count as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quality {
    Surprise,
    Modularity,
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quality::Surprise => "surprise",
            Quality::Modularity => "modularity",
        })
    }
}

impl FromStr for Quality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "surprise" => Ok(Quality::Surprise),
            "modularity" => Ok(Quality::Modularity),
            _ => Err(Error::Domain(format!("unknown quality {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best: f64,
    /// Every partition attaining `best`, in enumeration order.
    pub maximizers: Vec<Partition>,
    pub evaluated: u64,
}

/// Running sums for the partition prefix built so far.
struct Walker<'a> {
    graph: &'a Graph,
    quality: Quality,
    labels: Vec<usize>,
    sizes: Vec<u64>,
    degree_sums: Vec<u64>,
    f: u64,
    n: u64,
}

impl Walker<'_> {
    fn score(&self, m: u64, ell: u64) -> f64 {
        match self.quality {
            Quality::Surprise => surprise_unchecked(self.f, m, self.n, ell),
            Quality::Modularity => {
                let n = self.n as f64;
                let spread: f64 = self
                    .degree_sums
                    .iter()
                    .map(|&d| (d as f64 / (2.0 * n)).powi(2))
                    .sum();
                ell as f64 / n - spread
            }
        }
    }

    fn descend(&mut self, u: usize, m: u64, ell: u64, visit: &mut dyn FnMut(&[usize], f64)) {
        let k = self.labels.len();
        if u == k {
            let s = self.score(m, ell);
            visit(&self.labels, s);
            return;
        }
        let blocks = self.sizes.len();
        let deg = self.graph.degree(u) as u64;
        for b in 0..=blocks {
            if b == blocks {
                self.sizes.push(0);
                self.degree_sums.push(0);
            }
            let gained = self
                .graph
                .neighbors(u)
                .iter()
                .take_while(|&&v| v < u)
                .filter(|&&v| self.labels[v] == b)
                .count() as u64;
            let added_pairs = self.sizes[b];
            self.labels[u] = b;
            self.sizes[b] += 1;
            self.degree_sums[b] += deg;
            self.descend(u + 1, m + added_pairs, ell + gained, visit);
            self.sizes[b] -= 1;
            self.degree_sums[b] -= deg;
        }
        self.sizes.pop();
        self.degree_sums.pop();
    }
}

/// Calls `visit(labels, value)` for every set partition of the graph's nodes, as a
/// restricted growth string.
pub fn for_each_partition(
    graph: &Graph,
    quality: Quality,
    mut visit: impl FnMut(&[usize], f64),
) -> Result<()> {
    let k = graph.node_count();
    if k > MAX_NODES {
        return Err(Error::Precondition(format!(
            "exhaustive search is limited to {MAX_NODES} nodes, graph has {k}"
        )));
    }
    if quality == Quality::Modularity && graph.link_count() == 0 {
        return Err(Error::Domain("modularity: graph has no links".into()));
    }
    if k == 0 {
        return Ok(());
    }
    let mut w = Walker {
        graph,
        quality,
        labels: vec![0; k],
        sizes: Vec::with_capacity(k),
        degree_sums: Vec::with_capacity(k),
        f: graph.max_links(),
        n: graph.link_count() as u64,
    };
    w.descend(0, 0, 0, &mut visit);
    Ok(())
}

/// Global maximum of `quality` and all partitions attaining it.
pub fn best_partitions(graph: &Graph, quality: Quality) -> Result<OracleResult> {
    let mut best = f64::NEG_INFINITY;
    let mut maximizers: Vec<Vec<usize>> = Vec::new();
    let mut evaluated = 0u64;
    for_each_partition(graph, quality, |labels, value| {
        evaluated += 1;
        let tol = if best.is_finite() {
            TIE_TOLERANCE * best.abs().max(1.0)
        } else {
            0.0
        };
        if value > best + tol {
            best = value;
            maximizers.clear();
            maximizers.push(labels.to_vec());
        } else if (value - best).abs() <= tol {
            maximizers.push(labels.to_vec());
        }
    })?;
    Ok(OracleResult {
        best,
        maximizers: maximizers.iter().map(|l| Partition::from_labels(l)).collect(),
        evaluated,
    })
}
