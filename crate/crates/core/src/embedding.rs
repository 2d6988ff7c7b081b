//! Planar embedding of a set of partitions from their pairwise distances, by gradient
//! descent on a weighted χ² of distance mismatches, and the peak-walk summary of a
//! quality surface over such a set.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::graph::Graph;
use crate::metrics::vi;
use crate::optimizer::SurpriseState;
use crate::partition::Partition;

/// Symmetric matrix of non-negative distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return domain("distance matrix is empty");
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return domain(format!("row {i} has {} entries, expected {n}", row.len()));
            }
            data.extend(row);
        }
        let m = DistanceMatrix { n, data };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            if self.get(i, i) != 0.0 {
                return domain(format!("diagonal entry {i} is not zero"));
            }
            for j in 0..self.n {
                let d = self.get(i, j);
                if !(d.is_finite() && d >= 0.0) {
                    return domain(format!("entry ({i}, {j}) = {d} is not a finite distance"));
                }
                if (d - self.get(j, i)).abs() > 1e-12 * d.max(1.0) {
                    return domain(format!("matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(())
    }

    /// Pairwise VI between partitions.
    pub fn from_partitions(parts: &[Partition], normalized: bool) -> Result<Self> {
        let n = parts.len();
        if n == 0 {
            return domain("no partitions given");
        }
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = vi(&parts[i], &parts[j], normalized)?;
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Ok(DistanceMatrix { n, data })
    }

    /// Euclidean distances between planar points.
    pub fn from_points(points: &[[f64; 2]]) -> Result<Self> {
        let rows = points
            .iter()
            .map(|a| points.iter().map(|b| dist(*a, *b)).collect())
            .collect();
        DistanceMatrix::from_rows(rows)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Reads `N` on the first line followed by `N` rows of `N` numbers.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty() && !l.trim_start().starts_with('#')));
        let (idx, first) = lines
            .next()
            .ok_or_else(|| Error::Domain("distance file is empty".into()))?;
        let first = first?;
        let n: usize = first.trim().parse().map_err(|e| Error::Parse {
            line: idx + 1,
            msg: format!("invalid matrix size {:?}: {e}", first.trim()),
        })?;
        let mut rows = Vec::with_capacity(n);
        for (idx, line) in lines.take(n) {
            let line = line?;
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|e| Error::Parse {
                        line: idx + 1,
                        msg: format!("invalid distance {t:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.len() != n {
            return domain(format!("expected {n} rows, found {}", rows.len()));
        }
        DistanceMatrix::from_rows(rows)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format!("{:.17e}", self.get(i, j))).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingConfig {
    /// Exponent of the pair weight `d^γ`.
    pub gamma_exp: f64,
    /// Only pairs with `d < d_lim` contribute.
    pub d_lim: f64,
    pub lamb: f64,
    pub adj: f64,
    /// Convergence threshold on `|grad| / 2N`.
    pub eps: f64,
    pub lamb_floor: f64,
    /// Consecutive rejected steps before giving up.
    pub stall_limit: usize,
    /// Hard cap on descent iterations.
    pub max_iters: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            gamma_exp: -1.0,
            d_lim: 1.0,
            lamb: 0.2,
            adj: 0.05,
            eps: 1e-10,
            lamb_floor: 1e-18,
            stall_limit: 5000,
            max_iters: 2_000_000,
        }
    }
}

impl EmbeddingConfig {
    fn validate(&self) -> Result<()> {
        if !(self.d_lim > 0.0) {
            return domain(format!("d_lim must be positive, got {}", self.d_lim));
        }
        if !(self.lamb > 0.0) {
            return domain(format!("lamb must be positive, got {}", self.lamb));
        }
        if !(self.adj > 0.0 && self.adj < 1.0) {
            return domain(format!("adj must lie in (0, 1), got {}", self.adj));
        }
        if !self.gamma_exp.is_finite() {
            return domain("gamma_exp must be finite");
        }
        Ok(())
    }
}

pub type Coords = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq)]
pub struct ChiGrad {
    pub chi2: f64,
    pub grad: Vec<[f64; 2]>,
    pub grad_norm: f64,
}

/// Pairs that enter the objective, with their weights.
fn active_pairs(d: &DistanceMatrix, gamma_exp: f64, d_lim: f64) -> Vec<(usize, usize, f64, f64)> {
    let mut pairs = Vec::new();
    let mut undefined = 0usize;
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            let dij = d.get(i, j);
            if dij >= d_lim {
                continue;
            }
            if dij == 0.0 && gamma_exp < 0.0 {
                undefined += 1;
                continue;
            }
            pairs.push((i, j, dij, dij.powf(gamma_exp)));
        }
    }
    if undefined > 0 {
        log::warn!("{undefined} zero-distance pairs skipped: weight d^{gamma_exp} is undefined");
    }
    pairs
}

fn chi_grad_pairs(coords: &[[f64; 2]], pairs: &[(usize, usize, f64, f64)]) -> ChiGrad {
    let mut chi2 = 0.0;
    let mut grad = vec![[0.0; 2]; coords.len()];
    for &(i, j, dij, w) in pairs {
        let r = dist(coords[i], coords[j]);
        let diff = dij - r;
        chi2 += w * diff * diff;
        if r > 0.0 {
            let f = -2.0 * w * diff / r;
            for a in 0..2 {
                let g = f * (coords[i][a] - coords[j][a]);
                grad[i][a] += g;
                grad[j][a] -= g;
            }
        }
    }
    let grad_norm = grad.iter().map(|g| g[0] * g[0] + g[1] * g[1]).sum::<f64>().sqrt();
    ChiGrad {
        chi2,
        grad,
        grad_norm,
    }
}

fn chi_only(coords: &[[f64; 2]], pairs: &[(usize, usize, f64, f64)]) -> f64 {
    pairs
        .iter()
        .map(|&(i, j, dij, w)| {
            let diff = dij - dist(coords[i], coords[j]);
            w * diff * diff
        })
        .sum()
}

/// `χ² = Σ_{i<j, d_ij<d_lim} d_ij^γ (d_ij - |r_i - r_j|)²` with its gradient over all
/// coordinates. Coincident points contribute no gradient.
pub fn chi_grad(coords: &[[f64; 2]], d: &DistanceMatrix, gamma_exp: f64, d_lim: f64) -> Result<ChiGrad> {
    if coords.len() != d.len() {
        return Err(Error::SizeMismatch {
            expected: d.len(),
            found: coords.len(),
        });
    }
    Ok(chi_grad_pairs(coords, &active_pairs(d, gamma_exp, d_lim)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    StepFloor,
    Stalled,
    IterationLimit,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::StepFloor => "step_floor",
            Termination::Stalled => "stalled",
            Termination::IterationLimit => "iteration_limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: Coords,
    pub chi2: f64,
    pub grad_norm: f64,
    pub termination: Termination,
    pub iterations: usize,
}

/// Gradient descent from random points in the unit square. A step `r - λ∇χ²` is kept
/// when it lowers χ², growing `λ` by the factor `1 + adj`; otherwise it is dropped
/// and `λ` shrinks by `1 - adj`.
pub fn embed<R: Rng + ?Sized>(d: &DistanceMatrix, cfg: &EmbeddingConfig, rng: &mut R) -> Result<Embedding> {
    cfg.validate()?;
    let n = d.len();
    let pairs = active_pairs(d, cfg.gamma_exp, cfg.d_lim);
    let mut coords: Coords = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let mut current = chi_grad_pairs(&coords, &pairs);
    let mut lamb = cfg.lamb;
    let mut stall = 0;
    let mut trial = coords.clone();
    let mut iterations = 0;
    let termination = loop {
        if current.grad_norm / (2.0 * n as f64) < cfg.eps {
            break Termination::Converged;
        }
        if lamb < cfg.lamb_floor {
            break Termination::StepFloor;
        }
        if stall >= cfg.stall_limit {
            break Termination::Stalled;
        }
        if iterations >= cfg.max_iters {
            break Termination::IterationLimit;
        }
        iterations += 1;
        for (t, (c, g)) in trial.iter_mut().zip(coords.iter().zip(&current.grad)) {
            t[0] = c[0] - lamb * g[0];
            t[1] = c[1] - lamb * g[1];
        }
        if chi_only(&trial, &pairs) < current.chi2 {
            std::mem::swap(&mut coords, &mut trial);
            current = chi_grad_pairs(&coords, &pairs);
            lamb *= 1.0 + cfg.adj;
            stall = 0;
        } else {
            lamb *= 1.0 - cfg.adj;
            stall += 1;
        }
    };
    Ok(Embedding {
        coords,
        chi2: current.chi2,
        grad_norm: current.grad_norm,
        termination,
        iterations,
    })
}

/// Walk over the `top` highest partitions: values are rescaled to `[0, 1]`, sorted
/// descending (ties by index), and each step adds the distance to the previous one.
/// Returns `(cumulative distance, height)` pairs.
pub fn peak_walk(values: &[f64], d: &DistanceMatrix, top: usize) -> Result<Vec<(f64, f64)>> {
    if values.len() != d.len() {
        return Err(Error::SizeMismatch {
            expected: d.len(),
            found: values.len(),
        });
    }
    if top == 0 || top > values.len() {
        return domain(format!("top must lie in [1, {}], got {top}", values.len()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return domain("values are constant; the walk heights are undefined");
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut walk = Vec::with_capacity(top);
    let mut cum = 0.0;
    for (step, &i) in order.iter().take(top).enumerate() {
        if step > 0 {
            cum += d.get(order[step - 1], i);
        }
        walk.push((cum, (values[i] - lo) / (hi - lo)));
    }
    Ok(walk)
}

/// Settings for sampling partitions around the surprise optimum of a graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub runs: usize,
    pub sweeps: usize,
    pub temperature: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            runs: 100,
            sweeps: 15,
            temperature: 5.0,
        }
    }
}

/// Distinct partitions visited by independent annealing runs. Each run starts from
/// the greedy optimum, records the state after every sweep, and ends by climbing back
/// with the greedy stepper and walking the resulting plateau with `shake`.
pub fn partition_ensemble(graph: &Graph, cfg: &EnsembleConfig, seed: u64) -> Result<Vec<Partition>> {
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut record = |p: &Partition, out: &mut Vec<Partition>| {
        if seen.insert(p.canonical_labels()) {
            out.push(p.clone());
        }
    };
    for _ in 0..cfg.runs {
        let mut st = SurpriseState::new(graph, seeds.random());
        st.stepper();
        record(st.partition(), &mut out);
        for _ in 0..cfg.sweeps {
            st.anneal_step(cfg.temperature)?;
            record(st.partition(), &mut out);
        }
        st.stepper();
        record(st.partition(), &mut out);
        let mut plateau = st.clone();
        let before = plateau.partition().clone();
        plateau.shake();
        if !plateau.partition().same_as(&before) {
            record(plateau.partition(), &mut out);
        }
    }
    Ok(out)
}

/// Writes `index\tx\ty` lines.
pub fn write_coords_tsv<W: Write>(coords: &[[f64; 2]], mut out: W) -> Result<()> {
    for (i, c) in coords.iter().enumerate() {
        writeln!(out, "{i}\t{:.12}\t{:.12}", c[0], c[1])?;
    }
    Ok(())
}

/// Writes a `cum_distance,height` CSV.
pub fn write_walk_csv<W: Write>(walk: &[(f64, f64)], mut out: W) -> Result<()> {
    writeln!(out, "cum_distance,height")?;
    for (x, y) in walk {
        writeln!(out, "{x:.12},{y:.12}")?;
    }
    Ok(())
}
