//! Ground-truth benchmark networks: degraded cliques with singletons (optionally in a
//! ring), relaxed-caveman style rewiring, and clique-size lists with a chosen Pielou index.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::error::{domain, Result};
use crate::graph::Graph;
use crate::metrics::pielou;
use crate::partition::Partition;

/// Stop once the Pielou index is this close to the target.
const PIELOU_TOLERANCE: f64 = 0.002;
const PIELOU_MAX_ITERS: usize = 100_000;
/// Starting clique size for [`pielouer`] when the floor is small.
const PIELOUER_BASE: usize = 25;

fn check_probability(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        domain(format!("{what} must lie in [0, 1], got {x}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PielouResult {
    pub sizes: Vec<usize>,
    pub achieved: f64,
}

fn check_pielou_args(n: usize, target: f64) -> Result<()> {
    if n < 2 {
        return domain(format!("need at least 2 communities, got {n}"));
    }
    if !(target > 0.0 && target <= 1.0) {
        return domain(format!("Pielou target must lie in (0, 1], got {target}"));
    }
    Ok(())
}

/// Moves single units between random entries while that brings the index closer to
/// `target`. The sum and the floor are preserved.
fn tune_pielou<R: Rng + ?Sized>(sizes: &mut [usize], target: f64, floor: usize, rng: &mut R) -> f64 {
    let mut pi = pielou(sizes).expect("sizes are positive");
    let n = sizes.len();
    for _ in 0..PIELOU_MAX_ITERS {
        if (pi - target).abs() <= PIELOU_TOLERANCE {
            break;
        }
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j || sizes[i] <= floor {
            continue;
        }
        sizes[i] -= 1;
        sizes[j] += 1;
        let next = pielou(sizes).expect("sizes are positive");
        if (next - target).abs() < (pi - target).abs() {
            pi = next;
        } else {
            sizes[i] += 1;
            sizes[j] -= 1;
        }
    }
    pi
}

/// `n` sizes, each at least `size_floor`, whose Pielou index approaches `target`.
///
/// Returns the best attempt when the target cannot be met; check `achieved`.
pub fn pielouer<R: Rng + ?Sized>(
    n: usize,
    target: f64,
    size_floor: usize,
    rng: &mut R,
) -> Result<PielouResult> {
    check_pielou_args(n, target)?;
    let floor = size_floor.max(1);
    let mut sizes = vec![floor.max(PIELOUER_BASE); n];
    let achieved = tune_pielou(&mut sizes, target, floor, rng);
    Ok(PielouResult { sizes, achieved })
}

/// As [`pielouer`], with the total constrained to `total_range` (inclusive).
pub fn pielouer_nodes<R: Rng + ?Sized>(
    n: usize,
    target: f64,
    total_range: (usize, usize),
    size_floor: usize,
    rng: &mut R,
) -> Result<PielouResult> {
    check_pielou_args(n, target)?;
    let (lo, hi) = total_range;
    let floor = size_floor.max(1);
    if lo > hi {
        return domain(format!("empty size range [{lo}, {hi}]"));
    }
    if n * floor > hi {
        return domain(format!(
            "{n} communities of at least {floor} nodes cannot sum to at most {hi}"
        ));
    }
    let total = ((lo + hi) / 2).max(n * floor);
    let mut sizes: Vec<usize> = (0..n).map(|i| total / n + usize::from(i < total % n)).collect();
    let achieved = tune_pielou(&mut sizes, target, floor, rng);
    Ok(PielouResult { sizes, achieved })
}

/// `K = ⌊Σc / (1 - r)⌋`.
fn total_nodes(clique_sum: usize, r: f64) -> usize {
    (clique_sum as f64 / (1.0 - r) + 1e-9).floor() as usize
}

/// Clique-size sums `s` with `⌊s / (1 - r)⌋ = k`, as an inclusive range.
pub fn clique_sum_range(k: usize, r: f64) -> Result<(usize, usize)> {
    if !(0.0..1.0).contains(&r) {
        return domain(format!("singleton fraction must lie in [0, 1), got {r}"));
    }
    let guess = (k as f64 * (1.0 - r)).floor() as usize;
    let start = guess.saturating_sub(2);
    let hits: Vec<usize> = (start..=guess + 2).filter(|&s| total_nodes(s, r) == k).collect();
    match (hits.first(), hits.last()) {
        (Some(&a), Some(&b)) => Ok((a, b)),
        _ => domain(format!("no clique total yields {k} nodes at r={r}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedCounts {
    pub k: usize,
    pub nc: usize,
    pub mean_in: f64,
    pub mean_out: f64,
}

/// Node and community counts plus mean intra- and inter-community link counts.
pub fn expected_counts(cliques: &[usize], r: f64, p: f64, q: f64) -> Result<ExpectedCounts> {
    if !(0.0..1.0).contains(&r) {
        return domain(format!("singleton fraction must lie in [0, 1), got {r}"));
    }
    check_probability(p, "p")?;
    check_probability(q, "q")?;
    let sum: usize = cliques.iter().sum();
    let k = total_nodes(sum, r);
    let nc = cliques.len() + (r * k as f64 + 1e-9).floor() as usize;
    let pairs_in: f64 = cliques.iter().map(|&c| (c * (c - 1) / 2) as f64).sum();
    let sq: f64 = cliques.iter().map(|&c| (c * c) as f64).sum();
    let pairs_between = (sum as f64 * sum as f64 - sq) / 2.0;
    Ok(ExpectedCounts {
        k,
        nc,
        mean_in: (1.0 - p) * pairs_in,
        mean_out: q * pairs_between + r / (1.0 - r) * sum as f64,
    })
}

/// A clique benchmark with its ground truth. Nodes `0..Σc` belong to the cliques in
/// order; the remaining nodes are singletons.
#[derive(Debug, Clone)]
pub struct BenchmarkNet {
    pub graph: Graph,
    pub cliques: Vec<usize>,
    pub r: f64,
    pub cycle: bool,
    pub truth: Partition,
    /// Edges inside ground-truth communities.
    pub inclique_count: usize,
    /// Edges between ground-truth communities.
    pub between_count: usize,
}

impl BenchmarkNet {
    pub fn singleton_count(&self) -> usize {
        self.graph.node_count() - self.cliques.iter().sum::<usize>()
    }

    /// Size of the ground-truth community of `u`.
    fn community_size(&self, u: usize) -> usize {
        self.truth.size(self.truth.community_of(u))
    }

    /// Removes each intra-community edge with probability `p_fn(clique size)`.
    /// Returns the number removed.
    pub fn degrade_p<R: Rng + ?Sized>(
        &mut self,
        p_fn: impl Fn(usize) -> f64,
        rng: &mut R,
    ) -> Result<usize> {
        let intra: Vec<(usize, usize)> = self
            .graph
            .edges()
            .filter(|&(u, v)| self.truth.community_of(u) == self.truth.community_of(v))
            .collect();
        let probs = intra
            .iter()
            .map(|&(u, _)| {
                let p = p_fn(self.community_size(u));
                check_probability(p, "p").map(|_| p)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut removed = 0;
        for ((u, v), p) in intra.into_iter().zip(probs) {
            if rng.random::<f64>() < p {
                self.graph.remove_edge(u, v)?;
                removed += 1;
            }
        }
        self.inclique_count -= removed;
        Ok(removed)
    }

    /// Adds each absent inter-community pair with probability `q_fn(size_a, size_b)`.
    /// Singletons count as communities of size one. Returns the number added.
    pub fn degrade_q<R: Rng + ?Sized>(
        &mut self,
        q_fn: impl Fn(usize, usize) -> f64,
        rng: &mut R,
    ) -> Result<usize> {
        let k = self.graph.node_count();
        let mut added = 0;
        for u in 0..k {
            let cu = self.truth.community_of(u);
            for v in u + 1..k {
                if self.truth.community_of(v) == cu || self.graph.has_edge(u, v) {
                    continue;
                }
                let q = q_fn(self.community_size(u), self.community_size(v));
                check_probability(q, "q")?;
                if rng.random::<f64>() < q {
                    self.graph.add_edge(u, v)?;
                    self.between_count += 1;
                    added += 1;
                }
            }
        }
        Ok(added)
    }
}

/// Complete cliques of the given sizes plus `⌊Σc/(1-r)⌋ - Σc` singletons, each linked
/// to a random node of a random clique. With `cycle`, every clique gives up its edge
/// between its first two nodes and its first node links to the last node of the
/// previous clique, closing a ring.
pub fn build_benchmark<R: Rng + ?Sized>(
    cliques: &[usize],
    r: f64,
    cycle: bool,
    rng: &mut R,
) -> Result<BenchmarkNet> {
    if cliques.is_empty() {
        return domain("benchmark needs at least one clique");
    }
    if let Some(&c) = cliques.iter().find(|&&c| c < 2) {
        return domain(format!("clique sizes must be at least 2, got {c}"));
    }
    if !(0.0..1.0).contains(&r) {
        return domain(format!("singleton fraction must lie in [0, 1), got {r}"));
    }
    let sum: usize = cliques.iter().sum();
    let k = total_nodes(sum, r);
    let mut g = Graph::new(k);
    let mut labels = Vec::with_capacity(k);
    let mut starts = Vec::with_capacity(cliques.len());
    let mut next = 0;
    for (i, &c) in cliques.iter().enumerate() {
        starts.push(next);
        for u in next..next + c {
            labels.push(i);
            for v in u + 1..next + c {
                g.add_edge(u, v)?;
            }
        }
        next += c;
    }
    let mut between = 0;
    if cycle && cliques.len() >= 2 {
        for (i, &s) in starts.iter().enumerate() {
            let prev = (i + cliques.len() - 1) % cliques.len();
            let prev_last = starts[prev] + cliques[prev] - 1;
            g.remove_edge(s, s + 1)?;
            if g.add_edge(s, prev_last)? {
                between += 1;
            }
        }
    }
    let clique_ids: Vec<usize> = (0..cliques.len()).collect();
    for (j, u) in (sum..k).enumerate() {
        labels.push(cliques.len() + j);
        let &c = clique_ids.choose(rng).expect("at least one clique");
        let v = starts[c] + rng.random_range(0..cliques[c]);
        g.add_edge(u, v)?;
        between += 1;
    }
    let inclique = g.link_count() - between;
    Ok(BenchmarkNet {
        graph: g,
        cliques: cliques.to_vec(),
        r,
        cycle,
        truth: Partition::from_labels(&labels),
        inclique_count: inclique,
        between_count: between,
    })
}

/// Parameters of a complete benchmark run: sizes, construction and degradation.
#[derive(Debug, Clone, PartialEq)]
pub struct OurConfig {
    pub ncliques: usize,
    pub pielou: f64,
    pub nodes: usize,
    pub r: f64,
    pub p: f64,
    pub q: f64,
    pub cycle: bool,
}

impl OurConfig {
    /// The usual degradation mapping `p = μ`, `q = 0.05 μ`.
    pub fn with_mu(ncliques: usize, pielou: f64, nodes: usize, r: f64, mu: f64) -> Self {
        OurConfig {
            ncliques,
            pielou,
            nodes,
            r,
            p: mu,
            q: 0.05 * mu,
            cycle: false,
        }
    }
}

/// Draws clique sizes, builds the network and applies constant `p`/`q` degradation.
pub fn generate_our<R: Rng + ?Sized>(cfg: &OurConfig, rng: &mut R) -> Result<BenchmarkNet> {
    check_probability(cfg.p, "p")?;
    check_probability(cfg.q, "q")?;
    let range = clique_sum_range(cfg.nodes, cfg.r)?;
    let sizes = pielouer_nodes(cfg.ncliques, cfg.pielou, range, 2, rng)?.sizes;
    let mut net = build_benchmark(&sizes, cfg.r, cfg.cycle, rng)?;
    net.degrade_p(|_| cfg.p, rng)?;
    net.degrade_q(|_, _| cfg.q, rng)?;
    Ok(net)
}

/// Removes `⌊R·n/100⌋` random edges, then moves `⌊R·n'/100⌋` of the `n'` survivors to
/// random node pairs that are not linked at that moment.
pub fn rc_degrade<R: Rng + ?Sized>(g: &Graph, pct: f64, rng: &mut R) -> Result<Graph> {
    if !(0.0..=100.0).contains(&pct) {
        return domain(format!("degradation percentage must lie in [0, 100], got {pct}"));
    }
    let share = |n: usize| (pct * n as f64 / 100.0 + 1e-9).floor() as usize;
    let mut out = g.clone();
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    edges.shuffle(rng);
    let remove = share(edges.len());
    for &(u, v) in &edges[..remove] {
        out.remove_edge(u, v)?;
    }
    let mut remaining = edges.split_off(remove);
    remaining.shuffle(rng);
    let rewire = share(remaining.len());
    let k = out.node_count();
    for &(u, v) in &remaining[..rewire] {
        out.remove_edge(u, v)?;
        loop {
            let a = rng.random_range(0..k);
            let b = rng.random_range(0..k);
            if a != b && !out.has_edge(a, b) {
                out.add_edge(a, b)?;
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn pielouer_equal_sizes_at_one() {
        let r = pielouer(7, 1.0, 3, &mut rng(0)).unwrap();
        assert!(r.sizes.iter().all(|&s| s == r.sizes[0]));
        assert!((r.achieved - 1.0).abs() < 1e-12);
        assert!(pielouer(1, 0.5, 2, &mut rng(0)).is_err());
        assert!(pielouer(5, 0.0, 2, &mut rng(0)).is_err());
        assert!(pielouer(5, 1.1, 2, &mut rng(0)).is_err());
    }

    #[test]
    fn pielouer_hits_targets() {
        for (n, target) in [(40, 0.75), (20, 0.85)] {
            let r = pielouer(n, target, 2, &mut rng(3)).unwrap();
            assert_eq!(r.sizes.len(), n);
            assert!(r.sizes.iter().all(|&s| s >= 2));
            let pi = pielou(&r.sizes).unwrap();
            assert_eq!(pi, r.achieved);
            assert!((pi - target).abs() <= 0.01, "{pi}");
        }
    }

    #[test]
    fn pielouer_nodes_respects_total() {
        let r = pielouer_nodes(20, 0.85, (495, 495), 2, &mut rng(1)).unwrap();
        assert_eq!(r.sizes.iter().sum::<usize>(), 495);
        assert!((r.achieved - 0.85).abs() <= 0.01);
        let r = pielouer_nodes(40, 0.95, (990, 990), 2, &mut rng(1)).unwrap();
        assert_eq!(r.sizes.iter().sum::<usize>(), 990);
        assert!((r.achieved - 0.95).abs() <= 0.01);
        let r = pielouer_nodes(6, 1.0, (30, 30), 2, &mut rng(1)).unwrap();
        assert_eq!(r.sizes, vec![5; 6]);
        assert!(pielouer_nodes(10, 0.9, (15, 19), 2, &mut rng(1)).is_err());
    }

    #[test]
    fn sum_range_for_k500() {
        assert_eq!(clique_sum_range(500, 0.01).unwrap(), (495, 495));
        assert_eq!(clique_sum_range(100, 0.0).unwrap(), (100, 100));
    }

    #[test]
    fn two_triangles() {
        let net = build_benchmark(&[3, 3], 0.0, false, &mut rng(0)).unwrap();
        assert_eq!(net.graph.node_count(), 6);
        assert_eq!(net.graph.link_count(), 6);
        assert_eq!((net.inclique_count, net.between_count), (6, 0));
        assert_eq!(net.truth.labels(), &[0, 0, 0, 1, 1, 1]);
        assert!(build_benchmark(&[3, 1], 0.0, false, &mut rng(0)).is_err());
        assert!(build_benchmark(&[3, 3], 1.0, false, &mut rng(0)).is_err());
    }

    #[test]
    fn singletons_and_ring() {
        let sizes = pielouer_nodes(20, 0.85, (495, 495), 2, &mut rng(2)).unwrap().sizes;
        let net = build_benchmark(&sizes, 0.01, true, &mut rng(2)).unwrap();
        assert_eq!(net.graph.node_count(), 500);
        assert_eq!(net.truth.community_count(), 25);
        assert_eq!(net.singleton_count(), 5);
        for u in 495..500 {
            assert_eq!(net.graph.degree(u), 1);
        }
        let pairs: usize = sizes.iter().map(|c| c * (c - 1) / 2).sum();
        assert_eq!(net.inclique_count, pairs - 20);
        assert_eq!(net.between_count, 20 + 5);
        assert_eq!(net.graph.link_count(), pairs + 5);
    }

    #[test]
    fn expected_counts_examples() {
        let e = expected_counts(&[4, 4], 0.0, 0.0, 0.0).unwrap();
        assert_eq!((e.k, e.nc, e.mean_in, e.mean_out), (8, 2, 12.0, 0.0));
        let e = expected_counts(&[10; 20], 0.0, 0.3, 0.015).unwrap();
        assert!((e.mean_in - 0.7 * 900.0).abs() < 1e-9);
        assert!((e.mean_out - 0.015 * 19_000.0).abs() < 1e-9);
    }

    #[test]
    fn degrade_extremes() {
        let mut net = build_benchmark(&[5, 6], 0.0, false, &mut rng(0)).unwrap();
        let before = net.graph.clone();
        assert_eq!(net.degrade_p(|_| 0.0, &mut rng(1)).unwrap(), 0);
        assert_eq!(net.degrade_q(|_, _| 0.0, &mut rng(1)).unwrap(), 0);
        assert_eq!(net.graph, before);
        assert!(net.degrade_p(|_| 1.5, &mut rng(1)).is_err());
        let mut net = build_benchmark(&[5, 6], 0.0, false, &mut rng(0)).unwrap();
        assert_eq!(net.degrade_p(|_| 1.0, &mut rng(1)).unwrap(), 25);
        assert_eq!(net.graph.link_count(), 0);
        assert_eq!(net.inclique_count, 0);
    }

    #[test]
    fn rc_degrade_counts() {
        let g = crate::fixtures::isolated_cliques(&[15, 15]);
        assert_eq!(g.link_count(), 210);
        assert_eq!(rc_degrade(&g, 0.0, &mut rng(0)).unwrap(), g);
        let out = rc_degrade(&g, 100.0, &mut rng(0)).unwrap();
        assert_eq!((out.node_count(), out.link_count()), (30, 0));
        let out = rc_degrade(&g, 50.0, &mut rng(0)).unwrap();
        assert_eq!(out.link_count(), 105);
        assert!(rc_degrade(&g, 101.0, &mut rng(0)).is_err());
    }
}
