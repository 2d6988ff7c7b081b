//! Greedy and annealed surprise maximization.
//!
//! A [`SurpriseState`] owns a partition of a borrowed graph and keeps `M`, `ℓ` and
//! `S` up to date as moves are applied. Five move kinds are available: merging two
//! communities, exchanging a node between communities, extracting a node into a new
//! community, and extracting or relocating a whole sub-community. Sub-communities are
//! found by running the greedy optimizer on the subgraph induced by a community.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::{Partition, Target};
use crate::surprise::{surprise, surprise_unchecked};

/// Minimum gain for a greedy move to count as an improvement.
pub const GAIN_TOLERANCE: f64 = 1e-12;

/// Largest |ΔS| treated as a degenerate (equal-surprise) move.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Merge,
    Exchange,
    Extract,
    SubExtract,
    SubExchange,
}

impl MoveKind {
    pub const ALL: [MoveKind; 5] = [
        MoveKind::Merge,
        MoveKind::Exchange,
        MoveKind::Extract,
        MoveKind::SubExtract,
        MoveKind::SubExchange,
    ];
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MoveKind::Merge => "merge",
            MoveKind::Exchange => "exchange",
            MoveKind::Extract => "extract",
            MoveKind::SubExtract => "sub_extract",
            MoveKind::SubExchange => "sub_exchange",
        };
        f.write_str(s)
    }
}

/// A concrete partition change. Community ids refer to the state the move is evaluated on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    /// Move every node of `absorb` into `keep`; `absorb` disappears.
    Merge { keep: usize, absorb: usize },
    Exchange { node: usize, to: usize },
    Extract { node: usize },
    /// Split `nodes` (a proper subset of `community`) off as a new community.
    SubExtract { community: usize, nodes: Vec<usize> },
    /// Relocate `nodes` (a proper subset of `community`) into `to`.
    SubExchange {
        community: usize,
        nodes: Vec<usize>,
        to: usize,
    },
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        match self {
            Move::Merge { .. } => MoveKind::Merge,
            Move::Exchange { .. } => MoveKind::Exchange,
            Move::Extract { .. } => MoveKind::Extract,
            Move::SubExtract { .. } => MoveKind::SubExtract,
            Move::SubExchange { .. } => MoveKind::SubExchange,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveOutcome {
    pub accepted: bool,
    pub delta_s: f64,
    pub kind: MoveKind,
}

impl MoveOutcome {
    fn rejected(kind: MoveKind, delta_s: f64) -> Self {
        MoveOutcome {
            accepted: false,
            delta_s,
            kind,
        }
    }
}

/// Accepted-move tallies per kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MoveCounts {
    pub merge: usize,
    pub exchange: usize,
    pub extract: usize,
    pub sub_extract: usize,
    pub sub_exchange: usize,
}

impl MoveCounts {
    pub fn total(&self) -> usize {
        self.merge + self.exchange + self.extract + self.sub_extract + self.sub_exchange
    }

    pub fn get(&self, kind: MoveKind) -> usize {
        match kind {
            MoveKind::Merge => self.merge,
            MoveKind::Exchange => self.exchange,
            MoveKind::Extract => self.extract,
            MoveKind::SubExtract => self.sub_extract,
            MoveKind::SubExchange => self.sub_exchange,
        }
    }
}

impl std::ops::AddAssign for MoveCounts {
    fn add_assign(&mut self, o: Self) {
        self.merge += o.merge;
        self.exchange += o.exchange;
        self.extract += o.extract;
        self.sub_extract += o.sub_extract;
        self.sub_exchange += o.sub_exchange;
    }
}

/// Metropolis rule: gains are always taken, losses with probability `exp(ΔS/T)`.
pub fn metropolis_accept<R: Rng + ?Sized>(delta_s: f64, temperature: f64, rng: &mut R) -> bool {
    delta_s > 0.0 || rng.random::<f64>() < (delta_s / temperature).exp()
}

type SubCache = Mutex<HashMap<Vec<usize>, Arc<Vec<Vec<usize>>>>>;

/// A graph together with a partition whose surprise is maintained incrementally.
pub struct SurpriseState<'g> {
    graph: &'g Graph,
    partition: Partition,
    f: u64,
    n: u64,
    m: u64,
    ell: u64,
    s: f64,
    rng: ChaCha8Rng,
    // Set on states built for sub-community recursion.
    nested: bool,
    // Sub-community structure is a pure function of a community's member set.
    sub_cache: SubCache,
}

impl Clone for SurpriseState<'_> {
    fn clone(&self) -> Self {
        let cache = self.sub_cache.lock().unwrap_or_else(|e| e.into_inner()).clone();
        SurpriseState {
            graph: self.graph,
            partition: self.partition.clone(),
            f: self.f,
            n: self.n,
            m: self.m,
            ell: self.ell,
            s: self.s,
            rng: self.rng.clone(),
            nested: self.nested,
            sub_cache: Mutex::new(cache),
        }
    }
}

impl fmt::Debug for SurpriseState<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurpriseState")
            .field("K", &self.graph.node_count())
            .field("n", &self.n)
            .field("Nc", &self.partition.community_count())
            .field("M", &self.m)
            .field("ell", &self.ell)
            .field("S", &self.s)
            .finish()
    }
}

impl<'g> SurpriseState<'g> {
    /// Starts from the all-singletons partition.
    pub fn new(graph: &'g Graph, seed: u64) -> Self {
        Self::with_partition(graph, Partition::singletons(graph.node_count()), seed)
            .expect("singleton partition matches its graph")
    }

    pub fn with_partition(graph: &'g Graph, partition: Partition, seed: u64) -> Result<Self> {
        partition.check_graph(graph)?;
        let f = graph.max_links();
        let n = graph.link_count() as u64;
        let m = partition.max_intra_pairs();
        let ell = partition.intra_links(graph)?;
        let s = surprise(f, m, n, ell)?;
        Ok(SurpriseState {
            graph,
            partition,
            f,
            n,
            m,
            ell,
            s,
            rng: ChaCha8Rng::seed_from_u64(seed),
            nested: false,
            sub_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn into_partition(self) -> Partition {
        self.partition
    }

    pub fn surprise(&self) -> f64 {
        self.s
    }

    pub fn intra_pairs(&self) -> u64 {
        self.m
    }

    pub fn intra_links(&self) -> u64 {
        self.ell
    }

    pub fn community_count(&self) -> usize {
        self.partition.community_count()
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// True iff the cached `M`, `ℓ` and `S` match a from-scratch recomputation.
    pub fn verify(&self) -> bool {
        if !self.partition.is_consistent() || self.partition.node_count() != self.graph.node_count() {
            return false;
        }
        let m = self.partition.max_intra_pairs();
        let ell = match self.partition.intra_links(self.graph) {
            Ok(l) => l,
            Err(_) => return false,
        };
        if m != self.m || ell != self.ell {
            return false;
        }
        match surprise(self.f, m, self.n, ell) {
            Ok(s) => (s - self.s).abs() <= 1e-9 * s.abs().max(1.0),
            Err(_) => false,
        }
    }

    // ---- validation ----------------------------------------------------------------

    fn check_community(&self, c: usize) -> Result<()> {
        let nc = self.partition.community_count();
        if c < nc {
            Ok(())
        } else {
            Err(Error::NoSuchCommunity { id: c, nc })
        }
    }

    fn check_node(&self, u: usize) -> Result<()> {
        let k = self.graph.node_count();
        if u < k {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: u, k })
        }
    }

    fn check_subset(&self, community: usize, nodes: &[usize]) -> Result<()> {
        self.check_community(community)?;
        if nodes.is_empty() || nodes.len() >= self.partition.size(community) {
            return Err(Error::Precondition(
                "sub-community must be a non-empty proper subset of its community".into(),
            ));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("sub-community nodes must be sorted and distinct".into()));
        }
        for &u in nodes {
            self.check_node(u)?;
            if self.partition.community_of(u) != community {
                return Err(Error::Precondition(format!(
                    "node {u} is not in community {community}"
                )));
            }
        }
        Ok(())
    }

    // ---- move evaluation -----------------------------------------------------------

    /// `(M', ℓ')` after moving the sorted set `nodes` from `from` to `target`.
    fn relocation_counts(&self, nodes: &[usize], from: usize, target: Target) -> (u64, u64) {
        let a = self.partition.size(from) as u64;
        let t = nodes.len() as u64;
        let (b, dest) = match target {
            Target::Existing(d) => (self.partition.size(d) as u64, Some(d)),
            Target::New => (0, None),
        };
        let labels = self.partition.labels();
        let mut to_dest = 0u64;
        let mut to_rest = 0u64;
        for &u in nodes {
            for &v in self.graph.neighbors(u) {
                let cv = labels[v];
                if Some(cv) == dest {
                    to_dest += 1;
                } else if cv == from && !contains(nodes, v) {
                    to_rest += 1;
                }
            }
        }
        let m = self.m - t * (a - t) + t * b;
        let ell = self.ell + to_dest - to_rest;
        (m, ell)
    }

    fn merge_counts(&self, keep: usize, absorb: usize) -> (u64, u64) {
        let (small, other) = if self.partition.size(keep) <= self.partition.size(absorb) {
            (keep, absorb)
        } else {
            (absorb, keep)
        };
        let labels = self.partition.labels();
        let between: u64 = self
            .partition
            .members(small)
            .iter()
            .map(|&u| {
                self.graph
                    .neighbors(u)
                    .iter()
                    .filter(|&&v| labels[v] == other)
                    .count() as u64
            })
            .sum();
        let a = self.partition.size(keep) as u64;
        let b = self.partition.size(absorb) as u64;
        (self.m + a * b, self.ell + between)
    }

    fn eval(&self, (m, ell): (u64, u64)) -> f64 {
        surprise_unchecked(self.f, m, self.n, ell)
    }

    /// Surprise after `mv`, which must already be validated.
    fn evaluate(&self, mv: &Move) -> f64 {
        let counts = match mv {
            Move::Merge { keep, absorb } => self.merge_counts(*keep, *absorb),
            Move::Exchange { node, to } => {
                let from = self.partition.community_of(*node);
                self.relocation_counts(&[*node], from, Target::Existing(*to))
            }
            Move::Extract { node } => {
                let from = self.partition.community_of(*node);
                self.relocation_counts(&[*node], from, Target::New)
            }
            Move::SubExtract { community, nodes } => {
                self.relocation_counts(nodes, *community, Target::New)
            }
            Move::SubExchange {
                community,
                nodes,
                to,
            } => self.relocation_counts(nodes, *community, Target::Existing(*to)),
        };
        self.eval(counts)
    }

    fn validate(&self, mv: &Move) -> Result<()> {
        match mv {
            Move::Merge { keep, absorb } => {
                self.check_community(*keep)?;
                self.check_community(*absorb)?;
                if keep == absorb {
                    return Err(Error::Precondition("cannot merge a community with itself".into()));
                }
            }
            Move::Exchange { node, to } => {
                self.check_node(*node)?;
                self.check_community(*to)?;
                let from = self.partition.community_of(*node);
                if from == *to {
                    return Err(Error::Precondition("exchange target is the current community".into()));
                }
                if self.partition.size(from) < 2 {
                    return Err(Error::Precondition(format!(
                        "node {node} is alone in its community"
                    )));
                }
            }
            Move::Extract { node } => {
                self.check_node(*node)?;
                if self.partition.size(self.partition.community_of(*node)) < 2 {
                    return Err(Error::Precondition(format!(
                        "node {node} is alone in its community"
                    )));
                }
            }
            Move::SubExtract { community, nodes } => self.check_subset(*community, nodes)?,
            Move::SubExchange {
                community,
                nodes,
                to,
            } => {
                self.check_subset(*community, nodes)?;
                self.check_community(*to)?;
                if to == community {
                    return Err(Error::Precondition("sub-exchange target is the source community".into()));
                }
            }
        }
        Ok(())
    }

    /// ΔS that `mv` would produce, without applying it.
    pub fn move_delta(&self, mv: &Move) -> Result<f64> {
        self.validate(mv)?;
        Ok(self.evaluate(mv) - self.s)
    }

    /// Applies `mv` unconditionally and returns ΔS.
    pub fn apply_move(&mut self, mv: &Move) -> Result<f64> {
        self.validate(mv)?;
        let before = self.s;
        self.commit(mv);
        Ok(self.s - before)
    }

    /// Applies a validated move. Returns the id of a community removed by it, if any.
    fn commit(&mut self, mv: &Move) -> Option<usize> {
        let (m, ell) = match mv {
            Move::Merge { keep, absorb } => self.merge_counts(*keep, *absorb),
            Move::Exchange { node, to } => {
                let from = self.partition.community_of(*node);
                self.relocation_counts(&[*node], from, Target::Existing(*to))
            }
            Move::Extract { node } => {
                let from = self.partition.community_of(*node);
                self.relocation_counts(&[*node], from, Target::New)
            }
            Move::SubExtract { community, nodes } => {
                self.relocation_counts(nodes, *community, Target::New)
            }
            Move::SubExchange {
                community,
                nodes,
                to,
            } => self.relocation_counts(nodes, *community, Target::Existing(*to)),
        };
        let removed = match mv {
            Move::Merge { keep, absorb } => {
                let nodes = self.partition.members(*absorb).to_vec();
                self.partition
                    .relocate(&nodes, *absorb, Target::Existing(*keep))
            }
            Move::Exchange { node, to } => {
                let from = self.partition.community_of(*node);
                self.partition.relocate(&[*node], from, Target::Existing(*to))
            }
            Move::Extract { node } => {
                let from = self.partition.community_of(*node);
                self.partition.relocate(&[*node], from, Target::New)
            }
            Move::SubExtract { community, nodes } => {
                self.partition.relocate(nodes, *community, Target::New)
            }
            Move::SubExchange {
                community,
                nodes,
                to,
            } => self
                .partition
                .relocate(nodes, *community, Target::Existing(*to)),
        };
        self.m = m;
        self.ell = ell;
        self.s = self.eval((m, ell));
        removed
    }

    /// Applies `mv` only if it raises S by more than [`GAIN_TOLERANCE`].
    fn try_greedy(&mut self, mv: &Move) -> (MoveOutcome, Option<usize>) {
        let delta = self.evaluate(mv) - self.s;
        if delta > GAIN_TOLERANCE {
            let removed = self.commit(mv);
            (
                MoveOutcome {
                    accepted: true,
                    delta_s: delta,
                    kind: mv.kind(),
                },
                removed,
            )
        } else {
            (MoveOutcome::rejected(mv.kind(), delta), None)
        }
    }

    // ---- sub-communities -------------------------------------------------------------

    /// Communities found by the greedy optimizer on the subgraph induced by community `c`,
    /// in global node ids. Inside a recursion, a community spanning the whole (sub)graph
    /// is returned undivided, since recursing on it would pose the same problem again.
    pub fn subcommunities(&self, c: usize) -> Result<Arc<Vec<Vec<usize>>>> {
        self.check_community(c)?;
        Ok(self.subcommunities_of(c))
    }

    fn subcommunities_of(&self, c: usize) -> Arc<Vec<Vec<usize>>> {
        let members = self.partition.members(c);
        if !self.allows_sub_moves(c) {
            return Arc::new(vec![members.to_vec()]);
        }
        if let Some(hit) = self
            .sub_cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(members)
        {
            return Arc::clone(hit);
        }
        let sub = self.graph.induced(members);
        let mut state = SurpriseState::new(&sub, 0);
        state.nested = true;
        state.stepper();
        let found: Vec<Vec<usize>> = state
            .partition
            .communities()
            .iter()
            .map(|local| local.iter().map(|&i| members[i]).collect())
            .collect();
        let found = Arc::new(found);
        self.sub_cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(members.to_vec(), Arc::clone(&found));
        found
    }

    fn proper_subs(&self, c: usize) -> Vec<Vec<usize>> {
        let size = self.partition.size(c);
        self.subcommunities_of(c)
            .iter()
            .filter(|t| t.len() < size)
            .map(|t| {
                let mut t = t.clone();
                t.sort_unstable();
                t
            })
            .collect()
    }

    /// Best-scoring candidate among `moves`; ties keep the earliest.
    fn best_of(&self, moves: Vec<Move>) -> Option<(Move, f64)> {
        let mut best: Option<(Move, f64)> = None;
        for mv in moves {
            let s = self.evaluate(&mv);
            if best.as_ref().is_none_or(|(_, b)| s > *b) {
                best = Some((mv, s));
            }
        }
        best
    }

    // ---- public greedy moves ---------------------------------------------------------

    /// Merges `b` into `a` if that raises S. On success `b` is removed and higher ids shift down.
    pub fn merge(&mut self, a: usize, b: usize) -> Result<MoveOutcome> {
        let mv = Move::Merge { keep: a, absorb: b };
        self.validate(&mv)?;
        Ok(self.try_greedy(&mv).0)
    }

    /// Moves `node` into community `to` if that raises S.
    pub fn exchange(&mut self, node: usize, to: usize) -> Result<MoveOutcome> {
        self.check_node(node)?;
        self.check_community(to)?;
        if self.partition.community_of(node) == to {
            return Ok(MoveOutcome::rejected(MoveKind::Exchange, 0.0));
        }
        let mv = Move::Exchange { node, to };
        self.validate(&mv)?;
        Ok(self.try_greedy(&mv).0)
    }

    /// Splits `node` off into a new community if that raises S.
    pub fn extract(&mut self, node: usize) -> Result<MoveOutcome> {
        let mv = Move::Extract { node };
        self.validate(&mv)?;
        Ok(self.try_greedy(&mv).0)
    }

    /// Splits off the best sub-community of `c` if that raises S.
    pub fn sub_extract(&mut self, c: usize) -> Result<MoveOutcome> {
        self.check_community(c)?;
        if self.partition.size(c) < 2 {
            return Err(Error::Precondition(format!("community {c} has a single node")));
        }
        Ok(self.greedy_sub_extract(c))
    }

    fn greedy_sub_extract(&mut self, c: usize) -> MoveOutcome {
        let moves = self
            .proper_subs(c)
            .into_iter()
            .map(|nodes| Move::SubExtract {
                community: c,
                nodes,
            })
            .collect();
        match self.best_of(moves) {
            Some((mv, _)) => self.try_greedy(&mv).0,
            None => MoveOutcome::rejected(MoveKind::SubExtract, 0.0),
        }
    }

    /// Relocates the best sub-community of `c` into `to` if that raises S.
    pub fn sub_exchange(&mut self, c: usize, to: usize) -> Result<MoveOutcome> {
        self.check_community(c)?;
        self.check_community(to)?;
        if self.partition.size(c) < 2 {
            return Err(Error::Precondition(format!("community {c} has a single node")));
        }
        if c == to {
            return Ok(MoveOutcome::rejected(MoveKind::SubExchange, 0.0));
        }
        Ok(self.greedy_sub_exchange(c, to))
    }

    fn greedy_sub_exchange(&mut self, c: usize, to: usize) -> MoveOutcome {
        let moves = self
            .proper_subs(c)
            .into_iter()
            .map(|nodes| Move::SubExchange {
                community: c,
                nodes,
                to,
            })
            .collect();
        match self.best_of(moves) {
            Some((mv, _)) => self.try_greedy(&mv).0,
            None => MoveOutcome::rejected(MoveKind::SubExchange, 0.0),
        }
    }

    // ---- drivers ---------------------------------------------------------------------

    /// Runs the greedy loop until no move improves S; returns accepted moves per kind.
    ///
    /// Each pass visits communities in id order. For every member and every neighbor in
    /// another community it tries a merge, then an exchange (the member into the
    /// neighbor's community, then the neighbor into this one). Afterwards it extracts
    /// nodes, extracts sub-communities and relocates sub-communities, each to exhaustion.
    pub fn stepper(&mut self) -> MoveCounts {
        let mut total = MoveCounts::default();
        loop {
            let mut pass = MoveCounts::default();
            let mut c = 0;
            while c < self.partition.community_count() {
                c = self.neighbor_moves(c, &mut pass);
                while self.extract_any(c) {
                    pass.extract += 1;
                }
                if self.allows_sub_moves(c) {
                    while self.allows_sub_moves(c) && self.greedy_sub_extract(c).accepted {
                        pass.sub_extract += 1;
                    }
                    loop {
                        let mut any = false;
                        let mut d = 0;
                        while d < self.partition.community_count() && self.allows_sub_moves(c) {
                            if d != c && self.greedy_sub_exchange(c, d).accepted {
                                pass.sub_exchange += 1;
                                any = true;
                            }
                            d += 1;
                        }
                        if !any {
                            break;
                        }
                    }
                }
                c += 1;
            }
            total += pass;
            if pass.total() == 0 {
                return total;
            }
        }
    }

    fn allows_sub_moves(&self, c: usize) -> bool {
        let size = self.partition.size(c);
        size >= 2 && !(self.nested && size >= self.graph.node_count())
    }

    /// Merge/exchange phase for community `c`. Returns the community's id afterwards,
    /// which drops by one whenever a lower-numbered community is absorbed.
    fn neighbor_moves(&mut self, mut c: usize, pass: &mut MoveCounts) -> usize {
        let graph = self.graph;
        let members = self.partition.members(c).to_vec();
        for node in members {
            for &nb in graph.neighbors(node) {
                if self.partition.community_of(node) != c {
                    break;
                }
                let d = self.partition.community_of(nb);
                if d == c {
                    continue;
                }
                let (out, removed) = self.try_greedy(&Move::Merge { keep: c, absorb: d });
                if out.accepted {
                    pass.merge += 1;
                    if removed.is_some_and(|r| r < c) {
                        c -= 1;
                    }
                    continue;
                }
                if self.partition.size(c) > 1 && self.try_greedy(&Move::Exchange { node, to: d }).0.accepted {
                    pass.exchange += 1;
                    break;
                }
                if self.partition.size(d) > 1
                    && self.try_greedy(&Move::Exchange { node: nb, to: c }).0.accepted
                {
                    pass.exchange += 1;
                }
            }
        }
        c
    }

    /// One successful extraction from community `c`, trying members in ascending order.
    fn extract_any(&mut self, c: usize) -> bool {
        if self.partition.size(c) < 2 {
            return false;
        }
        let members = self.partition.members(c).to_vec();
        members
            .into_iter()
            .any(|node| self.try_greedy(&Move::Extract { node }).0.accepted)
    }

    /// ΔS of every currently legal move, without changing the state.
    pub fn check_deltas(&self) -> Vec<(Move, f64)> {
        let nc = self.partition.community_count();
        let mut moves = Vec::new();
        for a in 0..nc {
            for b in a + 1..nc {
                moves.push(Move::Merge { keep: a, absorb: b });
            }
        }
        for node in 0..self.graph.node_count() {
            let from = self.partition.community_of(node);
            if self.partition.size(from) < 2 {
                continue;
            }
            moves.extend((0..nc).filter(|&to| to != from).map(|to| Move::Exchange { node, to }));
            moves.push(Move::Extract { node });
        }
        for c in 0..nc {
            if !self.allows_sub_moves(c) {
                continue;
            }
            for nodes in self.proper_subs(c) {
                for to in (0..nc).filter(|&to| to != c) {
                    moves.push(Move::SubExchange {
                        community: c,
                        nodes: nodes.clone(),
                        to,
                    });
                }
                moves.push(Move::SubExtract {
                    community: c,
                    nodes,
                });
            }
        }
        moves
            .into_iter()
            .map(|mv| {
                let d = self.evaluate(&mv) - self.s;
                (mv, d)
            })
            .collect()
    }

    /// Walks through degenerate states: applies exchanges and sub-community relocations
    /// that leave S unchanged, never revisiting a partition. Returns
    /// `(exchanges, sub_exchanges)` performed.
    pub fn shake(&mut self) -> (usize, usize) {
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        seen.insert(self.partition.canonical_labels());
        let mut exchanges = 0;
        let mut sub_exchanges = 0;
        while let Some(mv) = self.next_degenerate_move(&seen) {
            self.commit(&mv);
            seen.insert(self.partition.canonical_labels());
            match mv.kind() {
                MoveKind::Exchange => exchanges += 1,
                _ => sub_exchanges += 1,
            }
        }
        (exchanges, sub_exchanges)
    }

    fn next_degenerate_move(&self, seen: &HashSet<Vec<usize>>) -> Option<Move> {
        let nc = self.partition.community_count();
        let fresh = |nodes: &[usize], to: usize| {
            let mut labels = self.partition.labels().to_vec();
            for &u in nodes {
                labels[u] = to;
            }
            !seen.contains(&canonicalize(&labels, nc))
        };
        for c in 0..nc {
            if self.partition.size(c) < 2 {
                continue;
            }
            for &node in self.partition.members(c) {
                for to in (0..nc).filter(|&to| to != c) {
                    let mv = Move::Exchange { node, to };
                    if (self.evaluate(&mv) - self.s).abs() <= DEGENERACY_TOLERANCE && fresh(&[node], to) {
                        return Some(mv);
                    }
                }
            }
        }
        for c in 0..nc {
            if !self.allows_sub_moves(c) {
                continue;
            }
            for nodes in self.proper_subs(c) {
                for to in (0..nc).filter(|&to| to != c) {
                    if (self.eval(self.relocation_counts(&nodes, c, Target::Existing(to))) - self.s).abs()
                        <= DEGENERACY_TOLERANCE
                        && fresh(&nodes, to)
                    {
                        return Some(Move::SubExchange {
                            community: c,
                            nodes,
                            to,
                        });
                    }
                }
            }
        }
        None
    }

    // ---- annealing -------------------------------------------------------------------

    /// One Monte-Carlo sweep of `K` random move attempts at `temperature`, using the
    /// Metropolis rule. Returns the number of accepted moves.
    pub fn anneal_step(&mut self, temperature: f64) -> Result<usize> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::Domain(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        let mut accepted = 0;
        for _ in 0..self.graph.node_count() {
            let Some(mv) = self.random_move() else {
                continue;
            };
            let delta = self.evaluate(&mv) - self.s;
            if metropolis_accept(delta, temperature, &mut self.rng) {
                self.commit(&mv);
                accepted += 1;
            }
        }
        Ok(accepted)
    }

    /// Community of a random neighbor of `node` outside `c`, else a random other community.
    fn random_target(&mut self, node: usize, c: usize) -> Option<usize> {
        let nc = self.partition.community_count();
        if nc < 2 {
            return None;
        }
        if let Some(&nb) = self.graph.neighbors(node).choose(&mut self.rng) {
            let d = self.partition.community_of(nb);
            if d != c {
                return Some(d);
            }
        }
        let d = self.rng.random_range(0..nc - 1);
        Some(if d >= c { d + 1 } else { d })
    }

    fn random_move(&mut self) -> Option<Move> {
        let nc = self.partition.community_count();
        let kind = *MoveKind::ALL.choose(&mut self.rng).expect("non-empty");
        let c = self.rng.random_range(0..nc);
        let size = self.partition.size(c);
        let node = self.partition.members(c)[self.rng.random_range(0..size)];
        match kind {
            MoveKind::Merge => {
                let d = self.random_target(node, c)?;
                Some(Move::Merge { keep: c, absorb: d })
            }
            MoveKind::Exchange => {
                if size < 2 {
                    return None;
                }
                let to = self.random_target(node, c)?;
                Some(Move::Exchange { node, to })
            }
            MoveKind::Extract => (size >= 2).then_some(Move::Extract { node }),
            MoveKind::SubExtract | MoveKind::SubExchange => {
                if !self.allows_sub_moves(c) {
                    return None;
                }
                let subs = self.proper_subs(c);
                let nodes = subs.choose(&mut self.rng)?.clone();
                if kind == MoveKind::SubExtract {
                    Some(Move::SubExtract {
                        community: c,
                        nodes,
                    })
                } else {
                    let anchor = nodes[self.rng.random_range(0..nodes.len())];
                    let to = self.random_target(anchor, c)?;
                    Some(Move::SubExchange {
                        community: c,
                        nodes,
                        to,
                    })
                }
            }
        }
    }
}

#[inline]
fn contains(sorted: &[usize], v: usize) -> bool {
    if sorted.len() == 1 {
        sorted[0] == v
    } else {
        sorted.binary_search(&v).is_ok()
    }
}

fn canonicalize(labels: &[usize], nc: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; nc];
    let mut next = 0;
    labels
        .iter()
        .map(|&c| {
            if map[c] == usize::MAX {
                map[c] = next;
                next += 1;
            }
            map[c]
        })
        .collect()
}

/// Greedy optimization from singletons, as used by `detect`.
pub fn detect(graph: &Graph, seed: u64) -> SurpriseState<'_> {
    let mut state = SurpriseState::new(graph, seed);
    state.stepper();
    state
}
