//! Node-to-community assignments with dense community ids.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A partition of `0..K` into `Nc` non-empty communities with ids `0..Nc`.
///
/// Member lists are kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assign: Vec<usize>,
    communities: Vec<Vec<usize>>,
}

/// Where a relocated node set ends up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Target {
    Existing(usize),
    New,
}

impl Partition {
    /// Every node alone in its own community.
    pub fn singletons(k: usize) -> Self {
        Partition {
            assign: (0..k).collect(),
            communities: (0..k).map(|u| vec![u]).collect(),
        }
    }

    /// One community holding all `k` nodes.
    pub fn all_in_one(k: usize) -> Self {
        Partition {
            assign: vec![0; k],
            communities: if k == 0 { vec![] } else { vec![(0..k).collect()] },
        }
    }

    /// Builds a partition from arbitrary labels. Ids are made dense preserving label order,
    /// so labels that are already `0..Nc` are kept as-is.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut dense: BTreeMap<usize, usize> = BTreeMap::new();
        for &l in labels {
            dense.entry(l).or_insert(0);
        }
        for (i, v) in dense.values_mut().enumerate() {
            *v = i;
        }
        let assign: Vec<usize> = labels.iter().map(|l| dense[l]).collect();
        let mut communities = vec![Vec::new(); dense.len()];
        for (u, &c) in assign.iter().enumerate() {
            communities[c].push(u);
        }
        Partition {
            assign,
            communities,
        }
    }

    /// Builds a partition from a list of disjoint communities covering `0..k`.
    pub fn from_communities(k: usize, communities: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; k];
        for (c, members) in communities.iter().enumerate() {
            for &u in members {
                if u >= k {
                    return Err(Error::NodeOutOfRange { node: u, k });
                }
                if labels[u] != usize::MAX {
                    return Err(Error::Domain(format!("node {u} listed twice")));
                }
                labels[u] = c;
            }
        }
        if let Some(u) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::Domain(format!("node {u} not assigned")));
        }
        Ok(Partition::from_labels(&labels))
    }

    pub fn node_count(&self) -> usize {
        self.assign.len()
    }

    pub fn community_count(&self) -> usize {
        self.communities.len()
    }

    /// Community id of every node.
    pub fn labels(&self) -> &[usize] {
        &self.assign
    }

    pub fn community_of(&self, u: usize) -> usize {
        self.assign[u]
    }

    /// Sorted members of community `c`.
    pub fn members(&self, c: usize) -> &[usize] {
        &self.communities[c]
    }

    pub fn communities(&self) -> &[Vec<usize>] {
        &self.communities
    }

    pub fn size(&self, c: usize) -> usize {
        self.communities[c].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.communities.iter().map(Vec::len).collect()
    }

    /// `M = Σ c_i (c_i - 1) / 2`, the number of node pairs sharing a community.
    pub fn max_intra_pairs(&self) -> u64 {
        self.communities
            .iter()
            .map(|m| pairs(m.len() as u64))
            .sum()
    }

    /// `ℓ`, the number of edges of `g` whose endpoints share a community.
    pub fn intra_links(&self, g: &Graph) -> Result<u64> {
        self.check_graph(g)?;
        Ok(g
            .edges()
            .filter(|&(u, v)| self.assign[u] == self.assign[v])
            .count() as u64)
    }

    pub(crate) fn check_graph(&self, g: &Graph) -> Result<()> {
        if g.node_count() == self.node_count() {
            Ok(())
        } else {
            Err(Error::SizeMismatch {
                expected: g.node_count(),
                found: self.node_count(),
            })
        }
    }

    /// Labels renumbered by first appearance; equal for partitions identical up to relabeling.
    pub fn canonical_labels(&self) -> Vec<usize> {
        let mut map = vec![usize::MAX; self.communities.len()];
        let mut next = 0;
        self.assign
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

    /// Equality up to relabeling of communities.
    pub fn same_as(&self, other: &Partition) -> bool {
        self.node_count() == other.node_count() && self.canonical_labels() == other.canonical_labels()
    }

    /// Moves `nodes` (all currently in `from`) to `target`. Returns the id of the
    /// community removed because it became empty, if any; ids above it shift down by one.
    pub(crate) fn relocate(&mut self, nodes: &[usize], from: usize, target: Target) -> Option<usize> {
        let dest = match target {
            Target::Existing(d) => d,
            Target::New => {
                self.communities.push(Vec::with_capacity(nodes.len()));
                self.communities.len() - 1
            }
        };
        debug_assert_ne!(dest, from);
        for &u in nodes {
            debug_assert_eq!(self.assign[u], from);
            let src = &mut self.communities[from];
            let pos = src.binary_search(&u).expect("node is a member of its community");
            src.remove(pos);
            let dst = &mut self.communities[dest];
            let pos = dst.binary_search(&u).unwrap_err();
            dst.insert(pos, u);
            self.assign[u] = dest;
        }
        if self.communities[from].is_empty() {
            self.communities.remove(from);
            for c in self.assign.iter_mut() {
                if *c > from {
                    *c -= 1;
                }
            }
            Some(from)
        } else {
            None
        }
    }

    /// Reads one community id per line (line `i` is node `i`); `#` lines are comments.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut labels = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let label = t.parse::<usize>().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("invalid community id {t:?}: {e}"),
            })?;
            labels.push(label);
        }
        if labels.is_empty() {
            return Err(Error::Domain("partition file holds no nodes".into()));
        }
        Ok(Partition::from_labels(&labels))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Partition::read(BufReader::new(File::open(path)?))
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for c in &self.assign {
            writeln!(out, "{c}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Internal consistency: dense ids, sorted non-empty member lists matching `assign`.
    pub fn is_consistent(&self) -> bool {
        let mut seen = 0;
        for (c, members) in self.communities.iter().enumerate() {
            if members.is_empty() || members.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            if members.iter().any(|&u| u >= self.assign.len() || self.assign[u] != c) {
                return false;
            }
            seen += members.len();
        }
        seen == self.assign.len()
    }
}

#[inline]
pub(crate) fn pairs(c: u64) -> u64 {
    c * c.saturating_sub(1) / 2
}
