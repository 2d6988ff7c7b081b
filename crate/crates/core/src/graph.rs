//! Undirected simple graphs with dense `0..K` node ids.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Undirected simple graph. Neighbor lists are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    n_links: usize,
}

impl Graph {
    /// Edgeless graph on `k` nodes.
    pub fn new(k: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); k],
            n_links: 0,
        }
    }

    /// Builds a graph from an edge iterator. Duplicates and reversed pairs are merged.
    pub fn from_edges<I>(k: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::new(k);
        for (u, v) in edges {
            if u == v {
                return Err(Error::SelfLoop { line: 0, node: u });
            }
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Node count `K`.
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Link count `n`.
    pub fn link_count(&self) -> usize {
        self.n_links
    }

    /// `F = K(K-1)/2`, the number of links of a clique on all nodes.
    pub fn max_links(&self) -> u64 {
        let k = self.adj.len() as u64;
        k * k.saturating_sub(1) / 2
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    fn check(&self, u: usize) -> Result<()> {
        if u < self.adj.len() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node: u,
                k: self.adj.len(),
            })
        }
    }

    /// Adds `{u, v}`; returns `false` if it was already present.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(Error::SelfLoop { line: 0, node: u });
        }
        match self.adj[u].binary_search(&v) {
            Ok(_) => Ok(false),
            Err(pos) => {
                self.adj[u].insert(pos, v);
                let pos = self.adj[v].binary_search(&u).unwrap_err();
                self.adj[v].insert(pos, u);
                self.n_links += 1;
                Ok(true)
            }
        }
    }

    /// Removes `{u, v}`; returns `false` if it was absent.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        self.check(u)?;
        self.check(v)?;
        match self.adj[u].binary_search(&v) {
            Ok(pos) => {
                self.adj[u].remove(pos);
                let pos = self.adj[v].binary_search(&u).expect("adjacency is symmetric");
                self.adj[v].remove(pos);
                self.n_links -= 1;
                Ok(true)
            }
            Err(_) => Ok(false),
        }
    }

    /// Whether `{u, v}` is an edge. A node is never connected to itself.
    pub fn connected(&self, u: usize, v: usize) -> Result<bool> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.has_edge(u, v))
    }

    #[inline]
    pub(crate) fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() {
            (u, v)
        } else {
            (v, u)
        };
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Counts edges with both endpoints in `nodes` (internal) and with exactly one (external).
    pub fn links_in(&self, nodes: &[usize]) -> Result<(usize, usize)> {
        let mut inside = vec![false; self.adj.len()];
        for &u in nodes {
            self.check(u)?;
            inside[u] = true;
        }
        let mut twice_internal = 0;
        let mut external = 0;
        for u in (0..self.adj.len()).filter(|&u| inside[u]) {
            for &v in &self.adj[u] {
                if inside[v] {
                    twice_internal += 1;
                } else {
                    external += 1;
                }
            }
        }
        Ok((twice_internal / 2, external))
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Subgraph induced by `nodes`; node `i` of the result is `nodes[i]`.
    pub fn induced(&self, nodes: &[usize]) -> Graph {
        let mut local = vec![usize::MAX; self.adj.len()];
        for (i, &u) in nodes.iter().enumerate() {
            local[u] = i;
        }
        let mut adj = vec![Vec::new(); nodes.len()];
        let mut n_links = 0;
        for (i, &u) in nodes.iter().enumerate() {
            for &v in &self.adj[u] {
                let j = local[v];
                if j != usize::MAX {
                    adj[i].push(j);
                    if j > i {
                        n_links += 1;
                    }
                }
            }
            adj[i].sort_unstable();
        }
        Graph { adj, n_links }
    }

    /// Parses the edge-list format: two integers per line, `#` starts a comment line.
    /// A `# nodes: K` header fixes the node count so trailing isolated nodes survive a round trip.
    pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut edges = Vec::new();
        let mut declared: Option<usize> = None;
        let mut max_id: Option<usize> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(k) = comment.trim().strip_prefix("nodes:") {
                    let k = k.trim().parse::<usize>().map_err(|e| Error::Parse {
                        line: lineno,
                        msg: format!("bad node count header: {e}"),
                    })?;
                    declared = Some(k);
                }
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let mut next = |what: &str| -> Result<usize> {
                let tok = fields.next().ok_or_else(|| Error::Parse {
                    line: lineno,
                    msg: format!("missing {what} node"),
                })?;
                tok.parse::<usize>().map_err(|e| Error::Parse {
                    line: lineno,
                    msg: format!("invalid node id {tok:?}: {e}"),
                })
            };
            let u = next("first")?;
            let v = next("second")?;
            if fields.next().is_some() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected exactly two node ids".into(),
                });
            }
            if u == v {
                return Err(Error::SelfLoop {
                    line: lineno,
                    node: u,
                });
            }
            max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
            edges.push((u, v));
        }
        let from_edges = max_id.map_or(0, |m| m + 1);
        let k = match declared {
            Some(k) if k < from_edges => {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("header declares {k} nodes but node {} appears", from_edges - 1),
                })
            }
            Some(k) => k,
            None => from_edges,
        };
        if k == 0 {
            return Err(Error::Domain("edge list defines no nodes".into()));
        }
        Graph::from_edges(k, edges)
    }

    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path)?;
        Graph::read_edge_list(BufReader::new(file))
    }

    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# nodes: {}", self.node_count())?;
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_edge_list(&mut out)?;
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy_graph;

    fn parse(s: &str) -> Result<Graph> {
        Graph::read_edge_list(s.as_bytes())
    }

    #[test]
    fn minimal_path() {
        let g = parse("0 1\n1 2").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.link_count(), 2);
        assert_eq!(g.max_links(), 3);
    }

    #[test]
    fn duplicates_merge() {
        let g = parse("0 1\n1 0\n0 1").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.link_count(), 1);
    }

    #[test]
    fn comments_and_blank_lines() {
        let g = parse("# a comment\n\n0 3\n# another\n").unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.link_count(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("0 1\n1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse("0 1\n2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("0 1 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("-1 2\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn self_loop_rejected() {
        match parse("0 1\n\n2 2\n") {
            Err(Error::SelfLoop { line, node }) => {
                assert_eq!(line, 3);
                assert_eq!(node, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn toy_fixture_counts() {
        let g = toy_graph();
        assert_eq!(g.node_count(), 11);
        assert_eq!(g.link_count(), 16);
        assert_eq!(g.max_links(), 55);
    }

    #[test]
    fn connected_queries() {
        let g = toy_graph();
        assert!(g.connected(0, 2).unwrap());
        assert!(g.connected(5, 7).unwrap());
        assert!(!g.connected(3, 3).unwrap());
        assert!(!g.connected(0, 5).unwrap());
        assert!(matches!(
            g.connected(0, 11),
            Err(Error::NodeOutOfRange { node: 11, k: 11 })
        ));
        let p = parse("0 1\n1 2").unwrap();
        assert!(!p.connected(0, 2).unwrap());
    }

    #[test]
    fn links_in_examples() {
        let g = toy_graph();
        assert_eq!(g.links_in(&[0, 1, 2, 3]).unwrap(), (6, 1));
        assert_eq!(g.links_in(&[]).unwrap(), (0, 0));
        let all: Vec<usize> = (0..11).collect();
        assert_eq!(g.links_in(&all).unwrap(), (16, 0));
        assert!(g.links_in(&[0, 12]).is_err());
    }

    #[test]
    fn header_keeps_trailing_isolated_nodes() {
        let mut g = Graph::new(6);
        g.add_edge(0, 1).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let back = Graph::read_edge_list(buf.as_slice()).unwrap();
        assert_eq!(back, g);
        assert!(parse("# nodes: 2\n0 4\n").is_err());
    }

    #[test]
    fn induced_subgraph() {
        let g = toy_graph();
        let sub = g.induced(&[3, 8, 9, 0]);
        assert_eq!(sub.node_count(), 4);
        // 3-8, 8-9, 3-0
        assert_eq!(sub.link_count(), 3);
        assert!(sub.connected(0, 1).unwrap());
        assert!(sub.connected(0, 3).unwrap());
        assert!(!sub.connected(2, 3).unwrap());
    }

    #[test]
    fn add_remove_edge() {
        let mut g = Graph::new(3);
        assert!(g.add_edge(0, 2).unwrap());
        assert!(!g.add_edge(2, 0).unwrap());
        assert_eq!(g.link_count(), 1);
        assert!(g.remove_edge(2, 0).unwrap());
        assert!(!g.remove_edge(0, 2).unwrap());
        assert_eq!(g.link_count(), 0);
        assert!(g.add_edge(1, 1).is_err());
    }
}
