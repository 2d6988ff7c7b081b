//! Small reference graphs used by tests, examples and the CLI.

use crate::graph::Graph;

/// The 11-node toy network: cliques `{0,1,2,3}` and `{4,5,6,7}` joined by the
/// path `3 - 8 - 9 - 10 - 4`.
pub fn toy_graph() -> Graph {
    let mut edges = Vec::new();
    for base in [0, 4] {
        for i in base..base + 4 {
            for j in i + 1..base + 4 {
                edges.push((i, j));
            }
        }
    }
    edges.extend([(3, 8), (8, 9), (9, 10), (10, 4)]);
    Graph::from_edges(11, edges).expect("toy fixture is a simple graph")
}

/// Disjoint cliques of the given sizes, laid out consecutively.
pub fn isolated_cliques(sizes: &[usize]) -> Graph {
    let k: usize = sizes.iter().sum();
    let mut g = Graph::new(k);
    let mut start = 0;
    for &s in sizes {
        for i in start..start + s {
            for j in i + 1..start + s {
                g.add_edge(i, j).expect("clique nodes are in range");
            }
        }
        start += s;
    }
    g
}

/// Two `m`-cliques joined by a single edge between node `m-1` and node `m`.
pub fn bridged_cliques(m: usize) -> Graph {
    let mut g = isolated_cliques(&[m, m]);
    g.add_edge(m - 1, m).expect("bridge nodes are in range");
    g
}
