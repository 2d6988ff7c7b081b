//! Partition comparison and quality measures.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{domain, Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;

fn check_same_len(a: &Partition, b: &Partition) -> Result<()> {
    if a.node_count() == b.node_count() {
        Ok(())
    } else {
        Err(Error::SizeMismatch {
            expected: a.node_count(),
            found: b.node_count(),
        })
    }
}

/// Joint counts `n_xy` of nodes in community `x` of `a` and `y` of `b`.
fn contingency(a: &Partition, b: &Partition) -> BTreeMap<(usize, usize), usize> {
    let mut joint = BTreeMap::new();
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        *joint.entry((x, y)).or_insert(0) += 1;
    }
    joint
}

fn entropy(sizes: impl IntoIterator<Item = usize>, total: f64) -> f64 {
    sizes
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Variation of information `H(a) + H(b) - 2 I(a; b)` in nats, optionally divided by `ln K`.
pub fn vi(a: &Partition, b: &Partition, normalized: bool) -> Result<f64> {
    check_same_len(a, b)?;
    let k = a.node_count();
    if k == 0 {
        return domain("vi: empty partitions");
    }
    let total = k as f64;
    let sa = a.sizes();
    let sb = b.sizes();
    // VI = -Σ p_xy [ln(p_xy/p_x) + ln(p_xy/p_y)], exactly zero for equal partitions.
    let v: f64 = contingency(a, b)
        .into_iter()
        .map(|((x, y), nxy)| {
            let nxy = nxy as f64;
            nxy / total * ((sa[x] as f64 / nxy).ln() + (sb[y] as f64 / nxy).ln())
        })
        .sum();
    if !normalized {
        Ok(v)
    } else if k == 1 {
        Ok(0.0)
    } else {
        Ok(v / total.ln())
    }
}

/// Pielou evenness `H / ln N` of a community-size list; 0 for a single community.
pub fn pielou(sizes: &[usize]) -> Result<f64> {
    if sizes.is_empty() {
        return domain("pielou: empty size list");
    }
    if sizes.contains(&0) {
        return domain("pielou: community sizes must be positive");
    }
    if sizes.len() == 1 {
        return Ok(0.0);
    }
    let total: usize = sizes.iter().sum();
    let h = entropy(sizes.iter().copied(), total as f64);
    Ok((h / (sizes.len() as f64).ln()).clamp(0.0, 1.0))
}

/// Newman modularity `Σ_c [ℓ_c/n - (d_c/2n)²]`.
pub fn modularity(g: &Graph, p: &Partition) -> Result<f64> {
    p.check_graph(g)?;
    let n = g.link_count();
    if n == 0 {
        return domain("modularity: graph has no links");
    }
    let nc = p.community_count();
    let mut internal = vec![0usize; nc];
    let mut degree = vec![0usize; nc];
    for u in 0..g.node_count() {
        degree[p.community_of(u)] += g.degree(u);
    }
    for (u, v) in g.edges() {
        if p.community_of(u) == p.community_of(v) {
            internal[p.community_of(u)] += 1;
        }
    }
    let n = n as f64;
    Ok(internal
        .iter()
        .zip(&degree)
        .map(|(&l, &d)| l as f64 / n - (d as f64 / (2.0 * n)).powi(2))
        .sum())
}

/// How a found partition preserves, splits and merges the communities of an initial one.
/// All fields are percentages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FragmentationReport {
    /// Nodes lying in a fragment of their initial community.
    pub kept_pct: f64,
    /// Initial communities with a fragment holding more than half their nodes.
    pub comms_pct: f64,
    pub dispersed_pct: f64,
    /// Fragments relative to the initial community count.
    pub fragments_pct: f64,
    /// Fragments sharing a found community with an earlier fragment, relative to the
    /// initial community count.
    pub joined_pct: f64,
    /// Initial communities without any fragment.
    pub obliterated_pct: f64,
    pub nc_ratio_pct: f64,
}

impl FragmentationReport {
    pub const CSV_HEADER: &'static str =
        "kept,comms,dispersed,fragments,joined,obliterated,nc_ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.2},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2}",
            self.kept_pct,
            self.comms_pct,
            self.dispersed_pct,
            self.fragments_pct,
            self.joined_pct,
            self.obliterated_pct,
            self.nc_ratio_pct
        )
    }
}

impl fmt::Display for FragmentationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Kept {:.2} ({:.2}) Dispersed {:.2} Fragments {:.2} ({:.2}) Obliterated {:.2} ({:.2})",
            self.kept_pct,
            self.comms_pct,
            self.dispersed_pct,
            self.fragments_pct,
            self.joined_pct,
            self.obliterated_pct,
            self.nc_ratio_pct
        )
    }
}

/// Classifies every block (initial community ∩ found community).
///
/// A block is a fragment when it holds at least the average share of its found
/// community, i.e. `|block| >= |found| / (initial communities present in found)`.
/// Nodes in fragments are kept, all others dispersed. A fragment holding more than
/// half of its initial community preserves that community.
pub fn fragmentation(initial: &Partition, found: &Partition) -> Result<FragmentationReport> {
    check_same_len(initial, found)?;
    let k = initial.node_count();
    if k == 0 {
        return domain("fragmentation: empty partitions");
    }
    let nc0 = initial.community_count();
    let joint = contingency(initial, found);

    let mut present = vec![0usize; found.community_count()];
    for &(_, f) in joint.keys() {
        present[f] += 1;
    }

    let mut kept = 0usize;
    let mut fragments_in = vec![0usize; found.community_count()];
    let mut has_fragment = vec![false; nc0];
    let mut preserved = vec![false; nc0];
    for (&(i, f), &count) in &joint {
        if count * present[f] >= found.size(f) {
            kept += count;
            fragments_in[f] += 1;
            has_fragment[i] = true;
            if 2 * count > initial.size(i) {
                preserved[i] = true;
            }
        }
    }
    let fragments: usize = fragments_in.iter().sum();
    let joined: usize = fragments_in.iter().map(|&x| x.saturating_sub(1)).sum();
    let obliterated = has_fragment.iter().filter(|&&h| !h).count();
    let comms = preserved.iter().filter(|&&p| p).count();

    let pct_nodes = |x: usize| 100.0 * x as f64 / k as f64;
    let pct_comms = |x: usize| 100.0 * x as f64 / nc0 as f64;
    Ok(FragmentationReport {
        kept_pct: pct_nodes(kept),
        comms_pct: pct_comms(comms),
        dispersed_pct: pct_nodes(k - kept),
        fragments_pct: pct_comms(fragments),
        joined_pct: pct_comms(joined),
        obliterated_pct: pct_comms(obliterated),
        nc_ratio_pct: pct_comms(found.community_count()),
    })
}
