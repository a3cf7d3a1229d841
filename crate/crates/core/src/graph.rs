//! Undirected simple graphs, node partitions and the cluster-editing cost.
//!
//! Nodes are dense ids `0..n`. Adjacency is kept in ordered sets so that every
//! iteration order in the crate is deterministic.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph over nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<BTreeSet<usize>>,
}

impl Graph {
    /// Edgeless graph with `n` isolated nodes.
    pub fn new(n: usize) -> Self {
        Self {
            adjacency: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::new(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Inserts the undirected edge `u–v`. Returns `false` if it was already present.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            return Err(Error::InvalidArgument(format!("self-loop on node {u}")));
        }
        let fresh = self.adjacency[u].insert(v);
        self.adjacency[v].insert(u);
        Ok(fresh)
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        if u >= self.n() || v >= self.n() {
            return false;
        }
        let had = self.adjacency[u].remove(&v);
        self.adjacency[v].remove(&u);
        had
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &BTreeSet<usize> {
        &self.adjacency[u]
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adjacency[u].contains(&v)
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.range(u + 1..).map(move |&v| (u, v)))
    }

    fn check_node(&self, u: usize) -> Result<()> {
        if u >= self.n() {
            return Err(Error::InvalidArgument(format!(
                "node {u} out of range for graph with {} nodes",
                self.n()
            )));
        }
        Ok(())
    }

    /// `|N(u) ∩ N(v)|`.
    pub fn common_neighbor_count(&self, u: usize, v: usize) -> Result<usize> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            return Err(Error::InvalidArgument(format!(
                "common neighbours of a node with itself ({u})"
            )));
        }
        let (small, large) = if self.degree(u) <= self.degree(v) {
            (&self.adjacency[u], &self.adjacency[v])
        } else {
            (&self.adjacency[v], &self.adjacency[u])
        };
        Ok(small.iter().filter(|w| large.contains(w)).count())
    }

    /// Connected components, each sorted ascending, ordered by their minimum node.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Subgraph induced by `nodes`; node `nodes[i]` becomes local id `i`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut local = BTreeMap::new();
        for (i, &u) in nodes.iter().enumerate() {
            self.check_node(u)?;
            if local.insert(u, i).is_some() {
                return Err(Error::InvalidArgument(format!("node {u} listed twice")));
            }
        }
        let mut sub = Graph::new(nodes.len());
        for (i, &u) in nodes.iter().enumerate() {
            for v in &self.adjacency[u] {
                if let Some(&j) = local.get(v) {
                    sub.adjacency[i].insert(j);
                }
            }
        }
        Ok(sub)
    }

    /// Serializes as an edge list. A `# nodes: n` header preserves trailing
    /// isolated nodes across a round trip.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# nodes: {}", self.n());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// Parses a whitespace-separated edge list.
///
/// Nodes are `0..=max_id`; ids that never appear become isolated nodes. Lines
/// starting with `#` are comments, except that `# nodes: n` raises the node
/// count to at least `n`.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut n = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(count) = comment.trim().strip_prefix("nodes:") {
                n = n.max(count.trim().parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad node count {:?}", count.trim()),
                })?);
            }
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut next_id = |what: &str| -> Result<usize> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("missing {what} node id"),
            })?;
            tok.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("invalid node id {tok:?}"),
            })
        };
        let u = next_id("first")?;
        let v = next_id("second")?;
        if let Some(extra) = tokens.next() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("unexpected token {extra:?}"),
            });
        }
        if u == v {
            return Err(Error::SelfLoop {
                line: line_no,
                node: u,
            });
        }
        n = n.max(u.max(v) + 1);
        edges.push((u, v));
    }
    Graph::from_edges(n, edges)
}

/// Original labels for a compacted graph: `labels[i]` is the id that node `i`
/// carried in the input file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub labels: Vec<u64>,
}

/// Like [`parse_edge_list`] but re-indexes the ids that occur to `0..n` in
/// ascending order of their original value.
pub fn parse_edge_list_compact(text: &str) -> Result<(Graph, LabelMap)> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ids: Vec<u64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<u64>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("invalid node id {t:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if ids.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 2 node ids, found {}", ids.len()),
            });
        }
        if ids[0] == ids[1] {
            return Err(Error::SelfLoop {
                line: line_no,
                node: ids[0] as usize,
            });
        }
        pairs.push((ids[0], ids[1]));
    }
    let labels: Vec<u64> = pairs
        .iter()
        .flat_map(|&(u, v)| [u, v])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<u64, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let g = Graph::from_edges(
        labels.len(),
        pairs.into_iter().map(|(u, v)| (index[&u], index[&v])),
    )?;
    Ok((g, LabelMap { labels }))
}

/// Disjoint non-empty clusters covering `0..n`, stored in canonical form:
/// ids ascending within each cluster, clusters ordered by their minimum id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Partition {
    clusters: Vec<Vec<usize>>,
}

impl Partition {
    /// Validates and canonicalizes `clusters` as a partition of `0..n`.
    pub fn new(n: usize, clusters: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for c in &clusters {
            if c.is_empty() {
                return Err(Error::InvalidPartition("empty cluster".into()));
            }
            for &u in c {
                if u >= n {
                    return Err(Error::InvalidPartition(format!(
                        "node {u} out of range for {n} nodes"
                    )));
                }
                if std::mem::replace(&mut seen[u], true) {
                    return Err(Error::InvalidPartition(format!(
                        "node {u} appears more than once"
                    )));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidPartition(format!(
                "node {missing} not covered"
            )));
        }
        Ok(Self::canonical(clusters))
    }

    fn canonical(mut clusters: Vec<Vec<usize>>) -> Self {
        for c in &mut clusters {
            c.sort_unstable();
        }
        clusters.sort_unstable_by_key(|c| c[0]);
        Self { clusters }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            clusters: (0..n).map(|u| vec![u]).collect(),
        }
    }

    /// The one-cluster partition `{V}` (empty for `n = 0`).
    pub fn whole(n: usize) -> Self {
        if n == 0 {
            return Self { clusters: vec![] };
        }
        Self {
            clusters: vec![(0..n).collect()],
        }
    }

    /// Builds a partition from per-node labels; clusters are the label classes.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (u, &l) in labels.iter().enumerate() {
            by_label.entry(l).or_default().push(u);
        }
        Self::canonical(by_label.into_values().collect())
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Number of nodes covered.
    pub fn node_count(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    /// `labels[u]` = index of the cluster containing `u`.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![usize::MAX; self.node_count()];
        for (i, c) in self.clusters.iter().enumerate() {
            for &u in c {
                labels[u] = i;
            }
        }
        labels
    }

    /// Replaces the clusters named by `group` with their union.
    pub fn merge_clusters(&self, group: &[usize]) -> Result<Partition> {
        self.merge_groups(std::slice::from_ref(&group.to_vec()))
    }

    /// Applies several disjoint merges at once. Indices refer to `self`.
    pub fn merge_groups(&self, groups: &[Vec<usize>]) -> Result<Partition> {
        let m = self.clusters.len();
        let mut owner: Vec<Option<usize>> = vec![None; m];
        for (gi, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::InvalidArgument("empty merge group".into()));
            }
            for &ci in group {
                if ci >= m {
                    return Err(Error::InvalidArgument(format!(
                        "cluster index {ci} out of range ({m} clusters)"
                    )));
                }
                if owner[ci].replace(gi).is_some() {
                    return Err(Error::InvalidArgument(format!(
                        "cluster index {ci} named more than once"
                    )));
                }
            }
        }
        let mut merged: Vec<Vec<usize>> = vec![Vec::new(); groups.len()];
        let mut out = Vec::with_capacity(m);
        for (ci, c) in self.clusters.iter().enumerate() {
            match owner[ci] {
                Some(gi) => merged[gi].extend_from_slice(c),
                None => out.push(c.clone()),
            }
        }
        out.extend(merged);
        Ok(Self::canonical(out))
    }

    /// Maps local node ids through `nodes` (local `i` ↦ `nodes[i]`).
    pub fn relabel(&self, nodes: &[usize]) -> Vec<Vec<usize>> {
        self.clusters
            .iter()
            .map(|c| c.iter().map(|&u| nodes[u]).collect())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("partition serializes")
    }

    /// Parses `{"clusters": [[...], ...]}` and validates it against `n` nodes.
    pub fn from_json(text: &str, n: usize) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            clusters: Vec<Vec<usize>>,
        }
        let raw: Raw = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        Self::new(n, raw.clusters)
    }
}

/// Number of edge insertions plus deletions that turn `g` into the disjoint
/// union of cliques induced by `p`.
pub fn cluster_editing_cost(g: &Graph, p: &Partition) -> Result<u64> {
    if p.node_count() != g.n() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} nodes, graph has {}",
            p.node_count(),
            g.n()
        )));
    }
    let labels = p.labels();
    let internal = g.edges().filter(|&(u, v)| labels[u] == labels[v]).count() as u64;
    let pairs: u64 = p
        .clusters()
        .iter()
        .map(|c| {
            let s = c.len() as u64;
            s * (s - 1) / 2
        })
        .sum();
    let missing = pairs - internal;
    let cut = g.edge_count() as u64 - internal;
    Ok(missing + cut)
}
