//! Immutable directed follow graph in compressed sparse row form.
//!
//! Edge `(u, v)` means "u follows v". Both the follow orientation and its
//! transpose are materialized so downstream kernels can iterate in- and
//! out-neighbors at the same cost.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// Dense node index, bijective with the external string labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One CSR adjacency: `offsets` has length `n + 1`, targets of node `u`
/// live in `targets[offsets[u]..offsets[u + 1]]`, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Csr {
    fn from_edges(node_count: usize, edges: &[(u32, u32)], transpose: bool) -> Self {
        let mut degree = vec![0usize; node_count];
        for &(u, v) in edges {
            let src = if transpose { v } else { u };
            degree[src as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        let mut acc = 0usize;
        offsets.push(0);
        for d in &degree {
            acc += d;
            offsets.push(acc);
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0u32; edges.len()];
        for &(u, v) in edges {
            let (src, dst) = if transpose { (v, u) } else { (u, v) };
            targets[cursor[src as usize]] = dst;
            cursor[src as usize] += 1;
        }
        for u in 0..node_count {
            targets[offsets[u]..offsets[u + 1]].sort_unstable();
        }
        Csr { offsets, targets }
    }

    #[inline]
    fn neighbors(&self, u: NodeId) -> &[u32] {
        &self.targets[self.offsets[u.index()]..self.offsets[u.index() + 1]]
    }
}

/// Immutable directed graph with out- and in-adjacency views and a
/// label map. Frozen after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct SocialGraph {
    out_adj: Csr,
    in_adj: Csr,
    labels: Vec<String>,
    label_index: HashMap<String, u32>,
    edge_count: usize,
}

impl SocialGraph {
    /// Builds a graph from dense-index edges. Self-loops and duplicates are
    /// dropped when `dedup` is true and rejected otherwise.
    pub fn from_edges(
        node_count: usize,
        labels: Vec<String>,
        mut edges: Vec<(u32, u32)>,
        dedup: bool,
    ) -> Result<Self> {
        debug_assert_eq!(labels.len(), node_count);
        for &(u, v) in &edges {
            if u as usize >= node_count || v as usize >= node_count {
                return Err(Error::Validation(format!(
                    "edge ({u}, {v}) references a node outside 0..{node_count}"
                )));
            }
        }
        if dedup {
            edges.retain(|&(u, v)| u != v);
            edges.sort_unstable();
            edges.dedup();
        } else {
            if let Some(&(u, _)) = edges.iter().find(|&&(u, v)| u == v) {
                return Err(Error::Validation(format!(
                    "self-loop on node {} ({})",
                    u, labels[u as usize]
                )));
            }
            let mut sorted = edges.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Validation("duplicate edge in input".into()));
            }
        }
        let out_adj = Csr::from_edges(node_count, &edges, false);
        let in_adj = Csr::from_edges(node_count, &edges, true);
        let edge_count = edges.len();
        let label_index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as u32))
            .collect();
        Ok(SocialGraph {
            out_adj,
            in_adj,
            labels,
            label_index,
            edge_count,
        })
    }

    /// Parses an edge-list file: one `follower<TAB or ,>followee` pair per
    /// line, `#`-prefixed lines ignored. NodeIds are assigned in
    /// first-appearance order, so identical files load identically.
    pub fn load_edge_list(path: impl AsRef<Path>, dedup: bool) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut labels: Vec<String> = Vec::new();
        let mut label_index: HashMap<String, u32> = HashMap::new();
        let mut edges: Vec<(u32, u32)> = Vec::new();
        let intern = |s: &str, labels: &mut Vec<String>, idx: &mut HashMap<String, u32>| {
            if let Some(&i) = idx.get(s) {
                i
            } else {
                let i = labels.len() as u32;
                labels.push(s.to_string());
                idx.insert(s.to_string(), i);
                i
            }
        };
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut parts = trimmed.splitn(2, ['\t', ',']);
            let follower = parts.next().unwrap_or("").trim();
            let followee = parts.next().map(str::trim).unwrap_or("");
            if follower.is_empty() || followee.is_empty() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected `follower<TAB or ,>followee`, got {trimmed:?}"),
                });
            }
            let u = intern(follower, &mut labels, &mut label_index);
            let v = intern(followee, &mut labels, &mut label_index);
            edges.push((u, v));
        }
        let node_count = labels.len();
        SocialGraph::from_edges(node_count, labels, edges, dedup)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.labels.len() as u32).map(NodeId)
    }

    /// Nodes this node follows.
    #[inline]
    pub fn out_neighbors(&self, u: NodeId) -> &[u32] {
        self.out_adj.neighbors(u)
    }

    /// Followers of this node.
    #[inline]
    pub fn in_neighbors(&self, u: NodeId) -> &[u32] {
        self.in_adj.neighbors(u)
    }

    #[inline]
    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_adj.neighbors(u).len()
    }

    #[inline]
    pub fn in_degree(&self, u: NodeId) -> usize {
        self.in_adj.neighbors(u).len()
    }

    pub fn label(&self, u: NodeId) -> &str {
        &self.labels[u.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn resolve(&self, label: &str) -> Option<NodeId> {
        self.label_index.get(label).copied().map(NodeId)
    }

    /// Edge-reversed view: content flows followee -> follower. Applying
    /// twice yields a graph equal to the input.
    pub fn information_flow_view(&self) -> SocialGraph {
        SocialGraph {
            out_adj: self.in_adj.clone(),
            in_adj: self.out_adj.clone(),
            labels: self.labels.clone(),
            label_index: self.label_index.clone(),
            edge_count: self.edge_count,
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes().flat_map(move |u| {
            self.out_neighbors(u)
                .iter()
                .map(move |&v| (u, NodeId(v)))
        })
    }
}

impl PartialEq for SocialGraph {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.out_adj == other.out_adj
    }
}
