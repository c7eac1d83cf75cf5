//! Synthetic follow graphs and retweet cascades: preferential attachment
//! for the network, an independent-cascade process for the diffusion, and
//! planted brokers with boosted early-retweet propensity so downstream
//! classifiers have a learnable signal.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cascade::{Cascade, CascadeSet};
use crate::error::{Error, Result};
use crate::graph::{NodeId, SocialGraph};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub nodes: usize,
    /// Follows added by each arriving node (preferential attachment).
    pub attachment_edges: usize,
    pub cascade_count: usize,
    pub edge_activation_prob: f64,
    /// Nodes given tripled retweet/spread propensity, picked uniformly.
    pub planted_brokers: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            nodes: 2000,
            attachment_edges: 3,
            cascade_count: 500,
            edge_activation_prob: 0.1,
            planted_brokers: 20,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.edge_activation_prob) {
            return Err(Error::InvalidArgument(
                "edge_activation_prob must be in [0, 1]".into(),
            ));
        }
        if self.nodes > 0 && self.nodes < self.attachment_edges + 1 {
            return Err(Error::InvalidArgument(format!(
                "nodes ({}) must be >= attachment_edges + 1 ({})",
                self.nodes,
                self.attachment_edges + 1
            )));
        }
        if self.planted_brokers > self.nodes {
            return Err(Error::InvalidArgument(
                "planted_brokers cannot exceed nodes".into(),
            ));
        }
        Ok(())
    }

    /// The planted broker set: the lowest `planted_brokers` indices after a
    /// seeded shuffle, stable for a given config.
    pub fn broker_set(&self) -> Vec<NodeId> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(0xb20c));
        let mut ids: Vec<u32> = (0..self.nodes as u32).collect();
        ids.shuffle(&mut rng);
        ids.truncate(self.planted_brokers);
        ids.sort_unstable();
        ids.into_iter().map(NodeId).collect()
    }
}

/// Directed preferential attachment: node i follows `attachment_edges`
/// distinct earlier nodes chosen with probability proportional to
/// in-degree + 1. Deterministic per seed.
pub fn gen_graph(cfg: &SynthConfig) -> Result<SocialGraph> {
    cfg.validate()?;
    let n = cfg.nodes;
    let m = cfg.attachment_edges;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut edges: Vec<(u32, u32)> = Vec::new();
    // Urn sampling: each existing node appears in-degree + 1 times, so a
    // uniform draw is a draw proportional to in-degree + 1.
    let mut urn: Vec<u32> = Vec::with_capacity(n * (m + 1));
    if n > 0 {
        urn.push(0);
    }
    for i in 1..n {
        let picks = m.min(i);
        let mut chosen: Vec<u32> = Vec::with_capacity(picks);
        while chosen.len() < picks {
            let target = urn[rng.gen_range(0..urn.len())];
            if !chosen.contains(&target) {
                chosen.push(target);
            }
        }
        urn.push(i as u32);
        for t in chosen {
            edges.push((i as u32, t));
            urn.push(t);
        }
    }
    let labels = (0..n).map(|i| format!("u{i}")).collect();
    SocialGraph::from_edges(n, labels, edges, true)
}

/// Independent-cascade diffusion along information-flow edges from random
/// roots. Activation time = parent time + 1. Planted brokers activate and
/// spread with tripled probability. Cascades draw per-id seeds, so output
/// is deterministic and order-independent.
pub fn gen_cascades(g: &SocialGraph, cfg: &SynthConfig) -> Result<CascadeSet> {
    cfg.validate()?;
    let n = g.node_count();
    if n == 0 {
        return CascadeSet::from_cascades(Vec::new());
    }
    let brokers: Vec<bool> = {
        let mut flags = vec![false; n];
        for b in cfg.broker_set() {
            if b.index() < n {
                flags[b.index()] = true;
            }
        }
        flags
    };
    // Roots drawn proportional to follower count + 1: popular accounts
    // post the content that spreads, which concentrates cascades on the
    // same hubs and gives scores a stable structural signal.
    let root_urn: Vec<u32> = (0..n as u32)
        .flat_map(|u| std::iter::repeat(u).take(g.in_neighbors(NodeId(u)).len() + 1))
        .collect();
    let cascades: Vec<Cascade> = (0..cfg.cascade_count as u64)
        .map(|id| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (id.wrapping_mul(0x9e3779b97f4a7c15)));
            let root = NodeId(root_urn[rng.gen_range(0..root_urn.len())]);
            let root_time: i64 = 0;
            let mut activated = vec![false; n];
            activated[root.index()] = true;
            // Frontier of (node, time); information flows to followers,
            // i.e. along in-edges of the follow graph.
            let mut frontier: Vec<(NodeId, i64)> = vec![(root, root_time)];
            let mut events: Vec<(NodeId, i64)> = Vec::new();
            while let Some((u, t)) = frontier.pop() {
                let spread_boost = if brokers[u.index()] && u != root { 3.0 } else { 1.0 };
                for &f in g.in_neighbors(u) {
                    let f = NodeId(f);
                    if activated[f.index()] {
                        continue;
                    }
                    let receive_boost = if brokers[f.index()] { 3.0 } else { 1.0 };
                    let p = (cfg.edge_activation_prob * spread_boost * receive_boost).min(1.0);
                    if rng.gen::<f64>() < p {
                        activated[f.index()] = true;
                        events.push((f, t + 1));
                        frontier.push((f, t + 1));
                    }
                }
            }
            events.sort_by_key(|&(u, t)| (t, u.0));
            Cascade::new(id, root, root_time, events)
        })
        .collect::<Result<_>>()?;
    CascadeSet::from_cascades(cascades)
}
