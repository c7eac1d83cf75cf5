//! Independent oracles and corpus generators shared by the integration
//! tests. Everything here is written naively (hash sets, dense matrices,
//! explicit path enumeration) so it cannot share bugs with the optimized
//! library implementations.

#![allow(dead_code)]

use std::collections::HashSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use brokers_core::cascade::{Cascade, CascadeSet};
use brokers_core::graph::{NodeId, SocialGraph};

// ---------------------------------------------------------------------
// Corpus generators
// ---------------------------------------------------------------------

/// Random directed graph on `n` nodes with ~`density` edge probability.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SocialGraph {
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in 0..n as u32 {
            if u != v && rng.gen::<f64>() < density {
                edges.push((u, v));
            }
        }
    }
    let labels = (0..n).map(|i| format!("n{i}")).collect();
    SocialGraph::from_edges(n, labels, edges, true).unwrap()
}

/// Random cascade corpus: up to `max_cascades` cascades over `users`
/// users, random roots, random distinct participants, random times.
pub fn random_corpus(rng: &mut ChaCha8Rng, users: usize, max_cascades: usize) -> CascadeSet {
    let count = rng.gen_range(1..=max_cascades);
    let cascades = (0..count as u64)
        .map(|id| {
            let root = NodeId(rng.gen_range(0..users as u32));
            let root_time = rng.gen_range(0..100i64);
            let size = rng.gen_range(0..users.min(20));
            let mut pool: Vec<u32> = (0..users as u32).filter(|&u| u != root.0).collect();
            pool.shuffle(rng);
            let events = pool[..size.min(pool.len())]
                .iter()
                .map(|&u| (NodeId(u), root_time + rng.gen_range(0..50i64)))
                .collect();
            Cascade::new(id, root, root_time, events).unwrap()
        })
        .collect();
    CascadeSet::from_cascades(cascades).unwrap()
}

// ---------------------------------------------------------------------
// Influence-score oracles (hash-set unions, straight from the formulas)
// ---------------------------------------------------------------------

/// S_u = |union over u's cascades of their retweeter sets|.
pub fn source_scores_oracle(d: &CascadeSet, node_count: usize) -> Vec<u64> {
    (0..node_count)
        .map(|u| {
            let u = NodeId(u as u32);
            let mut seen: HashSet<NodeId> = HashSet::new();
            for c in &d.cascades {
                if c.root == u {
                    for &(v, _) in &c.events {
                        seen.insert(v);
                    }
                }
            }
            seen.len() as u64
        })
        .collect()
}

/// B_u = |union over all cascades of users retweeting strictly after u|.
pub fn broker_scores_oracle(d: &CascadeSet, node_count: usize) -> Vec<u64> {
    (0..node_count)
        .map(|u| {
            let u = NodeId(u as u32);
            let mut seen: HashSet<NodeId> = HashSet::new();
            for c in &d.cascades {
                let Some(tu) = c.events.iter().find(|&&(v, _)| v == u).map(|&(_, t)| t) else {
                    continue;
                };
                for &(v, t) in &c.events {
                    if v != u && t > tu {
                        seen.insert(v);
                    }
                }
            }
            seen.len() as u64
        })
        .collect()
}

// ---------------------------------------------------------------------
// Centrality oracles
// ---------------------------------------------------------------------

/// All-pairs BFS distance matrix; `usize::MAX` = unreachable.
pub fn bfs_distances(g: &SocialGraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    (0..n)
        .map(|s| {
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in g.out_neighbors(NodeId(u as u32)) {
                    if dist[v as usize] == usize::MAX {
                        dist[v as usize] = dist[u] + 1;
                        queue.push_back(v as usize);
                    }
                }
            }
            dist
        })
        .collect()
}

/// Harmonic closeness from the BFS distance matrix.
pub fn closeness_oracle(g: &SocialGraph) -> Vec<f64> {
    let dist = bfs_distances(g);
    let n = g.node_count();
    (0..n)
        .map(|s| {
            (0..n)
                .filter(|&t| t != s && dist[s][t] != usize::MAX)
                .map(|t| 1.0 / dist[s][t] as f64)
                .sum()
        })
        .collect()
}

/// Enumerates every shortest s→t path explicitly and counts interior
/// visits per node. Exponential; only for tiny graphs.
pub fn betweenness_oracle(g: &SocialGraph) -> Vec<f64> {
    let n = g.node_count();
    let dist = bfs_distances(g);
    let mut score = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t || dist[s][t] == usize::MAX {
                continue;
            }
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![vec![s]];
            while let Some(path) = stack.pop() {
                let u = *path.last().unwrap();
                if u == t {
                    paths.push(path);
                    continue;
                }
                for &v in g.out_neighbors(NodeId(u as u32)) {
                    let v = v as usize;
                    // Extend only along shortest-path edges toward t.
                    if dist[s][v] == path.len() && dist[v][t] != usize::MAX
                        && dist[s][v] + dist[v][t] == dist[s][t]
                    {
                        let mut next = path.clone();
                        next.push(v);
                        stack.push(next);
                    }
                }
            }
            let total = paths.len() as f64;
            for path in &paths {
                for &v in &path[1..path.len() - 1] {
                    score[v] += 1.0 / total;
                }
            }
        }
    }
    score
}

/// Dense power iteration on the full Google matrix with dangling-node
/// redistribution, run to near machine precision.
pub fn pagerank_oracle(g: &SocialGraph, damping: f64) -> Vec<f64> {
    let n = g.node_count();
    let mut rank = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let mut next = vec![(1.0 - damping) / n as f64; n];
        let mut dangling = 0.0;
        for u in 0..n {
            let out = g.out_neighbors(NodeId(u as u32));
            if out.is_empty() {
                dangling += rank[u];
            } else {
                let share = damping * rank[u] / out.len() as f64;
                for &v in out {
                    next[v as usize] += share;
                }
            }
        }
        for x in &mut next {
            *x += damping * dangling / n as f64;
        }
        let delta: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        rank = next;
        if delta < 1e-14 {
            break;
        }
    }
    rank
}

/// Naive k-core on the undirected projection: repeatedly delete every
/// node of degree < k until a fixed point, for increasing k.
pub fn kcore_oracle(g: &SocialGraph) -> Vec<u32> {
    let n = g.node_count();
    let mut neighbors: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    for (u, v) in g.edges() {
        neighbors[u.index()].insert(v.index());
        neighbors[v.index()].insert(u.index());
    }
    let mut core = vec![0u32; n];
    let mut alive = vec![true; n];
    // Survivors of the degree-< k peel at level k have core >= k.
    let mut k = 1u32;
    loop {
        let mut changed = true;
        while changed {
            changed = false;
            for u in 0..n {
                let deg = neighbors[u].iter().filter(|&&v| alive[v]).count();
                if alive[u] && deg < k as usize {
                    alive[u] = false;
                    changed = true;
                }
            }
        }
        if !alive.iter().any(|&a| a) {
            break;
        }
        for u in 0..n {
            if alive[u] {
                core[u] = k;
            }
        }
        k += 1;
    }
    core
}

// ---------------------------------------------------------------------
// Misc helpers
// ---------------------------------------------------------------------

pub fn assert_close(a: &[f64], b: &[f64], tol: f64, what: &str) {
    assert_eq!(a.len(), b.len(), "{what}: length mismatch");
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!(
            (x - y).abs() <= tol,
            "{what}: index {i}: {x} vs {y} (tol {tol})"
        );
    }
}
