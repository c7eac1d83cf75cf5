//! Centrality baselines: degree, harmonic closeness, Brandes betweenness,
//! PageRank, and k-core index.
//!
//! All measures default to the information-flow orientation (reversed
//! follow edges) since content propagates followee -> follower; the follow
//! orientation is available behind the `orientation` knob.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, SocialGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    InDegree,
    OutDegree,
    TotalDegree,
    Closeness,
    Betweenness,
    Pagerank,
    Kcore,
}

impl Measure {
    pub const ALL: [Measure; 7] = [
        Measure::InDegree,
        Measure::OutDegree,
        Measure::TotalDegree,
        Measure::Closeness,
        Measure::Betweenness,
        Measure::Pagerank,
        Measure::Kcore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::InDegree => "in_degree",
            Measure::OutDegree => "out_degree",
            Measure::TotalDegree => "total_degree",
            Measure::Closeness => "closeness",
            Measure::Betweenness => "betweenness",
            Measure::Pagerank => "pagerank",
            Measure::Kcore => "kcore",
        }
    }

    pub fn parse(s: &str) -> Result<Measure> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown measure {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Follow,
    #[default]
    InformationFlow,
}

/// One centrality measure evaluated on every node.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVector {
    pub measure: Measure,
    pub orientation: Orientation,
    pub values: Vec<f64>,
}

/// Exact vs pivot-sampled betweenness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetweennessMode {
    Exact,
    Sampled { pivots: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct PagerankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PagerankParams {
    fn default() -> Self {
        PagerankParams {
            damping: 0.85,
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

/// Evaluates `measure` on `g` in the requested orientation with default
/// parameters (exact betweenness).
pub fn compute(g: &SocialGraph, measure: Measure, orientation: Orientation) -> Result<CentralityVector> {
    compute_with(g, measure, orientation, BetweennessMode::Exact, PagerankParams::default())
}

pub fn compute_with(
    g: &SocialGraph,
    measure: Measure,
    orientation: Orientation,
    bc_mode: BetweennessMode,
    pr: PagerankParams,
) -> Result<CentralityVector> {
    let oriented;
    let view = match orientation {
        Orientation::Follow => g,
        Orientation::InformationFlow => {
            oriented = g.information_flow_view();
            &oriented
        }
    };
    let values = match measure {
        Measure::InDegree => degree_values(view, DegreeKind::In),
        Measure::OutDegree => degree_values(view, DegreeKind::Out),
        Measure::TotalDegree => degree_values(view, DegreeKind::Total),
        Measure::Closeness => closeness_values(view),
        Measure::Betweenness => betweenness_values(view, bc_mode),
        Measure::Pagerank => pagerank_values(view, pr)?,
        Measure::Kcore => kcore_values(view).into_iter().map(|k| k as f64).collect(),
    };
    Ok(CentralityVector {
        measure,
        orientation,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeKind {
    In,
    Out,
    Total,
}

pub fn degree_values(g: &SocialGraph, kind: DegreeKind) -> Vec<f64> {
    g.nodes()
        .map(|u| match kind {
            DegreeKind::In => g.in_degree(u) as f64,
            DegreeKind::Out => g.out_degree(u) as f64,
            DegreeKind::Total => (g.in_degree(u) + g.out_degree(u)) as f64,
        })
        .collect()
}

/// Harmonic closeness C(u) = sum over reachable v != u of 1/d(u, v),
/// with out-direction BFS distances and 1/inf = 0.
pub fn closeness_values(g: &SocialGraph) -> Vec<f64> {
    let n = g.node_count();
    (0..n)
        .into_par_iter()
        .map(|s| {
            let mut dist = vec![u32::MAX; n];
            let mut queue = std::collections::VecDeque::new();
            dist[s] = 0;
            queue.push_back(s as u32);
            let mut acc = 0.0f64;
            while let Some(u) = queue.pop_front() {
                let du = dist[u as usize];
                for &v in g.out_neighbors(NodeId(u)) {
                    if dist[v as usize] == u32::MAX {
                        dist[v as usize] = du + 1;
                        acc += 1.0 / (du as f64 + 1.0);
                        queue.push_back(v);
                    }
                }
            }
            acc
        })
        .collect()
}

/// Directed Brandes betweenness, unnormalized, endpoints excluded.
///
/// Sources are processed in fixed chunks and partial sums combined in
/// chunk order, so results are identical across worker counts.
pub fn betweenness_values(g: &SocialGraph, mode: BetweennessMode) -> Vec<f64> {
    let n = g.node_count();
    let (sources, scale): (Vec<u32>, f64) = match mode {
        BetweennessMode::Exact => ((0..n as u32).collect(), 1.0),
        BetweennessMode::Sampled { pivots, seed } => {
            let k = pivots.min(n);
            if k == 0 {
                return vec![0.0; n];
            }
            let mut picked = sample_distinct(n as u32, k, seed);
            picked.sort_unstable();
            (picked, n as f64 / k as f64)
        }
    };

    const CHUNK: usize = 64;
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0f64; n];
            for &s in chunk {
                brandes_from(g, s, &mut acc);
            }
            acc
        })
        .collect();

    let mut total = vec![0.0f64; n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    if scale != 1.0 {
        for v in &mut total {
            *v *= scale;
        }
    }
    total
}

fn brandes_from(g: &SocialGraph, s: u32, acc: &mut [f64]) {
    let n = g.node_count();
    let mut stack: Vec<u32> = Vec::with_capacity(n);
    let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![i64::MAX; n];
    sigma[s as usize] = 1.0;
    dist[s as usize] = 0;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(s);
    while let Some(u) = queue.pop_front() {
        stack.push(u);
        let du = dist[u as usize];
        for &v in g.out_neighbors(NodeId(u)) {
            if dist[v as usize] == i64::MAX {
                dist[v as usize] = du + 1;
                queue.push_back(v);
            }
            if dist[v as usize] == du + 1 {
                sigma[v as usize] += sigma[u as usize];
                preds[v as usize].push(u);
            }
        }
    }
    let mut delta = vec![0.0f64; n];
    while let Some(w) = stack.pop() {
        for &p in &preds[w as usize] {
            delta[p as usize] +=
                sigma[p as usize] / sigma[w as usize] * (1.0 + delta[w as usize]);
        }
        if w != s {
            acc[w as usize] += delta[w as usize];
        }
    }
}

fn sample_distinct(n: u32, k: usize, seed: u64) -> Vec<u32> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, n as usize, k)
        .into_iter()
        .map(|i| i as u32)
        .collect()
}

/// Power iteration with uniform teleport and dangling-mass redistribution,
/// converged when the L1 delta drops below `tol`.
pub fn pagerank_values(g: &SocialGraph, params: PagerankParams) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let d = params.damping;
    let mut rank = vec![1.0 / n as f64; n];
    let mut next = vec![0.0f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..params.max_iter {
        let dangling: f64 = (0..n)
            .filter(|&u| g.out_degree(NodeId(u as u32)) == 0)
            .map(|u| rank[u])
            .sum();
        let base = (1.0 - d) / n as f64 + d * dangling / n as f64;
        next.par_iter_mut().enumerate().for_each(|(v, slot)| {
            let mut incoming = 0.0;
            for &u in g.in_neighbors(NodeId(v as u32)) {
                incoming += rank[u as usize] / g.out_degree(NodeId(u)) as f64;
            }
            *slot = base + d * incoming;
        });
        residual = rank
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
        std::mem::swap(&mut rank, &mut next);
        if residual < params.tol {
            return Ok(rank);
        }
    }
    Err(Error::NoConvergence {
        iterations: params.max_iter,
        residual,
    })
}

/// Core numbers by iterative peeling on the undirected projection.
pub fn kcore_values(g: &SocialGraph) -> Vec<u32> {
    let n = g.node_count();
    // Undirected projection: union of in/out neighbors, deduplicated.
    let undirected: Vec<Vec<u32>> = (0..n)
        .map(|u| {
            let u = NodeId(u as u32);
            let mut nb: Vec<u32> = g
                .out_neighbors(u)
                .iter()
                .chain(g.in_neighbors(u))
                .copied()
                .collect();
            nb.sort_unstable();
            nb.dedup();
            nb
        })
        .collect();

    // Bucket-sort peeling (Batagelj-Zaversnik).
    let mut degree: Vec<usize> = undirected.iter().map(Vec::len).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    let mut bins = vec![0usize; max_deg + 2];
    for &d in &degree {
        bins[d] += 1;
    }
    let mut start = 0usize;
    for b in bins.iter_mut() {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut pos = vec![0usize; n];
    let mut order = vec![0u32; n];
    for u in 0..n {
        pos[u] = bins[degree[u]];
        order[pos[u]] = u as u32;
        bins[degree[u]] += 1;
    }
    for b in (1..bins.len()).rev() {
        bins[b] = bins[b - 1];
    }
    if !bins.is_empty() {
        bins[0] = 0;
    }
    let mut core: Vec<u32> = degree.iter().map(|&d| d as u32).collect();
    for i in 0..n {
        let u = order[i] as usize;
        core[u] = degree[u] as u32;
        for &v in &undirected[u] {
            let v = v as usize;
            if degree[v] > degree[u] {
                let dv = degree[v];
                let pv = pos[v];
                let pw = bins[dv];
                let w = order[pw] as usize;
                if v != w {
                    order.swap(pv, pw);
                    pos[v] = pw;
                    pos[w] = pv;
                }
                bins[dv] += 1;
                degree[v] -= 1;
            }
        }
    }
    core
}
