//! Ground-truth influence quantities per node: source spreader score,
//! broker score, retweet count, and average broker score per retweet.
//!
//! The source spreader score of u counts the distinct users who repost
//! u's own posts, unioned over the cascades u rooted. The broker score
//! counts the distinct users who repost strictly after u's reposts,
//! unioned over the whole corpus.

use rayon::prelude::*;

use crate::cascade::CascadeSet;
use crate::graph::NodeId;

/// Per-node influence columns, indexed by dense node id.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceTable {
    pub source_score: Vec<u64>,
    pub broker_score: Vec<u64>,
    pub retweet_count: Vec<u64>,
    pub broker_per_retweet: Vec<f64>,
}

/// Distinct users reposting u's own posts, per node.
pub fn source_spreader_scores(d: &CascadeSet, node_count: usize) -> Vec<u64> {
    (0..node_count as u32)
        .into_par_iter()
        .map(|u| {
            let u = NodeId(u);
            let mut users: Vec<u32> = Vec::new();
            for &ci in d.rooted_by(u) {
                users.extend(d.cascades[ci].events.iter().map(|&(e, _)| e.0));
            }
            users.sort_unstable();
            users.dedup();
            users.len() as u64
        })
        .collect()
}

/// Distinct users reposting strictly after u's reposts, per node.
pub fn broker_scores(d: &CascadeSet, node_count: usize) -> Vec<u64> {
    (0..node_count as u32)
        .into_par_iter()
        .map(|u| {
            let u = NodeId(u);
            let mut later: Vec<u32> = Vec::new();
            for &ci in d.participated_by(u) {
                later.extend(d.cascades[ci].retweeters_after(u).iter().map(|n| n.0));
            }
            later.sort_unstable();
            later.dedup();
            later.len() as u64
        })
        .collect()
}

/// Number of cascades in which u appears as an event user.
pub fn retweet_counts(d: &CascadeSet, node_count: usize) -> Vec<u64> {
    (0..node_count as u32)
        .map(|u| d.participated_by(NodeId(u)).len() as u64)
        .collect()
}

/// Assembles all four columns. B_u/r_u is 0 when r_u = 0.
pub fn build_influence_table(d: &CascadeSet, node_count: usize) -> InfluenceTable {
    let source_score = source_spreader_scores(d, node_count);
    let broker_score = broker_scores(d, node_count);
    let retweet_count = retweet_counts(d, node_count);
    let broker_per_retweet = broker_score
        .iter()
        .zip(&retweet_count)
        .map(|(&b, &r)| if r == 0 { 0.0 } else { b as f64 / r as f64 })
        .collect();
    InfluenceTable {
        source_score,
        broker_score,
        retweet_count,
        broker_per_retweet,
    }
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Brute-force set-construction oracles, independent of the indexed path.

    use std::collections::HashSet;

    use super::*;

    pub fn source_scores_naive(d: &CascadeSet, node_count: usize) -> Vec<u64> {
        (0..node_count as u32)
            .map(|u| {
                let mut set: HashSet<u32> = HashSet::new();
                for c in &d.cascades {
                    if c.root.0 == u {
                        set.extend(c.events.iter().map(|&(e, _)| e.0));
                    }
                }
                set.len() as u64
            })
            .collect()
    }

    pub fn broker_scores_naive(d: &CascadeSet, node_count: usize) -> Vec<u64> {
        (0..node_count as u32)
            .map(|u| {
                let mut set: HashSet<u32> = HashSet::new();
                for c in &d.cascades {
                    if let Some(tu) = c.event_time(NodeId(u)) {
                        set.extend(
                            c.events
                                .iter()
                                .filter(|&&(e, t)| t > tu && e.0 != u)
                                .map(|&(e, _)| e.0),
                        );
                    }
                }
                set.len() as u64
            })
            .collect()
    }

    pub fn retweet_counts_naive(d: &CascadeSet, node_count: usize) -> Vec<u64> {
        (0..node_count as u32)
            .map(|u| {
                d.cascades
                    .iter()
                    .filter(|c| c.events.iter().any(|&(e, _)| e.0 == u))
                    .count() as u64
            })
            .collect()
    }
}
