//! Top-p% extraction and pairwise overlap between ranked node sets.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// The top-p% nodes under one score, with deterministic tie-breaking by
/// ascending node index.
#[derive(Debug, Clone)]
pub struct TopSet {
    pub score_name: String,
    pub p: f64,
    pub members: HashSet<NodeId>,
    pub cutoff_rank: usize,
    eligible_fingerprint: u64,
}

fn fingerprint(eligible: &[NodeId]) -> u64 {
    // FNV-1a over the sorted index list.
    let mut sorted: Vec<u32> = eligible.iter().map(|n| n.0).collect();
    sorted.sort_unstable();
    let mut h = 0xcbf29ce484222325u64;
    for x in sorted {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

/// Top-k with k = ceil(p/100 * |eligible|); ties broken by node index.
pub fn top_p_set(
    score_name: &str,
    scores: &[f64],
    p: f64,
    eligible: &[NodeId],
) -> Result<TopSet> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(Error::InvalidArgument(format!("p must be in (0, 100], got {p}")));
    }
    if eligible.is_empty() {
        return Err(Error::InvalidArgument("eligible set is empty".into()));
    }
    let k = ((p / 100.0) * eligible.len() as f64).ceil() as usize;
    let mut ranked: Vec<NodeId> = eligible.to_vec();
    ranked.sort_by(|a, b| {
        scores[b.index()]
            .total_cmp(&scores[a.index()])
            .then(a.0.cmp(&b.0))
    });
    ranked.truncate(k);
    Ok(TopSet {
        score_name: score_name.to_string(),
        p,
        members: ranked.into_iter().collect(),
        cutoff_rank: k,
        eligible_fingerprint: fingerprint(eligible),
    })
}

/// |a intersect b| / |a|.
pub fn overlap_p(a: &TopSet, b: &TopSet) -> Result<f64> {
    if a.p != b.p {
        return Err(Error::InvalidArgument(format!(
            "mismatched p: {} vs {}",
            a.p, b.p
        )));
    }
    if a.eligible_fingerprint != b.eligible_fingerprint {
        return Err(Error::InvalidArgument(
            "top sets drawn from different eligible populations".into(),
        ));
    }
    let inter = a.members.intersection(&b.members).count();
    Ok(inter as f64 / a.members.len() as f64)
}

/// Full pairwise overlap matrix over named score maps, rows/columns in
/// input order.
#[derive(Debug, Clone)]
pub struct OverlapMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub fn overlap_matrix(
    score_maps: &[(String, Vec<f64>)],
    p: f64,
    eligible: &[NodeId],
) -> Result<OverlapMatrix> {
    if score_maps.len() < 2 {
        return Err(Error::InvalidArgument(
            "overlap matrix needs at least 2 score maps".into(),
        ));
    }
    let sets: Vec<TopSet> = score_maps
        .iter()
        .map(|(name, scores)| top_p_set(name, scores, p, eligible))
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(sets.len());
    for a in &sets {
        let mut row = Vec::with_capacity(sets.len());
        for b in &sets {
            row.push(overlap_p(a, b)?);
        }
        values.push(row);
    }
    Ok(OverlapMatrix {
        names: score_maps.iter().map(|(n, _)| n.clone()).collect(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn p_100_takes_everything() {
        let scores = vec![3.0, 1.0, 2.0];
        let t = top_p_set("s", &scores, 100.0, &ids(&[0, 1, 2])).unwrap();
        assert_eq!(t.members.len(), 3);
    }

    #[test]
    fn ceil_and_tie_break() {
        // k = ceil(0.34 * 3) = 2; the two score-5 nodes win.
        let scores = vec![5.0, 5.0, 3.0];
        let t = top_p_set("s", &scores, 34.0, &ids(&[0, 1, 2])).unwrap();
        assert_eq!(t.cutoff_rank, 2);
        assert!(t.members.contains(&NodeId(0)) && t.members.contains(&NodeId(1)));
    }

    #[test]
    fn all_equal_scores_lowest_indices_win() {
        let scores = vec![7.0; 4];
        let t = top_p_set("s", &scores, 50.0, &ids(&[0, 1, 2, 3])).unwrap();
        assert!(t.members.contains(&NodeId(0)) && t.members.contains(&NodeId(1)));
        assert_eq!(t.members.len(), 2);
    }

    #[test]
    fn p_out_of_range_rejected() {
        let scores = vec![1.0];
        assert!(top_p_set("s", &scores, 0.0, &ids(&[0])).is_err());
        assert!(top_p_set("s", &scores, 101.0, &ids(&[0])).is_err());
    }

    #[test]
    fn overlap_identity_and_disjoint() {
        let e = ids(&[0, 1, 2, 3]);
        let a = top_p_set("a", &[9.0, 8.0, 1.0, 0.0], 50.0, &e).unwrap();
        let b = top_p_set("b", &[0.0, 1.0, 8.0, 9.0], 50.0, &e).unwrap();
        assert_eq!(overlap_p(&a, &a).unwrap(), 1.0);
        assert_eq!(overlap_p(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn overlap_fraction() {
        // |a| = |b| = 10, |a n b| = 3 -> 0.3.
        let e: Vec<NodeId> = ids(&(0..20).collect::<Vec<u32>>());
        let mut sa = vec![0.0; 20];
        let mut sb = vec![0.0; 20];
        for i in 0..10 {
            sa[i] = 10.0; // a = {0..9}
        }
        for i in 7..17 {
            sb[i] = 10.0; // b = {7..16}
        }
        let a = top_p_set("a", &sa, 50.0, &e).unwrap();
        let b = top_p_set("b", &sb, 50.0, &e).unwrap();
        assert_eq!(overlap_p(&a, &b).unwrap(), 0.3);
    }

    #[test]
    fn mismatched_populations_rejected() {
        let a = top_p_set("a", &[1.0, 2.0, 3.0], 50.0, &ids(&[0, 1, 2])).unwrap();
        let b = top_p_set("b", &[1.0, 2.0, 3.0], 50.0, &ids(&[0, 1])).unwrap();
        assert!(overlap_p(&a, &b).is_err());
        let c = top_p_set("c", &[1.0, 2.0, 3.0], 40.0, &ids(&[0, 1, 2])).unwrap();
        assert!(overlap_p(&a, &c).is_err());
    }

    #[test]
    fn matrix_identical_maps() {
        let e = ids(&[0, 1, 2, 3]);
        let maps = vec![
            ("x".to_string(), vec![4.0, 3.0, 2.0, 1.0]),
            ("y".to_string(), vec![4.0, 3.0, 2.0, 1.0]),
        ];
        let m = overlap_matrix(&maps, 50.0, &e).unwrap();
        assert_eq!(m.values, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn matrix_symmetric_with_equal_sizes() {
        let e: Vec<NodeId> = ids(&(0..30).collect::<Vec<u32>>());
        let maps = vec![
            ("a".to_string(), (0..30).map(|i| (i * 7 % 13) as f64).collect()),
            ("b".to_string(), (0..30).map(|i| (i * 5 % 11) as f64).collect()),
            ("c".to_string(), (0..30).map(|i| (i * 3 % 17) as f64).collect()),
        ];
        let m = overlap_matrix(&maps, 20.0, &e).unwrap();
        for i in 0..3 {
            assert_eq!(m.values[i][i], 1.0);
            for j in 0..3 {
                assert_eq!(m.values[i][j], m.values[j][i]);
            }
        }
    }

    #[test]
    fn monotone_transform_invariance() {
        let e: Vec<NodeId> = ids(&(0..12).collect::<Vec<u32>>());
        let scores: Vec<f64> = (0..12).map(|i| (i * 11 % 7) as f64).collect();
        let squashed: Vec<f64> = scores.iter().map(|&s| (s + 1.0).ln()).collect();
        let a = top_p_set("raw", &scores, 25.0, &e).unwrap();
        let b = top_p_set("log", &squashed, 25.0, &e).unwrap();
        assert_eq!(a.members, b.members);
    }
}
