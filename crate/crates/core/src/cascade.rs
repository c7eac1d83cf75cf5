//! Diffusion cascades: a root post plus time-ordered repost events.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, SocialGraph};

/// One cascade: the root post and its repost events, sorted ascending by
/// time (ties keep input order). Each user appears at most once; repeated
/// participations collapse to the earliest event. The root is not an event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cascade {
    pub id: u64,
    pub root: NodeId,
    pub root_time: i64,
    pub events: Vec<(NodeId, i64)>,
}

impl Cascade {
    pub fn new(id: u64, root: NodeId, root_time: i64, raw_events: Vec<(NodeId, i64)>) -> Result<Self> {
        for &(_, t) in &raw_events {
            if t < root_time {
                return Err(Error::Validation(format!(
                    "cascade {id}: event time {t} precedes root time {root_time}"
                )));
            }
        }
        // Earliest event per user, then sort by (time, first-appearance).
        let mut earliest: HashMap<NodeId, (i64, usize)> = HashMap::new();
        for (pos, &(u, t)) in raw_events.iter().enumerate() {
            match earliest.get(&u) {
                Some(&(bt, bp)) if (bt, bp) <= (t, pos) => {}
                _ => {
                    earliest.insert(u, (t, pos));
                }
            }
        }
        let mut events: Vec<(NodeId, i64, usize)> =
            earliest.into_iter().map(|(u, (t, p))| (u, t, p)).collect();
        events.sort_by_key(|&(_, t, p)| (t, p));
        let events = events.into_iter().map(|(u, t, _)| (u, t)).collect();
        Ok(Cascade {
            id,
            root,
            root_time,
            events,
        })
    }

    pub fn size(&self) -> usize {
        self.events.len()
    }

    /// Time of `v`'s event in this cascade, if any.
    pub fn event_time(&self, v: NodeId) -> Option<i64> {
        self.events.iter().find(|&&(u, _)| u == v).map(|&(_, t)| t)
    }

    /// Users who repost strictly after `v`'s repost; empty when `v` has no
    /// event here. Equal-time events are excluded.
    pub fn retweeters_after(&self, v: NodeId) -> Vec<NodeId> {
        match self.event_time(v) {
            Some(tv) => self
                .events
                .iter()
                .filter(|&&(u, t)| t > tv && u != v)
                .map(|&(u, _)| u)
                .collect(),
            None => Vec::new(),
        }
    }
}

/// The cascade corpus with per-node indices: `by_source` maps a node to the
/// cascades it rooted, `by_participant` to the cascades it reposted in.
#[derive(Debug, Clone, Default)]
pub struct CascadeSet {
    pub cascades: Vec<Cascade>,
    by_source: HashMap<NodeId, Vec<usize>>,
    by_participant: HashMap<NodeId, Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CascadeLine {
    id: u64,
    root: String,
    t0: i64,
    events: Vec<(String, i64)>,
}

impl CascadeSet {
    pub fn from_cascades(cascades: Vec<Cascade>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for c in &cascades {
            if !seen.insert(c.id) {
                return Err(Error::Validation(format!("duplicate cascade id {}", c.id)));
            }
        }
        let mut by_source: HashMap<NodeId, Vec<usize>> = HashMap::new();
        let mut by_participant: HashMap<NodeId, Vec<usize>> = HashMap::new();
        for (i, c) in cascades.iter().enumerate() {
            by_source.entry(c.root).or_default().push(i);
            for &(u, _) in &c.events {
                by_participant.entry(u).or_default().push(i);
            }
        }
        Ok(CascadeSet {
            cascades,
            by_source,
            by_participant,
        })
    }

    /// Loads newline-delimited JSON, one cascade per line. Unknown user ids
    /// fail in strict mode and are skipped otherwise (a cascade whose root
    /// is unknown is dropped entirely).
    pub fn load_jsonl(path: impl AsRef<Path>, g: &SocialGraph, strict: bool) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut cascades = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: CascadeLine =
                serde_json::from_str(&line).map_err(|e| Error::Parse {
                    line: lineno + 1,
                    message: e.to_string(),
                })?;
            let root = match g.resolve(&parsed.root) {
                Some(n) => n,
                None if strict => {
                    return Err(Error::UnknownUser {
                        id: parsed.root,
                        line: lineno + 1,
                    })
                }
                None => continue,
            };
            let mut events = Vec::with_capacity(parsed.events.len());
            for (label, t) in parsed.events {
                match g.resolve(&label) {
                    Some(n) => events.push((n, t)),
                    None if strict => {
                        return Err(Error::UnknownUser {
                            id: label,
                            line: lineno + 1,
                        })
                    }
                    None => {}
                }
            }
            cascades.push(Cascade::new(parsed.id, root, parsed.t0, events)?);
        }
        CascadeSet::from_cascades(cascades)
    }

    /// Writes the corpus in the same JSONL schema `load_jsonl` reads.
    pub fn write_jsonl(&self, path: impl AsRef<Path>, g: &SocialGraph) -> Result<()> {
        let mut out = String::new();
        for c in &self.cascades {
            let line = CascadeLine {
                id: c.id,
                root: g.label(c.root).to_string(),
                t0: c.root_time,
                events: c
                    .events
                    .iter()
                    .map(|&(u, t)| (g.label(u).to_string(), t))
                    .collect(),
            };
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cascades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cascades.is_empty()
    }

    /// Cascade indices rooted by `v` (the corpus index C_v).
    pub fn rooted_by(&self, v: NodeId) -> &[usize] {
        self.by_source.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Cascade indices in which `v` appears as an event user.
    pub fn participated_by(&self, v: NodeId) -> &[usize] {
        self.by_participant
            .get(&v)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SocialGraph;
    use std::io::Write;

    fn graph(labels: &[&str]) -> SocialGraph {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        SocialGraph::from_edges(labels.len(), labels, vec![], true).unwrap()
    }

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn empty_file_gives_empty_set() {
        let g = graph(&["a"]);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"").unwrap();
        let cs = CascadeSet::load_jsonl(f.path(), &g, true).unwrap();
        assert_eq!(cs.len(), 0);
    }

    #[test]
    fn events_sorted_by_time() {
        let g = graph(&["a", "b", "c"]);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            r#"{{"id": 1, "root": "a", "t0": 0, "events": [["b", 5], ["c", 3]]}}"#
        )
        .unwrap();
        let cs = CascadeSet::load_jsonl(f.path(), &g, true).unwrap();
        assert_eq!(cs.cascades[0].events, vec![(n(2), 3), (n(1), 5)]);
    }

    #[test]
    fn duplicate_participation_collapses_to_earliest() {
        // Oracle: earliest event per user.
        let c = Cascade::new(0, n(0), 0, vec![(n(1), 7), (n(1), 3)]).unwrap();
        assert_eq!(c.events, vec![(n(1), 3)]);
    }

    #[test]
    fn event_before_root_rejected() {
        assert!(matches!(
            Cascade::new(0, n(0), 10, vec![(n(1), 5)]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn malformed_json_reports_line() {
        let g = graph(&["a"]);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id": 1, "root": "a", "t0": 0, "events": []}}"#).unwrap();
        writeln!(f, "not json").unwrap();
        match CascadeSet::load_jsonl(f.path(), &g, true) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_user_strict_vs_lenient() {
        let g = graph(&["a", "b"]);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            r#"{{"id": 1, "root": "a", "t0": 0, "events": [["b", 1], ["zz", 2]]}}"#
        )
        .unwrap();
        assert!(matches!(
            CascadeSet::load_jsonl(f.path(), &g, true),
            Err(Error::UnknownUser { .. })
        ));
        let cs = CascadeSet::load_jsonl(f.path(), &g, false).unwrap();
        assert_eq!(cs.cascades[0].events.len(), 1);
    }

    #[test]
    fn retweeters_after_basic() {
        // Oracle: manual enumeration of strictly-later events.
        let c = Cascade::new(0, n(0), 0, vec![(n(1), 1), (n(3), 2), (n(4), 3)]).unwrap();
        let mut got = c.retweeters_after(n(1));
        got.sort();
        assert_eq!(got, vec![n(3), n(4)]);
        assert!(c.retweeters_after(n(9)).is_empty());
        assert!(c.retweeters_after(n(4)).is_empty());
    }

    #[test]
    fn retweeters_after_excludes_ties() {
        let c = Cascade::new(0, n(0), 0, vec![(n(1), 2), (n(2), 2), (n(3), 5)]).unwrap();
        assert_eq!(c.retweeters_after(n(1)), vec![n(3)]);
        assert_eq!(c.retweeters_after(n(2)), vec![n(3)]);
    }

    #[test]
    fn indices_consistent() {
        let c1 = Cascade::new(0, n(0), 0, vec![(n(1), 1), (n(2), 2)]).unwrap();
        let c2 = Cascade::new(1, n(1), 0, vec![(n(2), 3)]).unwrap();
        let cs = CascadeSet::from_cascades(vec![c1, c2]).unwrap();
        assert_eq!(cs.rooted_by(n(0)), &[0]);
        assert_eq!(cs.rooted_by(n(1)), &[1]);
        assert_eq!(cs.participated_by(n(2)), &[0, 1]);
        assert!(cs.rooted_by(n(2)).is_empty());
    }

    #[test]
    fn duplicate_cascade_id_rejected() {
        let c1 = Cascade::new(7, n(0), 0, vec![]).unwrap();
        let c2 = Cascade::new(7, n(1), 0, vec![]).unwrap();
        assert!(CascadeSet::from_cascades(vec![c1, c2]).is_err());
    }

    #[test]
    fn retweeters_after_sum_matches_double_loop() {
        // Naive double loop over event pairs as the counting oracle.
        let c = Cascade::new(
            0,
            n(0),
            0,
            vec![(n(1), 1), (n(2), 1), (n(3), 4), (n(4), 4), (n(5), 9)],
        )
        .unwrap();
        let total: usize = c
            .events
            .iter()
            .map(|&(u, _)| c.retweeters_after(u).len())
            .sum();
        let mut naive = 0usize;
        for &(_, ti) in &c.events {
            for &(_, tj) in &c.events {
                if tj > ti {
                    naive += 1;
                }
            }
        }
        assert_eq!(total, naive);
    }
}
