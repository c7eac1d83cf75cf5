//! Interpretable relational node embeddings: compositions of neighborhood
//! summary operators over centrality base features.
//!
//! Each embedding column carries its operator recipe (e.g.
//! `mean-(mean-(kcore))` = mean over in-neighbors of the mean over
//! in-neighbors of the k-core index), so learned features can be
//! re-evaluated on a different graph.

use serde::{Deserialize, Serialize};

use crate::centrality::{self, BetweennessMode, Measure, Orientation, PagerankParams};
use crate::error::{Error, Result};
use crate::graph::{NodeId, SocialGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    In,
    Out,
    Total,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::In, Direction::Out, Direction::Total];

    fn marker(self) -> &'static str {
        match self {
            Direction::In => "-",
            Direction::Out => "+",
            Direction::Total => "",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summary {
    Sum,
    Mean,
    Max,
}

impl Summary {
    pub const ALL: [Summary; 3] = [Summary::Sum, Summary::Mean, Summary::Max];

    fn name(self) -> &'static str {
        match self {
            Summary::Sum => "sum",
            Summary::Mean => "mean",
            Summary::Max => "max",
        }
    }
}

/// One relational operator: a summary over a neighbor direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RelOp {
    pub direction: Direction,
    pub summary: Summary,
}

/// A feature recipe: a base centrality plus an operator chain, outermost
/// first. Renders canonically, e.g. `sum+(mean-(pagerank))`, and parses
/// back to an equal definition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct FeatureDefinition {
    pub base: Measure,
    pub ops: Vec<RelOp>,
}

impl FeatureDefinition {
    pub fn base_only(base: Measure) -> Self {
        FeatureDefinition { base, ops: Vec::new() }
    }

    pub fn depth(&self) -> usize {
        self.ops.len()
    }

    pub fn render(&self) -> String {
        let mut s = self.base.name().to_string();
        for op in self.ops.iter().rev() {
            s = format!("{}{}({})", op.summary.name(), op.direction.marker(), s);
        }
        s
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(open) = s.find('(') {
            if !s.ends_with(')') {
                return Err(Error::Definition(format!("unbalanced parens in {s:?}")));
            }
            let head = &s[..open];
            let inner = &s[open + 1..s.len() - 1];
            let (summary_name, direction) = match head.as_bytes().last() {
                Some(b'-') => (&head[..head.len() - 1], Direction::In),
                Some(b'+') => (&head[..head.len() - 1], Direction::Out),
                _ => (head, Direction::Total),
            };
            let summary = Summary::ALL
                .into_iter()
                .find(|x| x.name() == summary_name)
                .ok_or_else(|| Error::Definition(format!("unknown summary {summary_name:?}")))?;
            let mut def = FeatureDefinition::parse(inner)?;
            def.ops.insert(0, RelOp { direction, summary });
            Ok(def)
        } else {
            let base = Measure::parse(s)
                .map_err(|_| Error::Definition(format!("unknown base feature {s:?}")))?;
            Ok(FeatureDefinition { base, ops: Vec::new() })
        }
    }
}

impl From<FeatureDefinition> for String {
    fn from(d: FeatureDefinition) -> String {
        d.render()
    }
}

impl TryFrom<String> for FeatureDefinition {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        FeatureDefinition::parse(&s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedConfig {
    pub base_features: Vec<Measure>,
    pub summaries: Vec<Summary>,
    pub lambda: f64,
    pub ego_distance: usize,
    pub bins: usize,
    pub bin_fraction: f64,
    pub orientation: Orientation,
    /// `None` = exact betweenness; `Some((pivots, seed))` = pivot-sampled.
    pub betweenness_pivots: Option<(usize, u64)>,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            base_features: vec![
                Measure::TotalDegree,
                Measure::Betweenness,
                Measure::Closeness,
                Measure::Pagerank,
                Measure::Kcore,
            ],
            summaries: vec![Summary::Sum, Summary::Max, Summary::Mean],
            lambda: 0.9,
            ego_distance: 5,
            bins: 10,
            bin_fraction: 0.5,
            orientation: Orientation::InformationFlow,
            betweenness_pivots: None,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument("lambda must be in [0, 1]".into()));
        }
        if self.ego_distance < 1 {
            return Err(Error::InvalidArgument("ego_distance must be >= 1".into()));
        }
        if self.bins < 2 {
            return Err(Error::InvalidArgument("bins must be >= 2".into()));
        }
        if !(self.bin_fraction > 0.0 && self.bin_fraction < 1.0) {
            return Err(Error::InvalidArgument("bin_fraction must be in (0, 1)".into()));
        }
        if self.base_features.is_empty() || self.summaries.is_empty() {
            return Err(Error::InvalidArgument(
                "base_features and summaries must be non-empty".into(),
            ));
        }
        Ok(())
    }

    fn bc_mode(&self) -> BetweennessMode {
        match self.betweenness_pivots {
            Some((pivots, seed)) => BetweennessMode::Sampled { pivots, seed },
            None => BetweennessMode::Exact,
        }
    }
}

/// Column-major feature matrix with recipes. `raw` holds the operator
/// outputs, `transformed` the log-binned values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub definitions: Vec<FeatureDefinition>,
    pub raw: Vec<Vec<f64>>,
    pub transformed: Vec<Vec<f64>>,
    pub node_count: usize,
}

impl FeatureMatrix {
    pub fn width(&self) -> usize {
        self.definitions.len()
    }

    /// Row-major view of the transformed matrix, one row per node.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.node_count)
            .map(|i| self.transformed.iter().map(|c| c[i]).collect())
            .collect()
    }
}

/// Summary of `col` over each node's `dir`-neighbors; 0 for nodes with no
/// such neighbors (mean and max included).
pub fn apply_operator(g: &SocialGraph, col: &[f64], dir: Direction, summary: Summary) -> Vec<f64> {
    assert_eq!(col.len(), g.node_count());
    let mut merged: Vec<u32> = Vec::new();
    (0..g.node_count() as u32)
        .map(|v| {
            let v = NodeId(v);
            let neighbors: &[u32] = match dir {
                Direction::In => g.in_neighbors(v),
                Direction::Out => g.out_neighbors(v),
                Direction::Total => {
                    merged.clear();
                    merged.extend_from_slice(g.in_neighbors(v));
                    merged.extend_from_slice(g.out_neighbors(v));
                    merged.sort_unstable();
                    merged.dedup();
                    &merged
                }
            };
            if neighbors.is_empty() {
                return 0.0;
            }
            let vals = neighbors.iter().map(|&u| col[u as usize]);
            match summary {
                Summary::Sum => vals.sum(),
                Summary::Mean => vals.sum::<f64>() / neighbors.len() as f64,
                Summary::Max => vals.fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// Rank-based log binning: nodes sorted ascending by value get bin 0 for
/// the first `bin_fraction` share, bin 1 for the same share of the
/// remainder, and so on; the last bin absorbs the tail. Equal values
/// always land in the same bin (the bin of the run's first rank).
pub fn log_bin_transform(col: &[f64], bins: usize, bin_fraction: f64) -> Vec<f64> {
    let n = col.len();
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));

    let mut bin_of_pos = vec![0usize; n];
    let mut pos = 0usize;
    let mut remaining = n;
    for b in 0..bins {
        if pos >= n {
            break;
        }
        let take = if b + 1 == bins {
            remaining
        } else {
            ((bin_fraction * remaining as f64).floor() as usize).max(1)
        };
        for p in pos..(pos + take).min(n) {
            bin_of_pos[p] = b;
        }
        pos += take;
        remaining = n - pos.min(n);
    }

    let mut out = vec![0.0f64; n];
    let mut run_start = 0usize;
    for p in 0..n {
        if col[order[p]] != col[order[run_start]] {
            run_start = p;
        }
        out[order[p]] = bin_of_pos[run_start] as f64;
    }
    out
}

/// Depth-0 matrix: one column per configured base centrality, in config
/// order, log-binned.
pub fn compute_base_matrix(g: &SocialGraph, cfg: &EmbedConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let mut raw = Vec::new();
    let mut transformed = Vec::new();
    let mut definitions = Vec::new();
    for &base in &cfg.base_features {
        let v = centrality::compute_with(
            g,
            base,
            cfg.orientation,
            cfg.bc_mode(),
            PagerankParams::default(),
        )?;
        transformed.push(log_bin_transform(&v.values, cfg.bins, cfg.bin_fraction));
        raw.push(v.values);
        definitions.push(FeatureDefinition::base_only(base));
    }
    Ok(FeatureMatrix {
        definitions,
        raw,
        transformed,
        node_count: g.node_count(),
    })
}

/// Fraction of nodes on which two binned columns agree; 1.0 on empty graphs.
fn agreement(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let equal = a.iter().zip(b).filter(|(x, y)| x == y).count();
    equal as f64 / a.len() as f64
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let r = self.find(self.0[x]);
            self.0[x] = r;
        }
        self.0[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Indices of surviving columns: connect column pairs whose binned values
/// agree on >= `lambda` of nodes, keep the earliest column per connected
/// component.
fn prune_survivors(transformed: &[Vec<f64>], lambda: f64) -> Vec<usize> {
    let k = transformed.len();
    let mut uf = UnionFind::new(k);
    for i in 0..k {
        for j in (i + 1)..k {
            if agreement(&transformed[i], &transformed[j]) >= lambda {
                uf.union(i, j);
            }
        }
    }
    // Earliest index per component, in index order.
    let mut keep = Vec::new();
    for i in 0..k {
        if uf.find(i) == i {
            keep.push(i);
        }
    }
    keep
}

/// Drops redundant columns by binned-value agreement; the earliest column
/// in each agreement component survives. Idempotent.
pub fn prune_features(fm: &FeatureMatrix, lambda: f64) -> FeatureMatrix {
    let keep = prune_survivors(&fm.transformed, lambda);
    FeatureMatrix {
        definitions: keep.iter().map(|&i| fm.definitions[i].clone()).collect(),
        raw: keep.iter().map(|&i| fm.raw[i].clone()).collect(),
        transformed: keep.iter().map(|&i| fm.transformed[i].clone()).collect(),
        node_count: fm.node_count,
    }
}

/// Layer-wise feature learning: expand every surviving column of the
/// previous layer with every (direction x summary) operator, log-bin, then
/// prune by agreement. Stops after `ego_distance` layers or when a layer
/// contributes no surviving column.
pub fn learn_features(g: &SocialGraph, cfg: &EmbedConfig) -> Result<FeatureMatrix> {
    let mut fm = compute_base_matrix(g, cfg)?;
    let keep = prune_survivors(&fm.transformed, cfg.lambda);
    fm = select(&fm, &keep);
    let mut frontier: Vec<usize> = (0..fm.width()).collect();

    for _layer in 0..cfg.ego_distance {
        if frontier.is_empty() {
            break;
        }
        let first_new = fm.width();
        let mut new_raw = Vec::new();
        let mut new_transformed = Vec::new();
        let mut new_defs = Vec::new();
        for &parent in &frontier {
            for dir in Direction::ALL {
                for &summary in &cfg.summaries {
                    let raw = apply_operator(g, &fm.transformed[parent], dir, summary);
                    let transformed = log_bin_transform(&raw, cfg.bins, cfg.bin_fraction);
                    let mut ops = vec![RelOp { direction: dir, summary }];
                    ops.extend(fm.definitions[parent].ops.iter().copied());
                    new_defs.push(FeatureDefinition {
                        base: fm.definitions[parent].base,
                        ops,
                    });
                    new_raw.push(raw);
                    new_transformed.push(transformed);
                }
            }
        }
        fm.definitions.extend(new_defs);
        fm.raw.extend(new_raw);
        fm.transformed.extend(new_transformed);

        let keep = prune_survivors(&fm.transformed, cfg.lambda);
        fm = select(&fm, &keep);
        frontier = (0..fm.width()).filter(|&i| i >= keep.partition_point(|&k| k < first_new)).collect();
        // keep is sorted, so survivors at positions past the partition
        // point are exactly this layer's new columns.
        if frontier.is_empty() {
            break;
        }
    }
    Ok(fm)
}

fn select(fm: &FeatureMatrix, keep: &[usize]) -> FeatureMatrix {
    FeatureMatrix {
        definitions: keep.iter().map(|&i| fm.definitions[i].clone()).collect(),
        raw: keep.iter().map(|&i| fm.raw[i].clone()).collect(),
        transformed: keep.iter().map(|&i| fm.transformed[i].clone()).collect(),
        node_count: fm.node_count,
    }
}

/// Evaluates one recipe on a graph: base centrality, log-bin, then each
/// operator (innermost first) with re-binning after every step. This is
/// exactly the schedule `learn_features` uses, so replaying learned
/// definitions on the source graph reproduces the learned columns.
pub fn evaluate_definition(
    g: &SocialGraph,
    def: &FeatureDefinition,
    cfg: &EmbedConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !cfg.base_features.contains(&def.base) {
        return Err(Error::Definition(format!(
            "base feature {} not in config",
            def.base.name()
        )));
    }
    let base = centrality::compute_with(
        g,
        def.base,
        cfg.orientation,
        cfg.bc_mode(),
        PagerankParams::default(),
    )?;
    let mut raw = base.values;
    let mut binned = log_bin_transform(&raw, cfg.bins, cfg.bin_fraction);
    for op in def.ops.iter().rev() {
        raw = apply_operator(g, &binned, op.direction, op.summary);
        binned = log_bin_transform(&raw, cfg.bins, cfg.bin_fraction);
    }
    Ok((raw, binned))
}

/// Evaluates learned recipes on a (possibly different) graph without
/// pruning; column order matches `defs`.
pub fn transfer_features(
    defs: &[FeatureDefinition],
    g_target: &SocialGraph,
    cfg: &EmbedConfig,
) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let mut raw = Vec::with_capacity(defs.len());
    let mut transformed = Vec::with_capacity(defs.len());
    for def in defs {
        let (r, t) = evaluate_definition(g_target, def, cfg)?;
        raw.push(r);
        transformed.push(t);
    }
    Ok(FeatureMatrix {
        definitions: defs.to_vec(),
        raw,
        transformed,
        node_count: g_target.node_count(),
    })
}
