//! Supervised influencer identification: top-p% labeling, seeded
//! split/downsample, boosted-tree training with random hyperparameter
//! search, evaluation on the imbalanced test side, and the transfer and
//! training-fraction experiments.

pub mod gbdt;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::overlap::top_p_set;

pub use gbdt::{GbdtModel, GbdtParams};

/// Feature rows aligned 1:1 with binary labels; positives are the
/// top-p% nodes under the chosen score.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub feature_names: Vec<String>,
    pub labels: Vec<bool>,
    pub p: f64,
    pub score_name: String,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        feature_names: Vec<String>,
        scores: &[f64],
        p: f64,
        score_name: &str,
    ) -> Result<Self> {
        if features.len() != scores.len() {
            return Err(Error::Alignment(format!(
                "{} feature rows vs {} scores",
                features.len(),
                scores.len()
            )));
        }
        let labels = label_top_p(scores, p)?;
        Ok(LabeledDataset {
            features,
            feature_names,
            labels,
            p,
            score_name: score_name.to_string(),
        })
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
}

/// Marks the top-p% nodes (all nodes eligible) as positives.
pub fn label_top_p(scores: &[f64], p: f64) -> Result<Vec<bool>> {
    let eligible: Vec<NodeId> = (0..scores.len() as u32).map(NodeId).collect();
    let top = top_p_set("labels", scores, p, &eligible)?;
    Ok((0..scores.len() as u32)
        .map(|i| top.members.contains(&NodeId(i)))
        .collect())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction q of nodes used as the training side.
    pub train_fraction: f64,
    /// Share of the downsampled pool held out for tuning.
    pub tune_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.2,
            tune_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Row-index view of one split: balanced train/tune pools plus the
/// untouched (imbalanced) test side.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<usize>,
    pub tune: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded q-fraction node split; the training side is downsampled to
/// exact class balance and divided 80/20 into train/tune. The test side
/// keeps its natural class ratio.
pub fn split_and_downsample(ds: &LabeledDataset, spec: &SplitSpec) -> Result<Split> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction must be in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let n = ds.labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let train_n = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let (train_side, test) = order.split_at(train_n);
    let mut test: Vec<usize> = test.to_vec();
    test.sort_unstable();

    let mut pos: Vec<usize> = train_side.iter().copied().filter(|&i| ds.labels[i]).collect();
    let mut neg: Vec<usize> = train_side.iter().copied().filter(|&i| !ds.labels[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::DegenerateSplit(format!(
            "training side has {} positives and {} negatives",
            pos.len(),
            neg.len()
        )));
    }
    let m = pos.len().min(neg.len());
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    pos.truncate(m);
    neg.truncate(m);
    let mut pool: Vec<usize> = pos.into_iter().chain(neg).collect();
    pool.shuffle(&mut rng);
    let tune_n = ((spec.tune_fraction * pool.len() as f64).round() as usize).min(pool.len() - 1);
    let tune = pool.split_off(pool.len() - tune_n);
    Ok(Split {
        train: pool,
        tune,
        test,
    })
}

fn gather(ds: &LabeledDataset, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x = idx.iter().map(|&i| ds.features[i].clone()).collect();
    let y = idx
        .iter()
        .map(|&i| if ds.labels[i] { 1.0 } else { 0.0 })
        .collect();
    (x, y)
}

fn draw_params(rng: &mut ChaCha8Rng) -> GbdtParams {
    let lr_lo = 0.02f64.ln();
    let lr_hi = 0.3f64.ln();
    GbdtParams {
        num_trees: rng.gen_range(50..=400),
        max_leaves: rng.gen_range(7..=63),
        max_depth: 16,
        learning_rate: (lr_lo + rng.gen::<f64>() * (lr_hi - lr_lo)).exp(),
        min_samples_leaf: rng.gen_range(5..=50),
    }
}

/// Random hyperparameter search: `budget` seeded draws scored by tune-set
/// log loss, best configuration refit on the train pool. Ties keep the
/// earlier trial.
pub fn train(
    ds: &LabeledDataset,
    split: &Split,
    budget: usize,
    seed: u64,
) -> Result<GbdtModel> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be >= 1".into()));
    }
    if split.tune.is_empty() {
        return Err(Error::DegenerateSplit("empty tune set".into()));
    }
    let (train_x, train_y) = gather(ds, &split.train);
    let (tune_x, tune_y) = gather(ds, &split.tune);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // A leaf floor above a quarter of the pool forbids any split on small
    // pools; cap it so every draw stays a usable configuration.
    let leaf_cap = (split.train.len() / 4).max(1);
    let candidates: Vec<GbdtParams> = (0..budget)
        .map(|_| {
            let mut p = draw_params(&mut rng);
            p.min_samples_leaf = p.min_samples_leaf.min(leaf_cap);
            p
        })
        .collect();
    let losses: Vec<f64> = candidates
        .par_iter()
        .map(|&params| {
            let model = GbdtModel::fit(&train_x, &train_y, params);
            gbdt::log_loss(&model, &tune_x, &tune_y)
        })
        .collect();
    let best = losses
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.total_cmp(b).then(i.cmp(j)))
        .map(|(i, _)| i)
        .unwrap();
    Ok(GbdtModel::fit(&train_x, &train_y, candidates[best]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

pub fn metrics_from_counts(tp: usize, fp: usize, fn_: usize) -> Metrics {
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Metrics {
        precision,
        recall,
        f1,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
    }
}

/// Precision/recall/F1 at probability threshold 0.5.
pub fn evaluate(model: &GbdtModel, ds: &LabeledDataset, rows: &[usize]) -> Metrics {
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for &i in rows {
        let predicted = model.predict_proba(&ds.features[i]) > 0.5;
        match (predicted, ds.labels[i]) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    metrics_from_counts(tp, fp, fn_)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub p: f64,
    pub q: f64,
    pub source_domain: String,
    pub target_domain: String,
    pub feature_set: String,
}

/// Aggregated outcome of repeated split/train/evaluate runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub runs: Vec<Metrics>,
    /// (feature name, mean total split gain), descending.
    pub feature_importance: Vec<(String, f64)>,
    pub metadata: ReportMetadata,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn rank_importance(names: &[String], gains: &[f64]) -> Vec<(String, f64)> {
    let mut pairs: Vec<(String, f64)> = names.iter().cloned().zip(gains.iter().copied()).collect();
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    pairs
}

/// The full in-domain protocol: `runs` repetitions of split -> search ->
/// train -> evaluate with per-run derived seeds, averaged.
pub fn run_protocol(
    ds: &LabeledDataset,
    spec: &SplitSpec,
    budget: usize,
    runs: usize,
    domain: &str,
) -> Result<PredictionReport> {
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be >= 1".into()));
    }
    let per_run: Vec<Result<(Metrics, Vec<f64>)>> = (0..runs as u64)
        .map(|r| {
            let run_spec = SplitSpec {
                seed: spec.seed.wrapping_add(r),
                ..*spec
            };
            let split = split_and_downsample(ds, &run_spec)?;
            let model = train(ds, &split, budget, run_spec.seed ^ 0x9e3779b97f4a7c15)?;
            let m = evaluate(&model, ds, &split.test);
            Ok((m, model.feature_gains()))
        })
        .collect();
    let mut metrics = Vec::with_capacity(runs);
    let mut gain_acc = vec![0.0f64; ds.feature_names.len()];
    for r in per_run {
        let (m, gains) = r?;
        metrics.push(m);
        for (a, g) in gain_acc.iter_mut().zip(gains) {
            *a += g;
        }
    }
    for a in &mut gain_acc {
        *a /= runs as f64;
    }
    Ok(PredictionReport {
        precision: mean(metrics.iter().map(|m| m.precision)),
        recall: mean(metrics.iter().map(|m| m.recall)),
        f1: mean(metrics.iter().map(|m| m.f1)),
        runs: metrics,
        feature_importance: rank_importance(&ds.feature_names, &gain_acc),
        metadata: ReportMetadata {
            seed: spec.seed,
            p: ds.p,
            q: spec.train_fraction,
            source_domain: domain.to_string(),
            target_domain: domain.to_string(),
            feature_set: String::new(),
        },
    })
}

/// Trains on the source domain per the in-domain protocol and evaluates
/// every target node. Feature columns must align 1:1 between domains.
pub fn transfer_evaluate(
    source: &LabeledDataset,
    target: &LabeledDataset,
    spec: &SplitSpec,
    budget: usize,
    runs: usize,
    source_domain: &str,
    target_domain: &str,
) -> Result<PredictionReport> {
    if source.feature_names != target.feature_names {
        return Err(Error::Alignment(format!(
            "source has {} feature columns, target has {}",
            source.feature_names.len(),
            target.feature_names.len()
        )));
    }
    let all_target: Vec<usize> = (0..target.labels.len()).collect();
    let mut metrics = Vec::with_capacity(runs);
    let mut gain_acc = vec![0.0f64; source.feature_names.len()];
    for r in 0..runs as u64 {
        let run_spec = SplitSpec {
            seed: spec.seed.wrapping_add(r),
            ..*spec
        };
        let split = split_and_downsample(source, &run_spec)?;
        let model = train(source, &split, budget, run_spec.seed ^ 0x9e3779b97f4a7c15)?;
        metrics.push(evaluate(&model, target, &all_target));
        for (a, g) in gain_acc.iter_mut().zip(model.feature_gains()) {
            *a += g;
        }
    }
    for a in &mut gain_acc {
        *a /= runs as f64;
    }
    Ok(PredictionReport {
        precision: mean(metrics.iter().map(|m| m.precision)),
        recall: mean(metrics.iter().map(|m| m.recall)),
        f1: mean(metrics.iter().map(|m| m.f1)),
        runs: metrics,
        feature_importance: rank_importance(&source.feature_names, &gain_acc),
        metadata: ReportMetadata {
            seed: spec.seed,
            p: source.p,
            q: spec.train_fraction,
            source_domain: source_domain.to_string(),
            target_domain: target_domain.to_string(),
            feature_set: String::new(),
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub fraction: f64,
    pub mean_f1: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
}

/// Mean scores per training fraction over `runs` seeds.
pub fn training_fraction_sweep(
    ds: &LabeledDataset,
    fractions: &[f64],
    spec: &SplitSpec,
    budget: usize,
    runs: usize,
    domain: &str,
) -> Result<Vec<SweepPoint>> {
    fractions
        .iter()
        .map(|&q| {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "sweep fraction must be in (0, 1), got {q}"
                )));
            }
            let point_spec = SplitSpec {
                train_fraction: q,
                ..*spec
            };
            let report = run_protocol(ds, &point_spec, budget, runs, domain)?;
            Ok(SweepPoint {
                fraction: q,
                mean_f1: report.f1,
                mean_precision: report.precision,
                mean_recall: report.recall,
            })
        })
        .collect()
}
