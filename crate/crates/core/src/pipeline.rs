//! Pipeline orchestration: a JSON run-config, ordered stages, and
//! reproducible artifacts with a provenance manifest.
//!
//! One global seed derives per-stage seeds by stable hashing of the stage
//! name, so changing one stage's parameters does not perturb another
//! stage's randomness.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cascade::CascadeSet;
use crate::centrality::{self, BetweennessMode, Measure, PagerankParams};
use crate::embed::{self, EmbedConfig, FeatureDefinition, FeatureMatrix};
use crate::error::{Error, Result};
use crate::graph::{NodeId, SocialGraph};
use crate::influence::{self, InfluenceTable};
use crate::overlap;
use crate::predict::{self, LabeledDataset, SplitSpec};
use crate::synth::{self, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreChoice {
    Broker,
    Source,
}

impl ScoreChoice {
    pub fn name(self) -> &'static str {
        match self {
            ScoreChoice::Broker => "broker",
            ScoreChoice::Source => "source",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    Centrality,
    Embedding,
}

impl FeatureMode {
    pub fn name(self) -> &'static str {
        match self {
            FeatureMode::Centrality => "centrality",
            FeatureMode::Embedding => "embedding",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub graph_path: Option<PathBuf>,
    pub cascades_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub p: f64,
    pub score: ScoreChoice,
    pub feature_mode: FeatureMode,
    pub train_fraction: f64,
    pub budget: usize,
    pub runs: usize,
    pub strict_cascades: bool,
    pub embed: EmbedConfig,
    pub synth: SynthConfig,
    pub sweep_fractions: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            graph_path: None,
            cascades_path: None,
            out_dir: PathBuf::from("out"),
            seed: 0,
            p: 10.0,
            score: ScoreChoice::Broker,
            feature_mode: FeatureMode::Embedding,
            train_fraction: 0.2,
            budget: 30,
            runs: 10,
            strict_cascades: true,
            embed: EmbedConfig::default(),
            synth: SynthConfig::default(),
            sweep_fractions: vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Per-stage seed: global seed mixed with a stable hash of the stage name.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        self.seed ^ fnv64(stage.as_bytes())
    }
}

pub fn fnv64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Synth,
    Ingest,
    Scores,
    Centrality,
    Embed,
    Overlap,
    Label,
    Train,
    Sweep,
}

impl Stage {
    pub const DEFAULT_ORDER: [Stage; 9] = [
        Stage::Synth,
        Stage::Ingest,
        Stage::Scores,
        Stage::Centrality,
        Stage::Embed,
        Stage::Overlap,
        Stage::Label,
        Stage::Train,
        Stage::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Ingest => "ingest",
            Stage::Scores => "scores",
            Stage::Centrality => "centrality",
            Stage::Embed => "embed",
            Stage::Overlap => "overlap",
            Stage::Label => "label",
            Stage::Train => "train",
            Stage::Sweep => "sweep",
        }
    }

    pub fn parse(s: &str) -> Result<Stage> {
        Stage::DEFAULT_ORDER
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub artifacts: Vec<String>,
    pub input_hashes: HashMap<String, String>,
    pub seed: u64,
    pub wall_time_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub stages: Vec<StageRecord>,
    pub failed_stage: Option<String>,
}

/// In-memory state threaded through the stages of one run.
#[derive(Default)]
pub struct PipelineState {
    pub graph: Option<SocialGraph>,
    pub cascades: Option<CascadeSet>,
    pub influence: Option<InfluenceTable>,
    pub centrality: Option<Vec<(Measure, Vec<f64>)>>,
    pub embedding: Option<FeatureMatrix>,
}

impl PipelineState {
    fn graph(&self, stage: Stage) -> Result<&SocialGraph> {
        self.graph.as_ref().ok_or_else(|| Error::MissingDependency {
            stage: stage.name().into(),
            artifact: "graph (run synth or ingest)".into(),
        })
    }

    fn cascades(&self, stage: Stage) -> Result<&CascadeSet> {
        self.cascades.as_ref().ok_or_else(|| Error::MissingDependency {
            stage: stage.name().into(),
            artifact: "cascades (run synth or ingest)".into(),
        })
    }

    fn influence(&self, stage: Stage) -> Result<&InfluenceTable> {
        self.influence.as_ref().ok_or_else(|| Error::MissingDependency {
            stage: stage.name().into(),
            artifact: "influence table (run scores)".into(),
        })
    }

    fn centrality(&self, stage: Stage) -> Result<&Vec<(Measure, Vec<f64>)>> {
        self.centrality.as_ref().ok_or_else(|| Error::MissingDependency {
            stage: stage.name().into(),
            artifact: "centrality vectors (run centrality)".into(),
        })
    }

    fn embedding(&self, stage: Stage) -> Result<&FeatureMatrix> {
        self.embedding.as_ref().ok_or_else(|| Error::MissingDependency {
            stage: stage.name().into(),
            artifact: "feature matrix (run embed)".into(),
        })
    }
}

/// The five comparison measures (degree folded into one total-degree column).
pub const CENTRALITY_MEASURES: [Measure; 5] = [
    Measure::TotalDegree,
    Measure::Betweenness,
    Measure::Closeness,
    Measure::Pagerank,
    Measure::Kcore,
];

/// Runs `stages` in order, persisting each stage's artifacts under
/// `config.out_dir` and a manifest with config snapshot, input hashes, and
/// per-stage wall time. Reruns with identical inputs reproduce identical
/// artifacts (the manifest's timings excepted).
pub fn run_pipeline(config: &RunConfig, stages: &[Stage]) -> Result<Manifest> {
    std::fs::create_dir_all(&config.out_dir)?;
    let mut state = PipelineState::default();
    let mut manifest = Manifest {
        config: config.clone(),
        stages: Vec::new(),
        failed_stage: None,
    };
    for &stage in stages {
        let started = Instant::now();
        let result = run_stage(config, stage, &mut state);
        match result {
            Ok((artifacts, input_hashes)) => {
                manifest.stages.push(StageRecord {
                    stage: stage.name().into(),
                    artifacts,
                    input_hashes,
                    seed: config.stage_seed(stage.name()),
                    wall_time_ms: started.elapsed().as_millis(),
                });
            }
            Err(e) => {
                manifest.failed_stage = Some(stage.name().into());
                write_manifest(config, &manifest)?;
                return Err(e);
            }
        }
    }
    write_manifest(config, &manifest)?;
    Ok(manifest)
}

fn write_manifest(config: &RunConfig, manifest: &Manifest) -> Result<()> {
    let path = config.out_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

type StageOutcome = (Vec<String>, HashMap<String, String>);

fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(format!("{:016x}", fnv64(&bytes)))
}

fn run_stage(config: &RunConfig, stage: Stage, state: &mut PipelineState) -> Result<StageOutcome> {
    let out = &config.out_dir;
    let mut artifacts = Vec::new();
    let mut hashes = HashMap::new();
    match stage {
        Stage::Synth => {
            let mut synth_cfg = config.synth.clone();
            synth_cfg.seed = config.stage_seed("synth");
            let g = synth::gen_graph(&synth_cfg)?;
            let cs = synth::gen_cascades(&g, &synth_cfg)?;
            let graph_path = out.join("graph.edges");
            let mut text = String::new();
            for (u, v) in g.edges() {
                text.push_str(g.label(u));
                text.push('\t');
                text.push_str(g.label(v));
                text.push('\n');
            }
            std::fs::write(&graph_path, text)?;
            let cascades_path = out.join("cascades.jsonl");
            cs.write_jsonl(&cascades_path, &g)?;
            artifacts.push("graph.edges".into());
            artifacts.push("cascades.jsonl".into());
            state.graph = Some(g);
            state.cascades = Some(cs);
        }
        Stage::Ingest => {
            let graph_path = match &config.graph_path {
                Some(p) => p.clone(),
                None => out.join("graph.edges"),
            };
            if !graph_path.exists() {
                return Err(Error::MissingDependency {
                    stage: "ingest".into(),
                    artifact: format!("{} (run synth or set graph_path)", graph_path.display()),
                });
            }
            let cascades_path = match &config.cascades_path {
                Some(p) => p.clone(),
                None => out.join("cascades.jsonl"),
            };
            if !cascades_path.exists() {
                return Err(Error::MissingDependency {
                    stage: "ingest".into(),
                    artifact: format!(
                        "{} (run synth or set cascades_path)",
                        cascades_path.display()
                    ),
                });
            }
            hashes.insert("graph".into(), hash_file(&graph_path)?);
            hashes.insert("cascades".into(), hash_file(&cascades_path)?);
            let g = SocialGraph::load_edge_list(&graph_path, true)?;
            let cs = CascadeSet::load_jsonl(&cascades_path, &g, config.strict_cascades)?;
            let summary = serde_json::json!({
                "nodes": g.node_count(),
                "edges": g.edge_count(),
                "cascades": cs.len(),
            });
            std::fs::write(out.join("ingest.json"), serde_json::to_string_pretty(&summary)?)?;
            artifacts.push("ingest.json".into());
            state.graph = Some(g);
            state.cascades = Some(cs);
        }
        Stage::Scores => {
            let g = state.graph(stage)?;
            let cs = state.cascades(stage)?;
            let table = influence::build_influence_table(cs, g.node_count());
            write_scores_csv(&out.join("scores.csv"), g, &table)?;
            artifacts.push("scores.csv".into());
            state.influence = Some(table);
        }
        Stage::Centrality => {
            let g = state.graph(stage)?;
            let bc_mode = match config.embed.betweenness_pivots {
                Some((pivots, _)) => BetweennessMode::Sampled {
                    pivots,
                    seed: config.stage_seed("centrality"),
                },
                None => BetweennessMode::Exact,
            };
            let vectors: Vec<(Measure, Vec<f64>)> = CENTRALITY_MEASURES
                .iter()
                .map(|&m| {
                    centrality::compute_with(
                        g,
                        m,
                        config.embed.orientation,
                        bc_mode,
                        PagerankParams::default(),
                    )
                    .map(|v| (m, v.values))
                })
                .collect::<Result<_>>()?;
            write_centrality_csv(&out.join("centrality.csv"), g, &vectors)?;
            artifacts.push("centrality.csv".into());
            state.centrality = Some(vectors);
        }
        Stage::Embed => {
            let g = state.graph(stage)?;
            let mut cfg = config.embed.clone();
            if let Some((pivots, _)) = cfg.betweenness_pivots {
                cfg.betweenness_pivots = Some((pivots, config.stage_seed("embed")));
            }
            let fm = embed::learn_features(g, &cfg)?;
            write_embedding_csv(&out.join("embedding.csv"), g, &fm)?;
            let defs_json = serde_json::to_string_pretty(&fm.definitions)?;
            std::fs::write(out.join("feature_defs.json"), defs_json)?;
            artifacts.push("embedding.csv".into());
            artifacts.push("feature_defs.json".into());
            state.embedding = Some(fm);
        }
        Stage::Overlap => {
            let g = state.graph(stage)?;
            let table = state.influence(stage)?;
            let vectors = state.centrality(stage)?;
            let mut maps: Vec<(String, Vec<f64>)> = vec![
                (
                    "broker".into(),
                    table.broker_score.iter().map(|&x| x as f64).collect(),
                ),
                (
                    "source".into(),
                    table.source_score.iter().map(|&x| x as f64).collect(),
                ),
            ];
            for (m, values) in vectors {
                maps.push((m.name().into(), values.clone()));
            }
            let eligible: Vec<NodeId> = g.nodes().collect();
            let matrix = overlap::overlap_matrix(&maps, config.p, &eligible)?;
            write_overlap(&out.join("overlap.csv"), &out.join("overlap.json"), &matrix)?;
            artifacts.push("overlap.csv".into());
            artifacts.push("overlap.json".into());
        }
        Stage::Label => {
            let g = state.graph(stage)?;
            let table = state.influence(stage)?;
            let scores = score_column(table, config.score);
            let labels = predict::label_top_p(&scores, config.p)?;
            let mut text = String::from("user,score,label\n");
            for u in g.nodes() {
                text.push_str(&format!(
                    "{},{},{}\n",
                    g.label(u),
                    scores[u.index()],
                    labels[u.index()] as u8
                ));
            }
            std::fs::write(out.join("labels.csv"), text)?;
            artifacts.push("labels.csv".into());
        }
        Stage::Train => {
            let ds = build_dataset(config, state, stage)?;
            let spec = SplitSpec {
                train_fraction: config.train_fraction,
                tune_fraction: 0.2,
                seed: config.stage_seed("train"),
            };
            let mut report =
                predict::run_protocol(&ds, &spec, config.budget, config.runs, "in-domain")?;
            report.metadata.feature_set = config.feature_mode.name().into();
            std::fs::write(
                out.join("report.json"),
                serde_json::to_string_pretty(&report)?,
            )?;
            let summary = format!(
                "score,p,q,feature_mode,precision,recall,f1\n{},{},{},{},{},{},{}\n",
                config.score.name(),
                config.p,
                config.train_fraction,
                config.feature_mode.name(),
                report.precision,
                report.recall,
                report.f1
            );
            std::fs::write(out.join("report.csv"), summary)?;
            artifacts.push("report.json".into());
            artifacts.push("report.csv".into());
        }
        Stage::Sweep => {
            let ds = build_dataset(config, state, stage)?;
            let spec = SplitSpec {
                train_fraction: config.train_fraction,
                tune_fraction: 0.2,
                seed: config.stage_seed("sweep"),
            };
            let points = predict::training_fraction_sweep(
                &ds,
                &config.sweep_fractions,
                &spec,
                config.budget,
                config.runs,
                "in-domain",
            )?;
            let mut text = String::from("fraction,mean_precision,mean_recall,mean_f1\n");
            for pt in &points {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    pt.fraction, pt.mean_precision, pt.mean_recall, pt.mean_f1
                ));
            }
            std::fs::write(out.join("sweep.csv"), text)?;
            artifacts.push("sweep.csv".into());
        }
    }
    Ok((artifacts, hashes))
}

pub fn score_column(table: &InfluenceTable, choice: ScoreChoice) -> Vec<f64> {
    match choice {
        ScoreChoice::Broker => table.broker_score.iter().map(|&x| x as f64).collect(),
        ScoreChoice::Source => table.source_score.iter().map(|&x| x as f64).collect(),
    }
}

/// Assembles the labeled dataset for the configured feature mode from
/// pipeline state.
pub fn build_dataset(
    config: &RunConfig,
    state: &PipelineState,
    stage: Stage,
) -> Result<LabeledDataset> {
    let table = state.influence(stage)?;
    let scores = score_column(table, config.score);
    let (rows, names) = match config.feature_mode {
        FeatureMode::Centrality => {
            let vectors = state.centrality(stage)?;
            let names: Vec<String> = vectors.iter().map(|(m, _)| m.name().to_string()).collect();
            let n = vectors.first().map(|(_, v)| v.len()).unwrap_or(0);
            let rows = (0..n)
                .map(|i| vectors.iter().map(|(_, v)| v[i]).collect())
                .collect();
            (rows, names)
        }
        FeatureMode::Embedding => {
            let fm = state.embedding(stage)?;
            let names = fm.definitions.iter().map(|d| d.render()).collect();
            (fm.rows(), names)
        }
    };
    LabeledDataset::new(rows, names, &scores, config.p, config.score.name())
}

fn write_scores_csv(path: &Path, g: &SocialGraph, table: &InfluenceTable) -> Result<()> {
    let mut text = String::from("user,source_score,broker_score,retweet_count,broker_per_retweet\n");
    for u in g.nodes() {
        let i = u.index();
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            g.label(u),
            table.source_score[i],
            table.broker_score[i],
            table.retweet_count[i],
            table.broker_per_retweet[i]
        ));
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_centrality_csv(
    path: &Path,
    g: &SocialGraph,
    vectors: &[(Measure, Vec<f64>)],
) -> Result<()> {
    let mut text = String::from("user");
    for (m, _) in vectors {
        text.push(',');
        text.push_str(m.name());
    }
    text.push('\n');
    for u in g.nodes() {
        text.push_str(g.label(u));
        for (_, v) in vectors {
            text.push_str(&format!(",{}", v[u.index()]));
        }
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_embedding_csv(path: &Path, g: &SocialGraph, fm: &FeatureMatrix) -> Result<()> {
    let mut text = String::from("user");
    for def in &fm.definitions {
        text.push(',');
        text.push_str(&def.render());
    }
    text.push('\n');
    for u in g.nodes() {
        text.push_str(g.label(u));
        for col in &fm.transformed {
            text.push_str(&format!(",{}", col[u.index()]));
        }
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_overlap(
    csv_path: &Path,
    json_path: &Path,
    matrix: &overlap::OverlapMatrix,
) -> Result<()> {
    let mut text = String::from("score");
    for name in &matrix.names {
        text.push(',');
        text.push_str(name);
    }
    text.push('\n');
    for (name, row) in matrix.names.iter().zip(&matrix.values) {
        text.push_str(name);
        for v in row {
            text.push_str(&format!(",{v}"));
        }
        text.push('\n');
    }
    std::fs::write(csv_path, text)?;
    let json = serde_json::json!({
        "names": matrix.names,
        "values": matrix.values,
    });
    std::fs::write(json_path, serde_json::to_string_pretty(&json)?)?;
    Ok(())
}

/// Loads feature definitions from the JSON sidecar `embed` writes.
pub fn load_definitions(path: impl AsRef<Path>) -> Result<Vec<FeatureDefinition>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
