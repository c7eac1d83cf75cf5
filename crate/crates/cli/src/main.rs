//! `brokers`: command-line front end for the influential-broker pipeline.
//!
//! Every subcommand reads an optional JSON run-config (`--config`), applies
//! flag overrides, and writes artifacts under `--out` (default `out/`).

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use brokers_core::cascade::CascadeSet;
use brokers_core::centrality::{self, Measure, PagerankParams};
use brokers_core::embed;
use brokers_core::graph::SocialGraph;
use brokers_core::influence;
use brokers_core::pipeline::{
    self, load_definitions, run_pipeline, FeatureMode, RunConfig, ScoreChoice, Stage,
    CENTRALITY_MEASURES,
};
use brokers_core::predict::{self, LabeledDataset, SplitSpec};

#[derive(Parser)]
#[command(
    name = "brokers",
    version,
    about = "Influential-broker identification: cascade scores, centrality, \
             relational embeddings, and a top-p% influencer classifier"
)]
struct Cli {
    /// JSON run configuration; command-line flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Global random seed (per-stage seeds are derived from it).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for output artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Flags shared by commands that read a graph and cascades from disk.
#[derive(Args, Clone, Default)]
struct InputArgs {
    /// Edge-list file (`follower<TAB>followee` per line).
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,

    /// Cascade file (one JSON object per line).
    #[arg(long, value_name = "FILE")]
    cascades: Option<PathBuf>,

    /// Skip cascade events naming unknown users instead of failing.
    #[arg(long)]
    lenient: bool,
}

/// Flags shared by the supervised experiment commands.
#[derive(Args, Clone, Default)]
struct ExperimentArgs {
    /// Label the top p% of nodes as influencers.
    #[arg(long)]
    p: Option<f64>,

    /// Fraction q of nodes used as the training side.
    #[arg(long)]
    q: Option<f64>,

    /// Labeling score: broker or source.
    #[arg(long)]
    score: Option<String>,

    /// Feature set: centrality or embedding.
    #[arg(long)]
    feature_mode: Option<String>,

    /// Random hyperparameter draws per run.
    #[arg(long)]
    budget: Option<usize>,

    /// Number of repeated split/train/evaluate runs to average.
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and summarize a graph and cascade corpus.
    Ingest(InputArgs),

    /// Generate a synthetic follow graph and retweet cascades.
    Synth {
        #[arg(long)]
        nodes: Option<usize>,
        /// Number of cascades to simulate.
        #[arg(long)]
        cascades: Option<usize>,
        /// Follows added by each arriving node.
        #[arg(long)]
        attachment_edges: Option<usize>,
        /// Per-edge activation probability.
        #[arg(long)]
        activation_prob: Option<f64>,
        /// Planted brokers with boosted retweet propensity.
        #[arg(long)]
        brokers: Option<usize>,
    },

    /// Compute source-spreader and broker scores (scores.csv).
    Scores(InputArgs),

    /// Compute the five centrality measures (centrality.csv).
    Centrality(InputArgs),

    /// Learn relational feature embeddings (embedding.csv + feature_defs.json).
    Embed {
        #[command(flatten)]
        input: InputArgs,
        /// Pruning threshold on binned column agreement.
        #[arg(long)]
        lambda: Option<f64>,
        /// Maximum operator-composition depth.
        #[arg(long)]
        ego_distance: Option<usize>,
        /// Number of logarithmic bins.
        #[arg(long)]
        bins: Option<usize>,
        /// Fraction of remaining nodes absorbed per bin.
        #[arg(long)]
        bin_fraction: Option<f64>,
        /// Comma-separated base measures (e.g. total_degree,pagerank).
        #[arg(long)]
        base_features: Option<String>,
        /// Evaluate previously learned definitions instead of learning.
        #[arg(long, value_name = "DEFS_JSON")]
        transfer: Option<PathBuf>,
    },

    /// Top-p% overlap matrix across scores and measures (overlap.csv/json).
    Overlap {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        p: Option<f64>,
    },

    /// Emit per-node binary influencer labels (labels.csv).
    Label {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        exp: ExperimentArgs,
    },

    /// Run the supervised protocol and write report.json/report.csv.
    Train {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        exp: ExperimentArgs,
    },

    /// Run the supervised protocol and print the report to stdout.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        exp: ExperimentArgs,
    },

    /// Train on the source domain, evaluate on a target domain.
    Transfer {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, value_name = "FILE")]
        target_graph: PathBuf,
        #[arg(long, value_name = "FILE")]
        target_cascades: PathBuf,
    },

    /// F1 versus training fraction (sweep.csv).
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Comma-separated training fractions.
        #[arg(long)]
        fractions: Option<String>,
    },

    /// Run stages end to end with a provenance manifest.
    Pipeline {
        /// Comma-separated stage list (default: all nine stages in order).
        #[arg(long)]
        stages: Option<String>,
    },
}

fn parse_score(s: &str) -> Result<ScoreChoice> {
    match s {
        "broker" => Ok(ScoreChoice::Broker),
        "source" => Ok(ScoreChoice::Source),
        other => bail!("unknown score {other:?} (expected broker or source)"),
    }
}

fn parse_feature_mode(s: &str) -> Result<FeatureMode> {
    match s {
        "centrality" => Ok(FeatureMode::Centrality),
        "embedding" => Ok(FeatureMode::Embedding),
        other => bail!("unknown feature mode {other:?} (expected centrality or embedding)"),
    }
}

fn base_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn apply_input(cfg: &mut RunConfig, input: &InputArgs) {
    if let Some(g) = &input.graph {
        cfg.graph_path = Some(g.clone());
    }
    if let Some(c) = &input.cascades {
        cfg.cascades_path = Some(c.clone());
    }
    if input.lenient {
        cfg.strict_cascades = false;
    }
}

fn apply_experiment(cfg: &mut RunConfig, exp: &ExperimentArgs) -> Result<()> {
    if let Some(p) = exp.p {
        cfg.p = p;
    }
    if let Some(q) = exp.q {
        cfg.train_fraction = q;
    }
    if let Some(s) = &exp.score {
        cfg.score = parse_score(s)?;
    }
    if let Some(m) = &exp.feature_mode {
        cfg.feature_mode = parse_feature_mode(m)?;
    }
    if let Some(b) = exp.budget {
        cfg.budget = b;
    }
    if let Some(r) = exp.runs {
        cfg.runs = r;
    }
    Ok(())
}

fn parse_fraction_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad fraction {t:?}"))
        })
        .collect()
}

/// Runs `stages` after Ingest, printing each stage's artifacts.
fn run_stages(cfg: &RunConfig, stages: &[Stage]) -> Result<()> {
    let manifest = run_pipeline(cfg, stages)?;
    for record in &manifest.stages {
        for artifact in &record.artifacts {
            println!("{}: wrote {}", record.stage, cfg.out_dir.join(artifact).display());
        }
    }
    Ok(())
}

/// Loads the graph and cascades directly (for commands that bypass the
/// staged pipeline).
fn load_inputs(cfg: &RunConfig) -> Result<(SocialGraph, CascadeSet)> {
    let graph_path = cfg
        .graph_path
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join("graph.edges"));
    let cascades_path = cfg
        .cascades_path
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join("cascades.jsonl"));
    let g = SocialGraph::load_edge_list(&graph_path, true)
        .with_context(|| format!("loading graph {}", graph_path.display()))?;
    let cs = CascadeSet::load_jsonl(&cascades_path, &g, cfg.strict_cascades)
        .with_context(|| format!("loading cascades {}", cascades_path.display()))?;
    Ok((g, cs))
}

/// Builds the labeled dataset for one domain per the configured score and
/// feature mode. In embedding mode, feature recipes are learned on the
/// graph unless `defs` pins an existing recipe set (transfer).
fn build_domain_dataset(
    cfg: &RunConfig,
    g: &SocialGraph,
    cs: &CascadeSet,
    defs: Option<&[embed::FeatureDefinition]>,
) -> Result<(LabeledDataset, Vec<embed::FeatureDefinition>)> {
    let table = influence::build_influence_table(cs, g.node_count());
    let scores = pipeline::score_column(&table, cfg.score);
    let (rows, names, defs_out) = match cfg.feature_mode {
        FeatureMode::Centrality => {
            let mut columns: Vec<(Measure, Vec<f64>)> = Vec::new();
            for &m in &CENTRALITY_MEASURES {
                let v = centrality::compute_with(
                    g,
                    m,
                    cfg.embed.orientation,
                    centrality::BetweennessMode::Exact,
                    PagerankParams::default(),
                )?;
                columns.push((m, v.values));
            }
            let names: Vec<String> = columns.iter().map(|(m, _)| m.name().to_string()).collect();
            let rows = (0..g.node_count())
                .map(|i| columns.iter().map(|(_, v)| v[i]).collect())
                .collect();
            (rows, names, Vec::new())
        }
        FeatureMode::Embedding => {
            let fm = match defs {
                Some(defs) => embed::transfer_features(defs, g, &cfg.embed)?,
                None => embed::learn_features(g, &cfg.embed)?,
            };
            let names = fm.definitions.iter().map(|d| d.render()).collect();
            (fm.rows(), names, fm.definitions)
        }
    };
    let ds = LabeledDataset::new(rows, names, &scores, cfg.p, cfg.score.name())?;
    Ok((ds, defs_out))
}

fn split_spec(cfg: &RunConfig, stage: &str) -> SplitSpec {
    SplitSpec {
        train_fraction: cfg.train_fraction,
        tune_fraction: 0.2,
        seed: cfg.stage_seed(stage),
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring thread pool")?;
    }
    let mut cfg = base_config(&cli)?;

    match &cli.command {
        Command::Ingest(input) => {
            apply_input(&mut cfg, input);
            run_stages(&cfg, &[Stage::Ingest])?;
        }
        Command::Synth {
            nodes,
            cascades,
            attachment_edges,
            activation_prob,
            brokers,
        } => {
            if let Some(n) = nodes {
                cfg.synth.nodes = *n;
            }
            if let Some(c) = cascades {
                cfg.synth.cascade_count = *c;
            }
            if let Some(m) = attachment_edges {
                cfg.synth.attachment_edges = *m;
            }
            if let Some(p) = activation_prob {
                cfg.synth.edge_activation_prob = *p;
            }
            if let Some(b) = brokers {
                cfg.synth.planted_brokers = *b;
            }
            run_stages(&cfg, &[Stage::Synth])?;
        }
        Command::Scores(input) => {
            apply_input(&mut cfg, input);
            run_stages(&cfg, &[Stage::Ingest, Stage::Scores])?;
        }
        Command::Centrality(input) => {
            apply_input(&mut cfg, input);
            run_stages(&cfg, &[Stage::Ingest, Stage::Centrality])?;
        }
        Command::Embed {
            input,
            lambda,
            ego_distance,
            bins,
            bin_fraction,
            base_features,
            transfer,
        } => {
            apply_input(&mut cfg, input);
            if let Some(l) = lambda {
                cfg.embed.lambda = *l;
            }
            if let Some(d) = ego_distance {
                cfg.embed.ego_distance = *d;
            }
            if let Some(b) = bins {
                cfg.embed.bins = *b;
            }
            if let Some(f) = bin_fraction {
                cfg.embed.bin_fraction = *f;
            }
            if let Some(list) = base_features {
                cfg.embed.base_features = list
                    .split(',')
                    .map(|t| Measure::parse(t.trim()))
                    .collect::<brokers_core::Result<_>>()?;
            }
            match transfer {
                None => run_stages(&cfg, &[Stage::Ingest, Stage::Embed])?,
                Some(defs_path) => {
                    let defs = load_definitions(defs_path)
                        .with_context(|| format!("loading {}", defs_path.display()))?;
                    let (g, _) = load_inputs(&cfg)?;
                    let fm = embed::transfer_features(&defs, &g, &cfg.embed)?;
                    std::fs::create_dir_all(&cfg.out_dir)?;
                    let out_csv = cfg.out_dir.join("embedding.csv");
                    write_embedding_csv(&out_csv, &g, &fm)?;
                    println!("embed: wrote {} (transferred {} recipes)", out_csv.display(), defs.len());
                }
            }
        }
        Command::Overlap { input, p } => {
            apply_input(&mut cfg, input);
            if let Some(p) = p {
                cfg.p = *p;
            }
            run_stages(
                &cfg,
                &[Stage::Ingest, Stage::Scores, Stage::Centrality, Stage::Overlap],
            )?;
        }
        Command::Label { input, exp } => {
            apply_input(&mut cfg, input);
            apply_experiment(&mut cfg, exp)?;
            run_stages(&cfg, &[Stage::Ingest, Stage::Scores, Stage::Label])?;
        }
        Command::Train { input, exp } | Command::Evaluate { input, exp } => {
            apply_input(&mut cfg, input);
            apply_experiment(&mut cfg, exp)?;
            let feature_stage = match cfg.feature_mode {
                FeatureMode::Centrality => Stage::Centrality,
                FeatureMode::Embedding => Stage::Embed,
            };
            run_stages(&cfg, &[Stage::Ingest, Stage::Scores, feature_stage, Stage::Train])?;
            if matches!(cli.command, Command::Evaluate { .. }) {
                let report = std::fs::read_to_string(cfg.out_dir.join("report.json"))?;
                println!("{report}");
            }
        }
        Command::Transfer {
            input,
            exp,
            target_graph,
            target_cascades,
        } => {
            apply_input(&mut cfg, input);
            apply_experiment(&mut cfg, exp)?;
            let (source_g, source_cs) = load_inputs(&cfg)?;
            let target_g = SocialGraph::load_edge_list(target_graph, true)
                .with_context(|| format!("loading graph {}", target_graph.display()))?;
            let target_cs =
                CascadeSet::load_jsonl(target_cascades, &target_g, cfg.strict_cascades)
                    .with_context(|| format!("loading cascades {}", target_cascades.display()))?;
            let (source_ds, defs) = build_domain_dataset(&cfg, &source_g, &source_cs, None)?;
            let shared_defs = (!defs.is_empty()).then_some(defs);
            let (target_ds, _) =
                build_domain_dataset(&cfg, &target_g, &target_cs, shared_defs.as_deref())?;
            let mut report = predict::transfer_evaluate(
                &source_ds,
                &target_ds,
                &split_spec(&cfg, "transfer"),
                cfg.budget,
                cfg.runs,
                "source",
                "target",
            )?;
            report.metadata.feature_set = cfg.feature_mode.name().into();
            std::fs::create_dir_all(&cfg.out_dir)?;
            let out_path = cfg.out_dir.join("transfer_report.json");
            std::fs::write(&out_path, serde_json::to_string_pretty(&report)?)?;
            println!(
                "transfer: precision {:.4} recall {:.4} f1 {:.4} -> {}",
                report.precision,
                report.recall,
                report.f1,
                out_path.display()
            );
        }
        Command::Sweep {
            input,
            exp,
            fractions,
        } => {
            apply_input(&mut cfg, input);
            apply_experiment(&mut cfg, exp)?;
            if let Some(list) = fractions {
                cfg.sweep_fractions = parse_fraction_list(list)?;
            }
            let feature_stage = match cfg.feature_mode {
                FeatureMode::Centrality => Stage::Centrality,
                FeatureMode::Embedding => Stage::Embed,
            };
            run_stages(&cfg, &[Stage::Ingest, Stage::Scores, feature_stage, Stage::Sweep])?;
        }
        Command::Pipeline { stages } => {
            let stages: Vec<Stage> = match stages {
                None => Stage::DEFAULT_ORDER.to_vec(),
                Some(list) => list
                    .split(',')
                    .map(|t| Stage::parse(t.trim()))
                    .collect::<brokers_core::Result<_>>()?,
            };
            run_stages(&cfg, &stages)?;
            println!("pipeline: wrote {}", cfg.out_dir.join("manifest.json").display());
        }
    }
    Ok(())
}

fn write_embedding_csv(
    path: &std::path::Path,
    g: &SocialGraph,
    fm: &embed::FeatureMatrix,
) -> Result<()> {
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

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
