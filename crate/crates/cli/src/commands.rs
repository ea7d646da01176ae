use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::Args;
use log::info;
use zsnav_core::env_graph::{
    generate_synthetic, read_environment, read_episodes, write_environment, write_episodes,
    SynthParams,
};
use zsnav_core::grounding::{RecordingScorer, ScoreTable};
use zsnav_core::instruction::{DecomposerConfig, HttpDecomposer};
use zsnav_core::metrics::{read_results, render_report, render_results, ReportFormat};
use zsnav_core::runner::{render_trajectory_log, EpisodeOutcome};
use zsnav_core::{
    run_batch, Episode, EpisodeResult, Execution, GroundingScorer, MetricsReport, OracleScorer,
    RemoteScorer, ReplayScorer, RunSpec, SplitLabel, World, Worlds,
};

use crate::config::{RunConfig, ScorerBackend};

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub seed: u64,
    /// Directory receiving environment.json and episodes.json.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with generator parameters; flags below override it.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub branching: Option<f64>,
    #[arg(long)]
    pub rooms: Option<usize>,
    /// Comma-separated room labels.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,
}

impl GenArgs {
    pub fn params(&self) -> Result<SynthParams> {
        let mut params = match &self.params {
            Some(path) => serde_json::from_str(
                &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            )
            .with_context(|| format!("parsing {}", path.display()))?,
            None => SynthParams::default(),
        };
        if let Some(n) = self.nodes {
            params.node_count = n;
        }
        if let Some(n) = self.episodes {
            params.episodes = n;
        }
        if let Some(b) = self.branching {
            params.branching = b;
        }
        if self.rooms.is_some() {
            params.rooms = self.rooms;
        }
        if !self.labels.is_empty() {
            params.room_labels = self.labels.clone();
        }
        Ok(params)
    }
}

pub struct Generated {
    pub environment: PathBuf,
    pub episodes: PathBuf,
}

pub fn cmd_gen(seed: u64, params: &SynthParams, out_dir: &Path) -> Result<Generated> {
    let (graph, episodes) = generate_synthetic(seed, params)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let generated = Generated {
        environment: out_dir.join("environment.json"),
        episodes: out_dir.join("episodes.json"),
    };
    write_environment(&graph, &generated.environment)?;
    write_episodes(&episodes, &generated.episodes)?;
    info!(
        "generated {} with {} viewpoints and {} episodes",
        graph.scan_id(),
        graph.len(),
        episodes.len()
    );
    Ok(generated)
}

fn load(cfg: &RunConfig) -> Result<(Vec<Arc<zsnav_core::EnvironmentGraph>>, Vec<Episode>)> {
    let mut graphs = Vec::new();
    let mut episodes = Vec::new();
    match &cfg.synthetic {
        Some(source) => {
            for &seed in &source.seeds {
                let (graph, eps) = generate_synthetic(seed, &source.params)?;
                graphs.push(Arc::new(graph));
                episodes.extend(eps);
            }
        }
        None => {
            for path in &cfg.environments {
                graphs.push(Arc::new(read_environment(path)?));
            }
        }
    }
    if let Some(path) = &cfg.episodes {
        episodes = read_episodes(path)?;
    }
    for episode in &episodes {
        let Some(graph) = graphs.iter().find(|g| g.scan_id() == episode.scan_id) else {
            bail!(
                "episode {} refers to scan {} which was not loaded",
                episode.episode_id,
                episode.scan_id
            );
        };
        episode.validate(graph)?;
    }
    Ok((graphs, episodes))
}

fn worlds(cfg: &RunConfig, graphs: &[Arc<zsnav_core::EnvironmentGraph>]) -> Result<Worlds> {
    let shared: Option<Arc<dyn GroundingScorer>> = match cfg.scorer.backend {
        ScorerBackend::Oracle => None,
        ScorerBackend::Replay => {
            let table = cfg.scorer.table.as_ref().expect("validated");
            Some(Arc::new(ReplayScorer::new(ScoreTable::read(table)?)))
        }
        ScorerBackend::Remote => Some(Arc::new(RemoteScorer::new(
            cfg.scorer.url.as_deref().expect("validated"),
        ))),
    };
    let mut worlds = Worlds::new();
    for graph in graphs {
        let scorer = shared.clone().unwrap_or_else(|| {
            let oracle = OracleScorer::new(graph.clone(), cfg.scorer.decay);
            let oracle = if cfg.scorer.noise > 0.0 {
                oracle.with_noise(cfg.scorer.noise, cfg.scorer.noise_seed)
            } else {
                oracle
            };
            Arc::new(oracle)
        });
        let world = World {
            graph: graph.clone(),
            scorer,
        };
        if worlds.insert(graph.scan_id().to_string(), world).is_some() {
            bail!("scan {} loaded twice", graph.scan_id());
        }
    }
    Ok(worlds)
}

fn execute(cfg: &RunConfig, worlds: &Worlds, episodes: &[Episode]) -> Result<Vec<EpisodeOutcome>> {
    let decomposer = cfg.decomposer_url.as_deref().map(HttpDecomposer::new);
    let spec = RunSpec {
        policy: cfg.policy,
        policy_cfg: cfg.policy_config(),
        decompose_mode: cfg.decompose,
        decomposer_cfg: DecomposerConfig {
            max_keyphrase_words: cfg.max_keyphrase_words,
            ..DecomposerConfig::default()
        },
        decomposer: decomposer
            .as_ref()
            .map(|d| d as &dyn zsnav_core::instruction::DecomposerClient),
        success_radius_m: cfg.success_radius_m,
        split_label: cfg.split_label,
    };
    let execution = match cfg.jobs {
        Some(1) => Execution::Sequential,
        jobs => Execution::Parallel { jobs },
    };
    Ok(run_batch(worlds, episodes, &spec, execution)?)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub struct RunSummary {
    pub episodes: usize,
    pub successes: usize,
    pub results: Vec<EpisodeResult>,
}

/// Runs every episode and writes the trajectory log and results file, both in
/// `episode_id` order.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let (graphs, episodes) = load(cfg)?;
    let worlds = worlds(cfg, &graphs)?;
    info!(
        "running {} episodes over {} scans with {}",
        episodes.len(),
        worlds.len(),
        cfg.policy.name()
    );
    let outcomes = execute(cfg, &worlds, &episodes)?;
    let results: Vec<EpisodeResult> = outcomes.iter().map(|o| o.result.clone()).collect();
    write_file(&cfg.trajectory_log, &render_trajectory_log(&outcomes))?;
    write_file(&cfg.results, &render_results(&results))?;
    let successes = results.iter().filter(|r| r.success).count();
    info!("{successes} of {} episodes succeeded", results.len());
    Ok(RunSummary {
        episodes: results.len(),
        successes,
        results,
    })
}

/// Runs the configured scorer through a recorder and writes every score it
/// produced to `out`. Nothing is left behind on failure.
pub fn cmd_record(cfg: &RunConfig, out: &Path) -> Result<ScoreTable> {
    cfg.validate()?;
    if cfg.scorer.backend == ScorerBackend::Replay {
        bail!("recording needs a live scorer backend, not replay");
    }
    let (graphs, episodes) = load(cfg)?;
    let mut worlds = worlds(cfg, &graphs)?;
    let mut recorders = Vec::new();
    for world in worlds.values_mut() {
        let recorder = Arc::new(RecordingScorer::new(world.scorer.clone()));
        recorders.push(recorder.clone());
        world.scorer = recorder;
    }
    execute(cfg, &worlds, &episodes)?;
    let mut table = ScoreTable::new();
    for recorder in &recorders {
        for entry in recorder.snapshot().entries() {
            table.insert(entry)?;
        }
    }
    if let Err(e) = table.write(out) {
        let _ = fs::remove_file(out);
        return Err(e.into());
    }
    info!("recorded {} scores to {}", table.len(), out.display());
    Ok(table)
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Results file(s) evaluated as the seen split.
    #[arg(long, required = true)]
    pub seen: Vec<PathBuf>,
    /// Results file(s) evaluated as the unseen split.
    #[arg(long, required = true)]
    pub unseen: Vec<PathBuf>,
    /// Row label in the report.
    #[arg(long, default_value = "run")]
    pub label: String,
    /// json, csv or text-table.
    #[arg(long, default_value = "text-table")]
    pub format: ReportFormat,
    /// Report destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Builds the report, relabelling each result by the flag its file came from.
pub fn cmd_eval(args: &EvalArgs) -> Result<MetricsReport> {
    let mut results = Vec::new();
    for (label, files) in [
        (SplitLabel::Seen, &args.seen),
        (SplitLabel::Unseen, &args.unseen),
    ] {
        let before = results.len();
        for path in files {
            results.extend(read_results(path)?.into_iter().map(|mut r| {
                r.split_label = label;
                r
            }));
        }
        if results.len() == before {
            bail!("no results for the {label} split");
        }
    }
    let report = MetricsReport::from_results(&args.label, &results)?;
    let rendered = render_report(&report, args.format);
    match &args.out {
        Some(path) => write_file(path, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(report)
}
