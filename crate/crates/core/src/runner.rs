//! Batch execution of episodes and the trajectory log format.
//!
//! Episodes are independent, so a batch fans out over a rayon pool when the
//! `parallel` feature is enabled. Outputs are always returned in `episode_id`
//! order, which makes logs byte-identical across thread counts.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env_graph::{EnvironmentGraph, Episode, GraphError};
use crate::grounding::GroundingScorer;
use crate::instruction::{
    decompose, DecomposeMode, DecomposedInstruction, DecomposerClient, DecomposerConfig,
    InstructionError,
};
use crate::metrics::{judge_episode, EpisodeResult, MetricsError, SplitLabel};
use crate::policy::{
    run_clip_nav, run_random_walk, run_seq_clip_nav, PolicyConfig, PolicyError, PolicyKind,
    Trajectory,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("episode {episode:?} refers to unknown scan {scan:?}")]
    UnknownScan { episode: String, scan: String },
    #[error("episode id {0:?} appears more than once")]
    DuplicateEpisode(String),
    #[error("episode {episode:?}: {source}")]
    Decompose {
        episode: String,
        #[source]
        source: InstructionError,
    },
    #[error("episode {episode:?}: {source}")]
    Policy {
        episode: String,
        #[source]
        source: PolicyError,
    },
    #[error("episode {episode:?}: {source}")]
    Judge {
        episode: String,
        #[source]
        source: MetricsError,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error("malformed trajectory log line {line}: {source}")]
    MalformedLog {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// `jobs: None` uses the global rayon pool.
    Parallel {
        jobs: Option<usize>,
    },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { jobs: None }
        } else {
            Execution::Sequential
        }
    }
}

/// A scan graph together with the scorer that grounds text in it.
#[derive(Clone)]
pub struct World {
    pub graph: Arc<EnvironmentGraph>,
    pub scorer: Arc<dyn GroundingScorer>,
}

pub type Worlds = BTreeMap<String, World>;

pub struct RunSpec<'a> {
    pub policy: PolicyKind,
    pub policy_cfg: PolicyConfig,
    pub decompose_mode: DecomposeMode,
    pub decomposer_cfg: DecomposerConfig,
    pub decomposer: Option<&'a dyn DecomposerClient>,
    pub success_radius_m: f64,
    pub split_label: SplitLabel,
}

impl RunSpec<'_> {
    pub fn new(policy: PolicyKind, policy_cfg: PolicyConfig) -> Self {
        Self {
            policy,
            policy_cfg,
            decompose_mode: DecomposeMode::Preposition,
            decomposer_cfg: DecomposerConfig::default(),
            decomposer: None,
            success_radius_m: crate::metrics::DEFAULT_SUCCESS_RADIUS_M,
            split_label: SplitLabel::Unseen,
        }
    }
}

/// One line of the trajectory log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub episode_id: String,
    pub scan_id: String,
    pub policy: PolicyKind,
    pub instruction: String,
    /// Absent for the random walk, which ignores language.
    pub decomposed: Option<DecomposedInstruction>,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub log: TrajectoryLog,
    pub result: EpisodeResult,
}

pub fn run_episode(
    graph: &EnvironmentGraph,
    scorer: &dyn GroundingScorer,
    episode: &Episode,
    spec: &RunSpec<'_>,
) -> Result<EpisodeOutcome, RunError> {
    let policy_err = |source| RunError::Policy {
        episode: episode.episode_id.clone(),
        source,
    };
    let (decomposed, trajectory) = match spec.policy {
        PolicyKind::Random => (
            None,
            run_random_walk(graph, episode, &spec.policy_cfg).map_err(policy_err)?,
        ),
        kind => {
            let decomposed = decompose(
                &episode.instruction,
                spec.decompose_mode,
                spec.decomposer,
                &spec.decomposer_cfg,
            )
            .map_err(|source| RunError::Decompose {
                episode: episode.episode_id.clone(),
                source,
            })?;
            let run = if kind == PolicyKind::SeqClipNav {
                run_seq_clip_nav
            } else {
                run_clip_nav
            };
            let trajectory =
                run(graph, scorer, episode, &decomposed, &spec.policy_cfg).map_err(policy_err)?;
            (Some(decomposed), trajectory)
        }
    };
    let result = judge_episode(
        graph,
        episode,
        &trajectory,
        spec.success_radius_m,
        spec.split_label,
    )
    .map_err(|source| RunError::Judge {
        episode: episode.episode_id.clone(),
        source,
    })?;
    Ok(EpisodeOutcome {
        log: TrajectoryLog {
            episode_id: episode.episode_id.clone(),
            scan_id: episode.scan_id.clone(),
            policy: spec.policy,
            instruction: episode.instruction.as_str().to_string(),
            decomposed,
            trajectory,
        },
        result,
    })
}

/// Runs every episode and returns outcomes sorted by `episode_id`. The first
/// error aborts the batch; navigation failures are data, not errors.
pub fn run_batch(
    worlds: &Worlds,
    episodes: &[Episode],
    spec: &RunSpec<'_>,
    execution: Execution,
) -> Result<Vec<EpisodeOutcome>, RunError> {
    let mut ids = BTreeSet::new();
    for episode in episodes {
        if !ids.insert(episode.episode_id.as_str()) {
            return Err(RunError::DuplicateEpisode(episode.episode_id.clone()));
        }
        if !worlds.contains_key(&episode.scan_id) {
            return Err(RunError::UnknownScan {
                episode: episode.episode_id.clone(),
                scan: episode.scan_id.clone(),
            });
        }
    }
    let mut outcomes = map_episodes(episodes, execution, |episode| {
        let world = &worlds[&episode.scan_id];
        run_episode(&world.graph, world.scorer.as_ref(), episode, spec)
    })?;
    outcomes.sort_by(|a, b| a.log.episode_id.cmp(&b.log.episode_id));
    Ok(outcomes)
}

/// Monte Carlo OSR of the random walk, in percent, over one walk per seed.
pub fn random_walk_osr(
    graph: &EnvironmentGraph,
    episode: &Episode,
    base: &PolicyConfig,
    seeds: Range<u64>,
    success_radius_m: f64,
    execution: Execution,
) -> Result<f64, RunError> {
    let total = seeds.end.saturating_sub(seeds.start);
    if total == 0 {
        return Err(RunError::Judge {
            episode: episode.episode_id.clone(),
            source: MetricsError::Empty,
        });
    }
    let seeds: Vec<u64> = seeds.collect();
    let hits = map_episodes(&seeds, execution, |&seed| {
        let cfg = PolicyConfig {
            seed,
            ..base.clone()
        };
        let trajectory =
            run_random_walk(graph, episode, &cfg).map_err(|source| RunError::Policy {
                episode: episode.episode_id.clone(),
                source,
            })?;
        let result = judge_episode(
            graph,
            episode,
            &trajectory,
            success_radius_m,
            SplitLabel::Unseen,
        )
        .map_err(|source| RunError::Judge {
            episode: episode.episode_id.clone(),
            source,
        })?;
        Ok(result.oracle_success as u64)
    })?
    .into_iter()
    .sum::<u64>();
    Ok(100.0 * hits as f64 / total as f64)
}

#[cfg(feature = "parallel")]
fn map_episodes<T, R, F>(items: &[T], execution: Execution, f: F) -> Result<Vec<R>, RunError>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R, RunError> + Sync + Send,
{
    use rayon::prelude::*;
    match execution {
        Execution::Sequential => items.iter().map(f).collect(),
        Execution::Parallel { jobs: None } => items.par_iter().map(f).collect(),
        Execution::Parallel { jobs: Some(n) } => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Pool(e.to_string()))?
            .install(|| items.par_iter().map(f).collect()),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_episodes<T, R, F>(items: &[T], _execution: Execution, f: F) -> Result<Vec<R>, RunError>
where
    F: Fn(&T) -> Result<R, RunError>,
{
    items.iter().map(f).collect()
}

pub fn render_trajectory_log(outcomes: &[EpisodeOutcome]) -> String {
    outcomes
        .iter()
        .map(|o| serde_json::to_string(&o.log).expect("log serializes") + "\n")
        .collect()
}

pub fn parse_trajectory_log(text: &str) -> Result<Vec<TrajectoryLog>, RunError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|source| RunError::MalformedLog {
                line: i + 1,
                source,
            })
        })
        .collect()
}
