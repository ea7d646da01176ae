//! Episode judging and navigation metrics.
//!
//! * SR: percentage of episodes that stop within the success radius of a goal.
//! * OSR: percentage of episodes whose path passes within the radius.
//! * SPL: mean of `S_i * l_i / max(p_i, l_i)` over metric path lengths.
//! * RCS: `|seen - unseen| / max(seen, unseen) * 100`.
//!
//! Every aggregate sums in `episode_id` order so results do not depend on the
//! order in which episodes finished.

mod report;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env_graph::{EnvironmentGraph, Episode, GraphError, LENGTH_TOLERANCE};
use crate::policy::{StopReason, Trajectory};

pub use report::{render_report, BestOsr, MetricsReport, RcsRow, ReportFormat, SplitMetrics};

pub const DEFAULT_SUCCESS_RADIUS_M: f64 = 3.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no episode results")]
    Empty,
    #[error("episode {0:?} has a non-positive shortest length")]
    NonPositiveShortest(String),
    #[error("RCS is undefined when both values are zero")]
    RcsUndefined,
    #[error("trajectory of episode {episode:?} does not fit the graph: {reason}")]
    TrajectoryMismatch { episode: String, reason: String },
    #[error("no results for the {0} split")]
    MissingSplit(SplitLabel),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed results line {line}: {source}")]
    Malformed {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitLabel {
    Seen,
    Unseen,
}

impl std::fmt::Display for SplitLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitLabel::Seen => "seen",
            SplitLabel::Unseen => "unseen",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: String,
    pub scan_id: String,
    pub split_label: SplitLabel,
    pub success: bool,
    pub oracle_success: bool,
    pub path_length_m: f64,
    pub shortest_length_m: f64,
    pub steps: usize,
}

/// Scores one trajectory. Dead-end stops never count as success; the path
/// length includes reverse hops of backtracks.
pub fn judge_episode(
    graph: &EnvironmentGraph,
    episode: &Episode,
    trajectory: &Trajectory,
    success_radius_m: f64,
    split_label: SplitLabel,
) -> Result<EpisodeResult, MetricsError> {
    let mismatch = |reason: String| MetricsError::TrajectoryMismatch {
        episode: episode.episode_id.clone(),
        reason,
    };
    if trajectory.nodes.first() != Some(&episode.start) {
        return Err(mismatch(
            "trajectory does not begin at the start node".into(),
        ));
    }
    let indices = trajectory
        .nodes
        .iter()
        .map(|id| graph.index_of(id))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| mismatch(e.to_string()))?;
    let mut path_length = 0.0;
    for pair in indices.windows(2) {
        path_length += graph.edge_length(pair[0], pair[1]).ok_or_else(|| {
            mismatch(format!(
                "{} and {} are not adjacent",
                graph.viewpoint_at(pair[0]).id,
                graph.viewpoint_at(pair[1]).id
            ))
        })?;
    }
    let goals = episode
        .goals
        .iter()
        .map(|id| graph.index_of(id))
        .collect::<Result<Vec<_>, _>>()?;
    let to_goal = graph.metric_distances(&goals);
    let within = |i: usize| to_goal[i] <= success_radius_m + LENGTH_TOLERANCE;
    let final_node = *indices.last().expect("non-empty trajectory");
    Ok(EpisodeResult {
        episode_id: episode.episode_id.clone(),
        scan_id: episode.scan_id.clone(),
        split_label,
        success: trajectory.stop_reason != StopReason::DeadEnd && within(final_node),
        oracle_success: indices.iter().any(|&i| within(i)),
        path_length_m: path_length,
        shortest_length_m: episode.shortest_length,
        steps: trajectory.moves(),
    })
}

fn ordered(results: &[EpisodeResult]) -> Result<Vec<&EpisodeResult>, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut sorted: Vec<&EpisodeResult> = results.iter().collect();
    sorted.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
    Ok(sorted)
}

/// Success weighted by path length, in `[0, 1]`.
pub fn spl(results: &[EpisodeResult]) -> Result<f64, MetricsError> {
    let sorted = ordered(results)?;
    let mut total = 0.0;
    for r in &sorted {
        if r.shortest_length_m.is_nan() || r.shortest_length_m <= 0.0 {
            return Err(MetricsError::NonPositiveShortest(r.episode_id.clone()));
        }
        if r.success {
            total += r.shortest_length_m / r.path_length_m.max(r.shortest_length_m);
        }
    }
    Ok(total / sorted.len() as f64)
}

/// Success rate in percent.
pub fn sr(results: &[EpisodeResult]) -> Result<f64, MetricsError> {
    let sorted = ordered(results)?;
    Ok(percent(
        sorted.iter().filter(|r| r.success).count(),
        sorted.len(),
    ))
}

/// Oracle success rate in percent.
pub fn osr(results: &[EpisodeResult]) -> Result<f64, MetricsError> {
    let sorted = ordered(results)?;
    Ok(percent(
        sorted.iter().filter(|r| r.oracle_success).count(),
        sorted.len(),
    ))
}

fn percent(count: usize, total: usize) -> f64 {
    100.0 * count as f64 / total as f64
}

/// Relative change between seen and unseen performance, in percent.
pub fn rcs(seen: f64, unseen: f64) -> Result<f64, MetricsError> {
    let denominator = seen.max(unseen);
    if denominator.is_nan() || denominator <= 0.0 {
        return Err(MetricsError::RcsUndefined);
    }
    Ok((seen - unseen).abs() / denominator * 100.0)
}

/// OSR per scan, in percent.
pub fn best_osr_per_scan(results: &[EpisodeResult]) -> BTreeMap<String, f64> {
    let mut groups: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in results {
        let entry = groups.entry(r.scan_id.clone()).or_default();
        entry.1 += 1;
        if r.oracle_success {
            entry.0 += 1;
        }
    }
    groups
        .into_iter()
        .map(|(scan, (hits, total))| (scan, percent(hits, total)))
        .collect()
}

pub fn render_results(results: &[EpisodeResult]) -> String {
    results
        .iter()
        .map(|r| serde_json::to_string(r).expect("results serialize") + "\n")
        .collect()
}

pub fn parse_results(text: &str) -> Result<Vec<EpisodeResult>, MetricsError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|source| MetricsError::Malformed {
                line: i + 1,
                source,
            })
        })
        .collect()
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<EpisodeResult>, MetricsError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MetricsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_results(&text)
}

#[cfg(test)]
pub(crate) fn result(id: &str, success: bool, oracle: bool, p: f64, l: f64) -> EpisodeResult {
    EpisodeResult {
        episode_id: id.into(),
        scan_id: "scan".into(),
        split_label: SplitLabel::Unseen,
        success,
        oracle_success: oracle,
        path_length_m: p,
        shortest_length_m: l,
        steps: 1,
    }
}
