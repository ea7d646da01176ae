//! JSON environment and episode files.
//!
//! Environment file:
//!
//! ```json
//! {"scan_id": "...",
//!  "nodes": [{"id": "...", "position": [x, y, z],
//!             "splits": [{"split_index": 0, "image_ref": "...",
//!                         "visible_neighbors": ["..."], "semantic_tags": ["..."]}, ...]}],
//!  "edges": [{"a": "...", "b": "...", "length": 1.0}]}
//! ```
//!
//! Episode file: a JSON list of
//! `{episode_id, scan_id, start, goals, instruction, shortest_length}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Edge, EnvironmentGraph, Episode, GraphError, ViewSplit, Viewpoint};

#[derive(Serialize, Deserialize)]
struct EnvironmentFile {
    scan_id: String,
    nodes: Vec<NodeRecord>,
    edges: Vec<Edge>,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: String,
    position: [f64; 3],
    splits: Vec<ViewSplit>,
}

fn read_to_string(path: &Path) -> Result<String, GraphError> {
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_string(path: &Path, text: &str) -> Result<(), GraphError> {
    fs::write(path, text).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_environment(text: &str) -> Result<EnvironmentGraph, GraphError> {
    let file: EnvironmentFile = serde_json::from_str(text)?;
    let nodes = file
        .nodes
        .into_iter()
        .map(|record| {
            let found = record.splits.len();
            let splits: [ViewSplit; 4] =
                record
                    .splits
                    .try_into()
                    .map_err(|_| GraphError::SplitCount {
                        node: record.id.clone(),
                        found,
                    })?;
            Ok(Viewpoint {
                id: record.id,
                position: record.position,
                splits,
            })
        })
        .collect::<Result<Vec<_>, GraphError>>()?;
    EnvironmentGraph::new(file.scan_id, nodes, file.edges)
}

pub fn read_environment(path: impl AsRef<Path>) -> Result<EnvironmentGraph, GraphError> {
    parse_environment(&read_to_string(path.as_ref())?)
}

/// Pretty JSON with a trailing newline; stable for a given graph.
pub fn render_environment(graph: &EnvironmentGraph) -> String {
    let file = EnvironmentFile {
        scan_id: graph.scan_id().to_string(),
        nodes: graph
            .viewpoints()
            .iter()
            .map(|v| NodeRecord {
                id: v.id.clone(),
                position: v.position,
                splits: v.splits.to_vec(),
            })
            .collect(),
        edges: graph.edges().to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("environment serializes");
    text.push('\n');
    text
}

pub fn write_environment(
    graph: &EnvironmentGraph,
    path: impl AsRef<Path>,
) -> Result<(), GraphError> {
    write_string(path.as_ref(), &render_environment(graph))
}

/// Parses an episode list. Validation against graphs is separate
/// ([`Episode::validate`]) since one file may span several scans.
pub fn parse_episodes(text: &str) -> Result<Vec<Episode>, GraphError> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_episodes(path: impl AsRef<Path>) -> Result<Vec<Episode>, GraphError> {
    parse_episodes(&read_to_string(path.as_ref())?)
}

pub fn render_episodes(episodes: &[Episode]) -> String {
    let mut text = serde_json::to_string_pretty(episodes).expect("episodes serialize");
    text.push('\n');
    text
}

pub fn write_episodes(episodes: &[Episode], path: impl AsRef<Path>) -> Result<(), GraphError> {
    write_string(path.as_ref(), &render_episodes(episodes))
}
