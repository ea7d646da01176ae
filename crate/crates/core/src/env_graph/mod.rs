//! Discrete panoramic navigation environments.
//!
//! A world is a connected, undirected graph of [`Viewpoint`]s. Every viewpoint
//! carries exactly four [`ViewSplit`]s, each covering a quarter of the
//! panorama, and every neighbor of a viewpoint is visible from exactly one of
//! its splits.

mod io;
mod synth;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instruction::Instruction;

pub use io::{
    parse_environment, parse_episodes, read_environment, read_episodes, render_environment,
    render_episodes, write_environment, write_episodes,
};
pub use synth::{generate_synthetic, heading_quadrant, SynthParams, DEFAULT_ROOM_LABELS};

pub const SPLITS_PER_VIEWPOINT: usize = 4;

/// Tolerance for every comparison between metric lengths.
pub const LENGTH_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("graph has no viewpoints")]
    Empty,
    #[error("duplicate viewpoint id {0:?}")]
    DuplicateViewpoint(String),
    #[error("viewpoint {node:?} has {found} splits, expected 4")]
    SplitCount { node: String, found: usize },
    #[error("viewpoint {node:?} lists split_index {found} at position {position}")]
    SplitIndex {
        node: String,
        position: usize,
        found: u8,
    },
    #[error("viewpoint {node:?} split {split} references unknown neighbor {neighbor:?}")]
    DanglingNeighbor {
        node: String,
        split: u8,
        neighbor: String,
    },
    #[error("edge ({a:?}, {b:?}) references an unknown viewpoint")]
    DanglingEdge { a: String, b: String },
    #[error("edge ({a:?}, {b:?}) is declared twice")]
    DuplicateEdge { a: String, b: String },
    #[error("edge ({a:?}, {b:?}) has invalid length {length}")]
    BadLength { a: String, b: String, length: f64 },
    #[error("edge ({a:?}, {b:?}) is a self loop")]
    SelfLoop { a: String, b: String },
    #[error("viewpoint {node:?} sees neighbor {neighbor:?} from more than one split")]
    NeighborInTwoSplits { node: String, neighbor: String },
    #[error("viewpoint {node:?} sees {neighbor:?} but no edge connects them")]
    VisibleNotAdjacent { node: String, neighbor: String },
    #[error("viewpoint {node:?} is adjacent to {neighbor:?} but no split shows it")]
    AdjacentNotVisible { node: String, neighbor: String },
    #[error("edge ({a:?}, {b:?}) length {length} differs from euclidean distance {euclidean}")]
    NonEuclidean {
        a: String,
        b: String,
        length: f64,
        euclidean: f64,
    },
    #[error("graph is disconnected: {unreachable} viewpoints unreachable from {from:?}")]
    Disconnected { from: String, unreachable: usize },
    #[error("unknown viewpoint {0:?}")]
    UnknownViewpoint(String),
    #[error("episode {episode:?}: {reason}")]
    InvalidEpisode { episode: String, reason: String },
    #[error("infeasible generation parameters: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSplit {
    pub split_index: u8,
    pub image_ref: String,
    pub visible_neighbors: Vec<String>,
    #[serde(default)]
    pub semantic_tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Viewpoint {
    pub id: String,
    pub position: [f64; 3],
    pub splits: [ViewSplit; SPLITS_PER_VIEWPOINT],
}

impl Viewpoint {
    pub fn split(&self, index: usize) -> &ViewSplit {
        &self.splits[index]
    }

    /// True when any split carries a tag sharing a token with `tokens`.
    pub fn tags_match(&self, tokens: &HashSet<String>) -> bool {
        (0..SPLITS_PER_VIEWPOINT).any(|k| split_tags_match(&self.splits[k], tokens))
    }

    pub fn distance_to(&self, other: &Viewpoint) -> f64 {
        euclidean(&self.position, &other.position)
    }
}

pub(crate) fn split_tags_match(split: &ViewSplit, tokens: &HashSet<String>) -> bool {
    split
        .semantic_tags
        .iter()
        .flat_map(|tag| crate::instruction::tokenize(tag))
        .any(|t| tokens.contains(&t))
}

pub fn euclidean(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub length: f64,
}

/// Immutable navigation world.
#[derive(Debug, Clone)]
pub struct EnvironmentGraph {
    scan_id: String,
    nodes: Vec<Viewpoint>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
    // Neighbor lists sorted by neighbor id.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl PartialEq for EnvironmentGraph {
    fn eq(&self, other: &Self) -> bool {
        self.scan_id == other.scan_id && self.nodes == other.nodes && self.edges == other.edges
    }
}

impl EnvironmentGraph {
    /// Validates every structural invariant; never repairs.
    pub fn new(
        scan_id: impl Into<String>,
        nodes: Vec<Viewpoint>,
        edges: Vec<Edge>,
    ) -> Result<Self, GraphError> {
        let scan_id = scan_id.into();
        if nodes.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateViewpoint(node.id.clone()));
            }
            for (position, split) in node.splits.iter().enumerate() {
                if split.split_index as usize != position {
                    return Err(GraphError::SplitIndex {
                        node: node.id.clone(),
                        position,
                        found: split.split_index,
                    });
                }
            }
        }

        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes.len()];
        let mut seen_edges = HashSet::new();
        for edge in &edges {
            let (Some(&a), Some(&b)) = (index.get(&edge.a), index.get(&edge.b)) else {
                return Err(GraphError::DanglingEdge {
                    a: edge.a.clone(),
                    b: edge.b.clone(),
                });
            };
            if a == b {
                return Err(GraphError::SelfLoop {
                    a: edge.a.clone(),
                    b: edge.b.clone(),
                });
            }
            if !(edge.length.is_finite() && edge.length > 0.0) {
                return Err(GraphError::BadLength {
                    a: edge.a.clone(),
                    b: edge.b.clone(),
                    length: edge.length,
                });
            }
            if !seen_edges.insert((a.min(b), a.max(b))) {
                return Err(GraphError::DuplicateEdge {
                    a: edge.a.clone(),
                    b: edge.b.clone(),
                });
            }
            adjacency[a].push((b, edge.length));
            adjacency[b].push((a, edge.length));
        }
        for list in &mut adjacency {
            list.sort_by(|x, y| nodes[x.0].id.cmp(&nodes[y.0].id));
        }

        for (i, node) in nodes.iter().enumerate() {
            let mut visible = HashSet::new();
            for split in &node.splits {
                for neighbor in &split.visible_neighbors {
                    let Some(&j) = index.get(neighbor) else {
                        return Err(GraphError::DanglingNeighbor {
                            node: node.id.clone(),
                            split: split.split_index,
                            neighbor: neighbor.clone(),
                        });
                    };
                    if !visible.insert(j) {
                        return Err(GraphError::NeighborInTwoSplits {
                            node: node.id.clone(),
                            neighbor: neighbor.clone(),
                        });
                    }
                    if !adjacency[i].iter().any(|&(k, _)| k == j) {
                        return Err(GraphError::VisibleNotAdjacent {
                            node: node.id.clone(),
                            neighbor: neighbor.clone(),
                        });
                    }
                }
            }
            if let Some(&(k, _)) = adjacency[i].iter().find(|(k, _)| !visible.contains(k)) {
                return Err(GraphError::AdjacentNotVisible {
                    node: node.id.clone(),
                    neighbor: nodes[k].id.clone(),
                });
            }
        }

        let graph = Self {
            scan_id,
            nodes,
            edges,
            index,
            adjacency,
        };
        let reached = graph.hop_distances(&[0]).iter().flatten().count();
        if reached != graph.nodes.len() {
            return Err(GraphError::Disconnected {
                from: graph.nodes[0].id.clone(),
                unreachable: graph.nodes.len() - reached,
            });
        }
        Ok(graph)
    }

    pub fn scan_id(&self) -> &str {
        &self.scan_id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn viewpoints(&self) -> &[Viewpoint] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn index_of(&self, id: &str) -> Result<usize, GraphError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownViewpoint(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn viewpoint(&self, id: &str) -> Result<&Viewpoint, GraphError> {
        Ok(&self.nodes[self.index_of(id)?])
    }

    pub fn viewpoint_at(&self, index: usize) -> &Viewpoint {
        &self.nodes[index]
    }

    /// Neighbors of `index` sorted by id, with edge lengths.
    pub fn neighbors(&self, index: usize) -> &[(usize, f64)] {
        &self.adjacency[index]
    }

    pub fn edge_length(&self, a: usize, b: usize) -> Option<f64> {
        self.adjacency[a]
            .iter()
            .find(|&&(k, _)| k == b)
            .map(|&(_, len)| len)
    }

    pub fn are_adjacent(&self, a: &str, b: &str) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.edge_length(i, j).is_some(),
            _ => false,
        }
    }

    /// Checks that each declared edge length equals the distance between its
    /// endpoint positions. Only synthetic worlds are held to this.
    pub fn check_euclidean_lengths(&self) -> Result<(), GraphError> {
        for edge in &self.edges {
            let a = &self.nodes[self.index[&edge.a]];
            let b = &self.nodes[self.index[&edge.b]];
            let euclidean = a.distance_to(b);
            if (euclidean - edge.length).abs() > LENGTH_TOLERANCE {
                return Err(GraphError::NonEuclidean {
                    a: edge.a.clone(),
                    b: edge.b.clone(),
                    length: edge.length,
                    euclidean,
                });
            }
        }
        Ok(())
    }

    /// Multi-source Dijkstra over metric edge lengths.
    pub fn metric_distances(&self, sources: &[usize]) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s] = 0.0;
            heap.push(Frontier { cost: 0.0, node: s });
        }
        while let Some(Frontier { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for &(next, len) in &self.adjacency[node] {
                let candidate = cost + len;
                if candidate < dist[next] {
                    dist[next] = candidate;
                    heap.push(Frontier {
                        cost: candidate,
                        node: next,
                    });
                }
            }
        }
        dist
    }

    /// Multi-source BFS hop counts; `None` for unreachable viewpoints.
    pub fn hop_distances(&self, sources: &[usize]) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.nodes.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(node) = queue.pop_front() {
            let d = dist[node].expect("queued nodes have a distance");
            for &(next, _) in &self.adjacency[node] {
                if dist[next].is_none() {
                    dist[next] = Some(d + 1);
                    queue.push_back(next);
                }
            }
        }
        dist
    }

    /// Minimal-length path from `a` to `b`. Among paths whose length is
    /// within [`LENGTH_TOLERANCE`] of the minimum, returns the one whose node
    /// id sequence is lexicographically smallest.
    pub fn shortest_path(&self, a: &str, b: &str) -> Result<(f64, Vec<String>), GraphError> {
        let from = self.index_of(a)?;
        let to = self.index_of(b)?;
        let to_target = self.metric_distances(&[to]);
        let mut path = vec![self.nodes[from].id.clone()];
        let mut current = from;
        let mut length = 0.0;
        while current != to {
            // Neighbor lists are id-sorted, so the first edge on some
            // optimal completion is the lexicographically smallest choice.
            let &(next, len) = self.adjacency[current]
                .iter()
                .find(|&&(next, len)| {
                    to_target[next] < to_target[current]
                        && (len + to_target[next] - to_target[current]).abs() <= LENGTH_TOLERANCE
                })
                .expect("connected graph always has a descending neighbor");
            length += len;
            current = next;
            path.push(self.nodes[current].id.clone());
        }
        Ok((length, path))
    }

    /// Metric distance from `from` to the nearest of `targets`.
    pub fn distance_to_nearest(&self, from: &str, targets: &[String]) -> Result<f64, GraphError> {
        let start = self.index_of(from)?;
        let sources = targets
            .iter()
            .map(|t| self.index_of(t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.metric_distances(&sources)[start])
    }
}

#[derive(Debug, Clone, Copy)]
struct Frontier {
    cost: f64,
    node: usize,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // Reversed so the max-heap pops the cheapest entry.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// One navigation task inside a named world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub episode_id: String,
    pub scan_id: String,
    pub start: String,
    pub goals: Vec<String>,
    pub instruction: Instruction,
    pub shortest_length: f64,
}

impl Episode {
    /// Checks ids against `graph` and re-derives the shortest length.
    pub fn validate(&self, graph: &EnvironmentGraph) -> Result<(), GraphError> {
        let invalid = |reason: String| GraphError::InvalidEpisode {
            episode: self.episode_id.clone(),
            reason,
        };
        if self.scan_id != graph.scan_id() {
            return Err(invalid(format!(
                "scan {:?} does not match graph {:?}",
                self.scan_id,
                graph.scan_id()
            )));
        }
        if self.goals.is_empty() {
            return Err(invalid("goal set is empty".into()));
        }
        for id in std::iter::once(&self.start).chain(&self.goals) {
            if !graph.contains(id) {
                return Err(invalid(format!("unknown viewpoint {id:?}")));
            }
        }
        let actual = graph.distance_to_nearest(&self.start, &self.goals)?;
        if (actual - self.shortest_length).abs() > LENGTH_TOLERANCE {
            return Err(invalid(format!(
                "declared shortest_length {} but shortest path is {}",
                self.shortest_length, actual
            )));
        }
        Ok(())
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    #[test]
    fn identity_path() {
        let g = chain(&["a", "b", "c"], 1.0, &[]);
        assert_eq!(
            g.shortest_path("b", "b").unwrap(),
            (0.0, vec!["b".to_string()])
        );
    }

    #[test]
    fn chain_path() {
        let g = chain(&["a", "b", "c"], 1.0, &[]);
        let (len, path) = g.shortest_path("a", "c").unwrap();
        assert_eq!(len, 2.0);
        assert_eq!(path, ["a", "b", "c"]);
    }

    #[test]
    fn unknown_id_is_an_error() {
        let g = chain(&["a", "b"], 1.0, &[]);
        assert!(matches!(
            g.shortest_path("a", "zz"),
            Err(GraphError::UnknownViewpoint(id)) if id == "zz"
        ));
    }

    #[test]
    fn tie_break_prefers_smallest_sequence() {
        // Diamond a-{c,b}-d with equal lengths; expect a,b,d.
        let nodes = vec![
            Viewpoint {
                id: "a".into(),
                position: [0.0, 0.0, 0.0],
                splits: [
                    split(0, &["c"], &[]),
                    split(1, &["b"], &[]),
                    split(2, &[], &[]),
                    split(3, &[], &[]),
                ],
            },
            Viewpoint {
                id: "b".into(),
                position: [0.0, 1.0, 0.0],
                splits: [
                    split(0, &["d"], &[]),
                    split(1, &[], &[]),
                    split(2, &[], &[]),
                    split(3, &["a"], &[]),
                ],
            },
            Viewpoint {
                id: "c".into(),
                position: [1.0, 0.0, 0.0],
                splits: [
                    split(0, &[], &[]),
                    split(1, &["d"], &[]),
                    split(2, &["a"], &[]),
                    split(3, &[], &[]),
                ],
            },
            Viewpoint {
                id: "d".into(),
                position: [1.0, 1.0, 0.0],
                splits: [
                    split(0, &[], &[]),
                    split(1, &[], &[]),
                    split(2, &["b"], &[]),
                    split(3, &["c"], &[]),
                ],
            },
        ];
        let e = |a: &str, b: &str| Edge {
            a: a.into(),
            b: b.into(),
            length: 1.0,
        };
        let g = EnvironmentGraph::new(
            "diamond",
            nodes,
            vec![e("a", "b"), e("a", "c"), e("b", "d"), e("c", "d")],
        )
        .unwrap();
        assert_eq!(g.shortest_path("a", "d").unwrap().1, ["a", "b", "d"]);
        assert_eq!(g.shortest_path("d", "a").unwrap().1, ["d", "b", "a"]);
    }

    #[test]
    fn rejects_neighbor_in_two_splits() {
        let g = chain(&["a", "b"], 1.0, &[]);
        let mut nodes = g.viewpoints().to_vec();
        nodes[0].splits[1].visible_neighbors.push("b".into());
        assert!(matches!(
            EnvironmentGraph::new("x", nodes, g.edges().to_vec()),
            Err(GraphError::NeighborInTwoSplits { .. })
        ));
    }

    #[test]
    fn rejects_hidden_neighbor() {
        let g = chain(&["a", "b"], 1.0, &[]);
        let mut nodes = g.viewpoints().to_vec();
        nodes[0].splits[0].visible_neighbors.clear();
        assert!(matches!(
            EnvironmentGraph::new("x", nodes, g.edges().to_vec()),
            Err(GraphError::AdjacentNotVisible { .. })
        ));
    }

    #[test]
    fn rejects_disconnected() {
        let g = chain(&["a", "b"], 1.0, &[]);
        let mut nodes = g.viewpoints().to_vec();
        nodes.push(Viewpoint {
            id: "island".into(),
            position: [9.0, 9.0, 0.0],
            splits: [
                split(0, &[], &[]),
                split(1, &[], &[]),
                split(2, &[], &[]),
                split(3, &[], &[]),
            ],
        });
        assert!(matches!(
            EnvironmentGraph::new("x", nodes, g.edges().to_vec()),
            Err(GraphError::Disconnected { unreachable: 1, .. })
        ));
    }

    #[test]
    fn rejects_non_positive_length() {
        let g = chain(&["a", "b"], 1.0, &[]);
        let mut edges = g.edges().to_vec();
        edges[0].length = 0.0;
        assert!(matches!(
            EnvironmentGraph::new("x", g.viewpoints().to_vec(), edges),
            Err(GraphError::BadLength { .. })
        ));
    }

    #[test]
    fn episode_validation_checks_length() {
        let g = chain(&["a", "b", "c"], 2.0, &[]);
        let mut ep = Episode {
            episode_id: "e".into(),
            scan_id: "chain".into(),
            start: "a".into(),
            goals: vec!["c".into()],
            instruction: Instruction::new("go to c").unwrap(),
            shortest_length: 4.0,
        };
        ep.validate(&g).unwrap();
        ep.shortest_length = 3.0;
        assert!(matches!(
            ep.validate(&g),
            Err(GraphError::InvalidEpisode { .. })
        ));
        ep.shortest_length = 4.0;
        ep.goals = vec!["nope".into()];
        assert!(ep.validate(&g).is_err());
    }

    #[test]
    fn euclidean_check() {
        let g = chain(&["a", "b"], 2.0, &[]);
        g.check_euclidean_lengths().unwrap();
        let mut edges = g.edges().to_vec();
        edges[0].length = 2.5;
        let g = EnvironmentGraph::new("x", g.viewpoints().to_vec(), edges).unwrap();
        assert!(matches!(
            g.check_euclidean_lengths(),
            Err(GraphError::NonEuclidean { .. })
        ));
    }
}
