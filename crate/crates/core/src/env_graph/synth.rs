//! Seeded synthetic worlds for desk-scale evaluation.
//!
//! Viewpoints sit on a square lattice (`spacing_m` apart) grown from the
//! origin, so every edge is axis aligned and a viewpoint has at most one
//! neighbor per quadrant. Rooms are contiguous lattice regions labelled from
//! `room_labels`; every split of a viewpoint carries its room label as the
//! single semantic tag. Episodes ask for a room whose nearest viewpoint lies
//! between `min_hops` and `max_hops` hops from the start.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Edge, EnvironmentGraph, Episode, GraphError, ViewSplit, Viewpoint};
use crate::instruction::Instruction;
use crate::rng::seeded;

pub const DEFAULT_ROOM_LABELS: [&str; 12] = [
    "kitchen", "bathroom", "bedroom", "hallway", "office", "closet", "lounge", "pantry", "laundry",
    "garage", "nursery", "library",
];

const MOTION_VERBS: [&str; 3] = ["Go", "Walk", "Head"];
const CHORES: [(&str, &str); 6] = [
    ("clean", "counter"),
    ("dust", "shelf"),
    ("water", "plant"),
    ("open", "window"),
    ("wash", "mug"),
    ("straighten", "towel"),
];

// East, north, west, south.
const STEPS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub node_count: usize,
    pub room_labels: Vec<String>,
    /// Probability of closing each extra lattice edge beyond the spanning tree.
    pub branching: f64,
    pub episodes: usize,
    pub spacing_m: f64,
    pub min_hops: u32,
    pub max_hops: u32,
    /// Number of room regions; defaults to `max(2, node_count / 6)`.
    pub rooms: Option<usize>,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            node_count: 50,
            room_labels: DEFAULT_ROOM_LABELS.iter().map(|s| s.to_string()).collect(),
            branching: 0.15,
            episodes: 4,
            spacing_m: 2.0,
            min_hops: 5,
            max_hops: 8,
            rooms: None,
        }
    }
}

/// Quadrant of a heading measured counter-clockwise from +x:
/// `floor(((heading + 45°) mod 360°) / 90°)`.
pub fn heading_quadrant(dx: f64, dy: f64) -> usize {
    let heading = dy.atan2(dx).to_degrees();
    (((heading + 45.0).rem_euclid(360.0) / 90.0).floor() as usize) % 4
}

pub fn generate_synthetic(
    seed: u64,
    params: &SynthParams,
) -> Result<(EnvironmentGraph, Vec<Episode>), GraphError> {
    check_params(params)?;
    let mut rng = seeded(seed);
    let n = params.node_count;
    let scan_id = format!("synth-{seed}");

    let mut cells: Vec<(i32, i32)> = vec![(0, 0)];
    let mut occupied: HashMap<(i32, i32), usize> = HashMap::from([((0, 0), 0)]);
    let mut links: Vec<(usize, usize)> = Vec::new();
    while cells.len() < n {
        // Favoring the newest cell stretches the layout into corridors.
        let anchor = if rng.random_bool(0.6) {
            cells.len() - 1
        } else {
            rng.random_range(0..cells.len())
        };
        let (dx, dy) = STEPS[rng.random_range(0..4)];
        let target = (cells[anchor].0 + dx, cells[anchor].1 + dy);
        if let std::collections::hash_map::Entry::Vacant(slot) = occupied.entry(target) {
            slot.insert(cells.len());
            links.push((anchor, cells.len()));
            cells.push(target);
        }
    }
    let mut linked: HashSet<(usize, usize)> =
        links.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    for (i, &(x, y)) in cells.iter().enumerate() {
        for (dx, dy) in [STEPS[0], STEPS[1]] {
            if let Some(&j) = occupied.get(&(x + dx, y + dy)) {
                let key = (i.min(j), i.max(j));
                if !linked.contains(&key) && rng.random_bool(params.branching) {
                    linked.insert(key);
                    links.push((i, j));
                }
            }
        }
    }

    let mut adjacency = vec![Vec::new(); n];
    for &(a, b) in &links {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }

    let room_count = params.rooms.unwrap_or((n / 6).max(2)).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut labels = params.room_labels.clone();
    labels.shuffle(&mut rng);
    let mut room_of = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for (room, &seed_node) in order.iter().take(room_count).enumerate() {
        room_of[seed_node] = room;
        queue.push_back(seed_node);
    }
    while let Some(node) = queue.pop_front() {
        for &next in &adjacency[node] {
            if room_of[next] == usize::MAX {
                room_of[next] = room_of[node];
                queue.push_back(next);
            }
        }
    }
    let label_of = |node: usize| labels[room_of[node] % labels.len()].clone();

    let ids: Vec<String> = (0..n).map(|i| format!("{scan_id}-n{i:03}")).collect();
    let position = |i: usize| {
        [
            cells[i].0 as f64 * params.spacing_m,
            cells[i].1 as f64 * params.spacing_m,
            0.0,
        ]
    };
    let nodes: Vec<Viewpoint> = (0..n)
        .map(|i| {
            let mut visible: [Vec<String>; 4] = Default::default();
            for &j in &adjacency[i] {
                let q = heading_quadrant(
                    (cells[j].0 - cells[i].0) as f64,
                    (cells[j].1 - cells[i].1) as f64,
                );
                visible[q].push(ids[j].clone());
            }
            let tag = label_of(i);
            let splits = std::array::from_fn(|k| {
                let mut neighbors = std::mem::take(&mut visible[k]);
                neighbors.sort();
                ViewSplit {
                    split_index: k as u8,
                    image_ref: format!("{scan_id}/{}/{k}", ids[i]),
                    visible_neighbors: neighbors,
                    semantic_tags: vec![tag.clone()],
                }
            });
            Viewpoint {
                id: ids[i].clone(),
                position: position(i),
                splits,
            }
        })
        .collect();
    let edges: Vec<Edge> = links
        .iter()
        .map(|&(a, b)| {
            let (lo, hi) = if ids[a] < ids[b] { (a, b) } else { (b, a) };
            Edge {
                a: ids[lo].clone(),
                b: ids[hi].clone(),
                length: super::euclidean(&position(lo), &position(hi)),
            }
        })
        .collect();
    let graph = EnvironmentGraph::new(scan_id.clone(), nodes, edges)?;
    graph.check_euclidean_lengths()?;

    let mut used_labels: Vec<String> = (0..n).map(label_of).collect();
    used_labels.sort();
    used_labels.dedup();
    let mut candidates = Vec::new();
    for label in &used_labels {
        let goals: Vec<usize> = (0..n).filter(|&i| &label_of(i) == label).collect();
        let hops = graph.hop_distances(&goals);
        for (start, d) in hops.iter().enumerate() {
            let d = d.expect("generated graphs are connected");
            if (params.min_hops..=params.max_hops).contains(&d) {
                candidates.push((start, label.clone(), goals.clone()));
            }
        }
    }
    if candidates.is_empty() && params.episodes > 0 {
        return Err(GraphError::Infeasible(format!(
            "no start lies {}..={} hops from any room in seed {seed}",
            params.min_hops, params.max_hops
        )));
    }
    candidates.shuffle(&mut rng);
    let episodes = candidates
        .into_iter()
        .take(params.episodes)
        .enumerate()
        .map(|(k, (start, label, goals))| {
            let verb = MOTION_VERBS[rng.random_range(0..MOTION_VERBS.len())];
            let (chore, object) = CHORES[rng.random_range(0..CHORES.len())];
            let text = format!("{verb} to the {label} and {chore} the {object} in the {label}");
            let shortest_length = graph.metric_distances(&goals)[start];
            Episode {
                episode_id: format!("{scan_id}-ep{k:02}"),
                scan_id: scan_id.clone(),
                start: ids[start].clone(),
                goals: goals.iter().map(|&g| ids[g].clone()).collect(),
                instruction: Instruction::new(text).expect("template is non-empty"),
                shortest_length,
            }
        })
        .collect();
    Ok((graph, episodes))
}

fn check_params(params: &SynthParams) -> Result<(), GraphError> {
    let fail = |msg: String| Err(GraphError::Infeasible(msg));
    if params.node_count < 2 {
        return fail(format!("node count {} < 2", params.node_count));
    }
    if params.room_labels.is_empty() || params.room_labels.iter().any(|l| l.trim().is_empty()) {
        return fail("room labels must be non-empty".into());
    }
    if !(0.0..=1.0).contains(&params.branching) {
        return fail(format!("branching {} outside [0, 1]", params.branching));
    }
    if !(params.spacing_m.is_finite() && params.spacing_m > 0.0) {
        return fail(format!("spacing {} must be positive", params.spacing_m));
    }
    if params.min_hops > params.max_hops {
        return fail(format!(
            "hop range {}..={} is empty",
            params.min_hops, params.max_hops
        ));
    }
    if params.episodes > 0 && params.node_count <= params.min_hops as usize {
        return fail(format!(
            "{} viewpoints cannot host a {}-hop episode",
            params.node_count, params.min_hops
        ));
    }
    Ok(())
}
