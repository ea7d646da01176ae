use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use zsnav_core::env_graph::{generate_synthetic, Edge, SynthParams, ViewSplit};
use zsnav_core::grounding::{
    kgs, oracle_score, RecordingScorer, ReplayScorer, ScoreError, ScoreTable, DEFAULT_DECAY,
};
use zsnav_core::instruction::{decompose_by_preposition, DecomposerConfig};
use zsnav_core::policy::{run_clip_nav, PolicyError};
use zsnav_core::{EnvironmentGraph, OracleScorer, PolicyConfig, Viewpoint};

/// Hop distance to the nearest node carrying `label`, by plain BFS over edges.
fn hops_to_label(g: &EnvironmentGraph, label: &str) -> Vec<Option<u32>> {
    let n = g.len();
    let mut adj = vec![Vec::new(); n];
    for e in g.edges() {
        let (a, b) = (g.index_of(&e.a).unwrap(), g.index_of(&e.b).unwrap());
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut hops = vec![None; n];
    let mut queue = VecDeque::new();
    for (i, v) in g.viewpoints().iter().enumerate() {
        if v.splits
            .iter()
            .any(|s| s.semantic_tags.iter().any(|t| t == label))
        {
            hops[i] = Some(0);
            queue.push_back(i);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if hops[v].is_none() {
                hops[v] = Some(hops[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    hops
}

fn room_label(g: &EnvironmentGraph, id: &str) -> String {
    g.viewpoint(id).unwrap().splits[0].semantic_tags[0].clone()
}

#[test]
fn greedy_argmax_strictly_decreases_goal_distance() {
    let mut checked = 0;
    for seed in 1..=50 {
        let (g, episodes) = generate_synthetic(seed, &SynthParams::default()).unwrap();
        let g = Arc::new(g);
        let scorer = OracleScorer::new(g.clone(), DEFAULT_DECAY);
        for e in &episodes {
            let label = room_label(&g, &e.goals[0]);
            let phrase = format!("Go to the {label}");
            let hops = hops_to_label(&g, &label);
            for node in 0..g.len() {
                let d = hops[node].unwrap();
                let result = kgs(&scorer, g.viewpoint_at(node), &phrase).unwrap();
                let scores = result.per_split_scores;
                if node % 10 == 0 {
                    for (k, &value) in scores.iter().enumerate() {
                        assert_eq!(value, oracle_score(&g, node, k, &phrase, DEFAULT_DECAY));
                    }
                }
                let chosen = result.chosen_split as usize;
                if d == 0 {
                    assert_eq!(scores[chosen], 1.0);
                    continue;
                }
                let view = g.viewpoint_at(node);
                let next: Vec<u32> = view.splits[chosen]
                    .visible_neighbors
                    .iter()
                    .map(|id| hops[g.index_of(id).unwrap()].unwrap())
                    .collect();
                assert_eq!(next, [d - 1], "seed {seed} node {}", view.id);
                assert_eq!(scores[chosen], DEFAULT_DECAY.powi(d as i32));
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

fn split(index: u8, neighbors: &[&str], tags: &[&str]) -> ViewSplit {
    ViewSplit {
        split_index: index,
        image_ref: format!("img{index}"),
        visible_neighbors: neighbors.iter().map(|s| s.to_string()).collect(),
        semantic_tags: tags.iter().map(|s| s.to_string()).collect(),
    }
}

/// Center node with a 2-hop kitchen to the north and a 4-hop kitchen to the
/// south.
fn two_kitchens() -> EnvironmentGraph {
    let column = [
        ("s4", -4.0),
        ("s3", -3.0),
        ("s2", -2.0),
        ("s1", -1.0),
        ("c", 0.0),
        ("n1", 1.0),
        ("n2", 2.0),
    ];
    let nodes = column
        .iter()
        .enumerate()
        .map(|(i, &(id, y))| {
            let north: Vec<&str> = column.get(i + 1).map(|n| n.0).into_iter().collect();
            let south: Vec<&str> = i.checked_sub(1).map(|j| column[j].0).into_iter().collect();
            let tags: &[&str] = if id == "n2" || id == "s4" {
                &["kitchen"]
            } else {
                &["hall"]
            };
            Viewpoint {
                id: id.into(),
                position: [0.0, y, 0.0],
                splits: [
                    split(0, &[], tags),
                    split(1, &north, tags),
                    split(2, &[], tags),
                    split(3, &south, tags),
                ],
            }
        })
        .collect();
    let edges = column
        .windows(2)
        .map(|w| Edge {
            a: w[0].0.into(),
            b: w[1].0.into(),
            length: 1.0,
        })
        .collect();
    EnvironmentGraph::new("two-kitchens", nodes, edges).unwrap()
}

#[test]
fn nearer_goal_wins_the_split() {
    let g = Arc::new(two_kitchens());
    let hops = hops_to_label(&g, "kitchen");
    let c = g.index_of("c").unwrap();
    assert_eq!(hops[g.index_of("n1").unwrap()], Some(1));
    let scorer = OracleScorer::new(g.clone(), 0.8);
    let result = kgs(&scorer, g.viewpoint_at(c), "kitchen").unwrap();
    assert!((result.per_split_scores[1] - 0.64).abs() < 1e-12);
    assert!((result.per_split_scores[3] - 0.4096).abs() < 1e-12);
    assert_eq!(result.per_split_scores[0], 0.0);
    assert_eq!(result.chosen_split, 1);
    assert_eq!(result.kgs, result.per_split_scores[1]);
}

/// Every (node, split, text) the agent must have asked for, rebuilt from the
/// trajectory alone.
fn expected_queries(
    t: &zsnav_core::Trajectory,
    ac: &str,
    keyphrases: &[String],
) -> BTreeSet<(String, u8, String)> {
    let mut keys = BTreeSet::new();
    let mut add = |node: &str, text: &str| {
        for k in 0..4 {
            keys.insert((node.to_string(), k, text.to_string()));
        }
    };
    for step in t.steps.iter().filter(|s| !s.backtracked) {
        add(&step.from, ac);
        let index = step.keyphrase_index.unwrap();
        add(&step.from, &keyphrases[index]);
        if step.advanced {
            add(&step.from, &keyphrases[index - 1]);
        }
    }
    if t.final_ac_score.is_some() {
        add(t.final_node(), ac);
    }
    keys
}

#[test]
fn recorded_scores_replay_identically() {
    let cfg = PolicyConfig::default();
    for seed in 1..=10 {
        let (g, episodes) = generate_synthetic(seed, &SynthParams::default()).unwrap();
        let g = Arc::new(g);
        for e in &episodes {
            let d = decompose_by_preposition(&e.instruction, &DecomposerConfig::default());
            let recorder =
                RecordingScorer::new(OracleScorer::new(g.clone(), 0.8).with_noise(0.1, seed));
            let live = run_clip_nav(&g, &recorder, e, &d, &cfg).unwrap();
            let table = recorder.into_table();
            let keys: BTreeSet<_> = table.entries().map(|x| (x.node, x.split, x.text)).collect();
            assert_eq!(
                keys,
                expected_queries(&live, &d.ac_phrase, &d.nc_keyphrases)
            );

            let reloaded = ScoreTable::parse(&table.render()).unwrap();
            assert_eq!(reloaded, table);
            let replay = ReplayScorer::new(reloaded);
            assert_eq!(run_clip_nav(&g, &replay, e, &d, &cfg).unwrap(), live);
        }
    }
}

#[test]
fn replay_beyond_the_recording_misses_loudly() {
    let (g, episodes) = generate_synthetic(3, &SynthParams::default()).unwrap();
    let g = Arc::new(g);
    let e = &episodes[0];
    let d = decompose_by_preposition(&e.instruction, &DecomposerConfig::default());
    let recorder = RecordingScorer::new(OracleScorer::new(g.clone(), 0.8));
    let short = PolicyConfig {
        max_steps: 1,
        window_n: 1,
        ..PolicyConfig::default()
    };
    let live = run_clip_nav(&g, &recorder, e, &d, &short).unwrap();
    let replay = ReplayScorer::new(recorder.into_table());
    let err = run_clip_nav(&g, &replay, e, &d, &PolicyConfig::default()).unwrap_err();
    match err {
        PolicyError::Score(ScoreError::ReplayMiss { node, .. }) => {
            assert_eq!(node, live.nodes[1]);
        }
        other => panic!("expected a replay miss, got {other:?}"),
    }
}
