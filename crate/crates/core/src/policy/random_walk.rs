use crate::env_graph::{EnvironmentGraph, Episode};
use rand::Rng;

use crate::rng::{derive_seed, seeded};

use super::{PolicyConfig, PolicyError, StepRecord, StopReason, Trajectory};

/// Uniform random neighbor for `random_walk_steps` moves. The stream is
/// seeded from `(cfg.seed, episode_id)`; neighbors are drawn from the
/// id-sorted adjacency list.
pub fn run_random_walk(
    graph: &EnvironmentGraph,
    episode: &Episode,
    cfg: &PolicyConfig,
) -> Result<Trajectory, PolicyError> {
    let mut rng = seeded(derive_seed(cfg.seed, &episode.episode_id));
    let mut current = graph.index_of(&episode.start)?;
    let mut nodes = vec![episode.start.clone()];
    let mut steps = Vec::with_capacity(cfg.random_walk_steps);
    for _ in 0..cfg.random_walk_steps {
        let neighbors = graph.neighbors(current);
        if neighbors.is_empty() {
            return Ok(Trajectory {
                nodes,
                stop_reason: StopReason::DeadEnd,
                steps,
                sgs_checks: Vec::new(),
                final_ac_score: None,
            });
        }
        let (next, _) = neighbors[rng.random_range(0..neighbors.len())];
        let from = &graph.viewpoint_at(current).id;
        let to = &graph.viewpoint_at(next).id;
        steps.push(StepRecord::hop(from, to, false));
        nodes.push(to.clone());
        current = next;
    }
    Ok(Trajectory {
        nodes,
        stop_reason: StopReason::MaxSteps,
        steps,
        sgs_checks: Vec::new(),
        final_ac_score: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_graph::test_support::chain;
    use crate::instruction::Instruction;

    fn episode(start: &str, goal: &str, length: f64) -> Episode {
        Episode {
            episode_id: "walk".into(),
            scan_id: "chain".into(),
            start: start.into(),
            goals: vec![goal.into()],
            instruction: Instruction::new("wander").unwrap(),
            shortest_length: length,
        }
    }

    #[test]
    fn single_neighbor_alternates() {
        let g = chain(&["a", "b"], 1.0, &[]);
        for seed in 0..20 {
            let cfg = PolicyConfig {
                seed,
                ..PolicyConfig::default()
            };
            let t = run_random_walk(&g, &episode("a", "b", 1.0), &cfg).unwrap();
            assert_eq!(t.nodes, ["a", "b", "a", "b", "a", "b", "a", "b", "a"]);
            assert_eq!(t.stop_reason, StopReason::MaxSteps);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let g = chain(&["a", "b", "c", "d", "e"], 1.0, &[]);
        let cfg = PolicyConfig {
            seed: 99,
            ..PolicyConfig::default()
        };
        let ep = episode("c", "a", 2.0);
        let first = run_random_walk(&g, &ep, &cfg).unwrap();
        assert_eq!(first, run_random_walk(&g, &ep, &cfg).unwrap());
        assert_eq!(first.moves(), 8);
        for pair in first.nodes.windows(2) {
            assert!(g.are_adjacent(&pair[0], &pair[1]));
        }
    }

    #[test]
    fn seeds_vary_the_walk() {
        let g = chain(&["a", "b", "c", "d", "e"], 1.0, &[]);
        let ep = episode("c", "a", 2.0);
        let walks: std::collections::HashSet<Vec<String>> = (0..50)
            .map(|seed| {
                let cfg = PolicyConfig {
                    seed,
                    ..PolicyConfig::default()
                };
                run_random_walk(&g, &ep, &cfg).unwrap().nodes
            })
            .collect();
        assert!(walks.len() > 10);
    }
}
