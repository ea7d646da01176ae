//! Deterministic stand-in for a vision-language model.
//!
//! A split scores `decay^d`, where `d` is the hop length of the shortest path
//! that leaves through that split and ends at a viewpoint whose tags share a
//! token with the phrase (`d = 0` when the split's own tags match). Splits
//! with no such path score 0.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, RwLock};

use super::{GroundingScorer, ScoreError, ScorerDescriptor, ViewKey};
use crate::env_graph::{split_tags_match, EnvironmentGraph};
use crate::instruction::tokenize;
use rand::Rng;

use crate::rng::{derive_seed, seeded};

pub const DEFAULT_DECAY: f64 = 0.8;

/// Noiseless oracle score of `split` at viewpoint `node` (graph index).
pub fn oracle_score(
    graph: &EnvironmentGraph,
    node: usize,
    split: usize,
    phrase: &str,
    decay: f64,
) -> f64 {
    let tokens: HashSet<String> = tokenize(phrase).into_iter().collect();
    let hops = hops_to_match(graph, &tokens);
    score_from_hops(graph, node, split, &tokens, &hops, decay)
}

fn hops_to_match(graph: &EnvironmentGraph, tokens: &HashSet<String>) -> Vec<Option<u32>> {
    let matching: Vec<usize> = graph
        .viewpoints()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.tags_match(tokens))
        .map(|(i, _)| i)
        .collect();
    graph.hop_distances(&matching)
}

fn score_from_hops(
    graph: &EnvironmentGraph,
    node: usize,
    split: usize,
    tokens: &HashSet<String>,
    hops: &[Option<u32>],
    decay: f64,
) -> f64 {
    let view = graph.viewpoint_at(node);
    if split_tags_match(&view.splits[split], tokens) {
        return 1.0;
    }
    view.splits[split]
        .visible_neighbors
        .iter()
        .filter_map(|id| hops[graph.index_of(id).expect("validated neighbor")])
        .min()
        .map_or(0.0, |d| decay.powi(d as i32 + 1))
}

/// Tokens of a text and the hop distance of every node to a matching node.
type LabelHops = Arc<(HashSet<String>, Vec<Option<u32>>)>;

pub struct OracleScorer {
    graph: Arc<EnvironmentGraph>,
    decay: f64,
    noise: f64,
    seed: u64,
    cache: RwLock<HashMap<Vec<String>, LabelHops>>,
}

impl OracleScorer {
    /// Panics unless `decay` is in (0, 1) and `noise` is in [0, 1].
    pub fn new(graph: Arc<EnvironmentGraph>, decay: f64) -> Self {
        assert!(decay > 0.0 && decay < 1.0, "decay must lie in (0, 1)");
        Self {
            graph,
            decay,
            noise: 0.0,
            seed: 0,
            cache: RwLock::new(HashMap::new()),
        }
    }

    /// Adds uniform noise in `[-amplitude, amplitude]`, keyed by
    /// `(seed, node, split, text)` so repeated queries agree.
    pub fn with_noise(mut self, amplitude: f64, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&amplitude), "noise must lie in [0, 1]");
        self.noise = amplitude;
        self.seed = seed;
        self
    }

    pub fn graph(&self) -> &Arc<EnvironmentGraph> {
        &self.graph
    }

    fn hops_for(&self, phrase: &str) -> LabelHops {
        let mut key = tokenize(phrase);
        key.sort();
        key.dedup();
        if let Some(hit) = self.cache.read().expect("cache lock").get(&key) {
            return Arc::clone(hit);
        }
        let tokens: HashSet<String> = key.iter().cloned().collect();
        let hops = hops_to_match(&self.graph, &tokens);
        let entry = Arc::new((tokens, hops));
        self.cache
            .write()
            .expect("cache lock")
            .entry(key)
            .or_insert(entry)
            .clone()
    }
}

impl GroundingScorer for OracleScorer {
    fn descriptor(&self) -> ScorerDescriptor {
        ScorerDescriptor {
            name: format!("oracle(decay={}, noise={})", self.decay, self.noise),
            deterministic: true,
        }
    }

    fn score_texts(&self, view: ViewKey<'_>, texts: &[&str]) -> Result<Vec<f64>, ScoreError> {
        let node = self
            .graph
            .index_of(view.node)
            .map_err(|e| ScoreError::Backend {
                key: view.describe(),
                message: e.to_string(),
            })?;
        Ok(texts
            .iter()
            .map(|text| {
                let entry = self.hops_for(text);
                let clean = score_from_hops(
                    &self.graph,
                    node,
                    view.split as usize,
                    &entry.0,
                    &entry.1,
                    self.decay,
                );
                if self.noise == 0.0 {
                    return clean;
                }
                let label = format!("{}\u{1f}{}\u{1f}{}", view.node, view.split, text);
                let mut rng = seeded(derive_seed(self.seed, &label));
                let eps = (rng.random::<f64>() * 2.0 - 1.0) * self.noise;
                (clean + eps).clamp(0.0, 1.0)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_graph::test_support::chain;
    use crate::grounding::{kgs, score};

    fn corridor() -> EnvironmentGraph {
        chain(
            &["a", "b", "c", "d"],
            1.0,
            &[&["hallway"], &["hallway"], &["hallway"], &["kitchen"]],
        )
    }

    #[test]
    fn matching_split_scores_one() {
        let g = corridor();
        assert_eq!(oracle_score(&g, 3, 1, "the kitchen", 0.8), 1.0);
    }

    #[test]
    fn three_hops_decay() {
        let g = corridor();
        assert!((oracle_score(&g, 0, 0, "kitchen", 0.8) - 0.512).abs() < 1e-12);
    }

    #[test]
    fn unreachable_through_split_is_zero() {
        let g = corridor();
        // Split 2 at "a" sees nothing; split 1 never has neighbors.
        assert_eq!(oracle_score(&g, 0, 2, "kitchen", 0.8), 0.0);
        assert_eq!(oracle_score(&g, 1, 1, "kitchen", 0.8), 0.0);
        assert_eq!(oracle_score(&g, 0, 0, "garage", 0.8), 0.0);
    }

    #[test]
    fn scorer_matches_free_function_and_caches() {
        let g = Arc::new(corridor());
        let s = OracleScorer::new(g.clone(), 0.8);
        for node in 0..4 {
            let r = kgs(&s, g.viewpoint_at(node), "kitchen").unwrap();
            for k in 0..4 {
                assert_eq!(
                    r.per_split_scores[k],
                    oracle_score(&g, node, k, "kitchen", 0.8)
                );
            }
        }
        assert_eq!(s.cache.read().unwrap().len(), 1);
    }

    #[test]
    fn noise_is_keyed_and_clamped() {
        let g = Arc::new(corridor());
        let s = OracleScorer::new(g.clone(), 0.8).with_noise(0.3, 11);
        let view = ViewKey::of(g.viewpoint_at(0), 0);
        let first = score(&s, view, &["kitchen"]).unwrap()[0];
        let second = score(&s, view, &["kitchen"]).unwrap()[0];
        assert_eq!(first, second);
        assert!((first - 0.512).abs() <= 0.3);
        let top = score(&s, ViewKey::of(g.viewpoint_at(3), 0), &["kitchen"]).unwrap()[0];
        assert!((0.7..=1.0).contains(&top));
    }

    #[test]
    fn unknown_node_is_backend_error() {
        let g = Arc::new(corridor());
        let s = OracleScorer::new(g, 0.8);
        let view = ViewKey {
            node: "zz",
            split: 0,
            image_ref: "",
        };
        assert!(matches!(
            s.score_texts(view, &["x"]),
            Err(ScoreError::Backend { .. })
        ));
    }
}
