//! Navigation agents: random walk, CLIP-Nav and Seq CLIP-Nav.
//!
//! Agents are step functions over an immutable [`EnvironmentGraph`] and a
//! [`GroundingScorer`]. Each run produces a [`Trajectory`] that records every
//! move, including the reverse hops of a backtrack.

mod clip_nav;
mod random_walk;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env_graph::GraphError;
use crate::grounding::{KgsResult, ScoreError};

pub use clip_nav::{run_clip_nav, run_seq_clip_nav, step_clip_nav};
pub use random_walk::run_random_walk;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid policy config: {0}")]
    InvalidConfig(String),
    #[error("sequence grounding needs {need} KGS values, history has {have}")]
    InsufficientHistory { have: usize, need: usize },
    #[error("decomposed instruction has no navigation keyphrases")]
    NoKeyphrases,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Random,
    ClipNav,
    SeqClipNav,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::ClipNav => "clip-nav",
            PolicyKind::SeqClipNav => "seq-clip-nav",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub stop_threshold: f64,
    pub advance_threshold: f64,
    pub backtrack_threshold: f64,
    pub window_n: usize,
    pub max_steps: usize,
    pub random_walk_steps: usize,
    /// Whether reverse hops of a backtrack consume the step budget.
    pub count_backtrack_steps: bool,
    pub seed: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            stop_threshold: 0.8,
            advance_threshold: 0.8,
            backtrack_threshold: 0.55,
            window_n: 3,
            max_steps: 16,
            random_walk_steps: 8,
            count_backtrack_steps: true,
            seed: 0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        for (name, value) in [
            ("stop_threshold", self.stop_threshold),
            ("advance_threshold", self.advance_threshold),
            ("backtrack_threshold", self.backtrack_threshold),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(PolicyError::InvalidConfig(format!(
                    "{name} = {value} is outside [0, 1]"
                )));
            }
        }
        if self.window_n == 0 || self.window_n > self.max_steps {
            return Err(PolicyError::InvalidConfig(format!(
                "window_n = {} must lie in 1..={}",
                self.window_n, self.max_steps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgsEntry {
    pub node: String,
    pub chosen_split: u8,
    /// Split actually followed; differs from `chosen_split` on fallback.
    pub taken_split: u8,
    pub kgs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub current_node: String,
    pub keyphrase_index: usize,
    pub kgs_history: Vec<KgsEntry>,
    pub visited_forbidden: BTreeSet<(String, u8)>,
    pub steps_taken: usize,
    /// Every node occupied so far, starting with the start node.
    pub path: Vec<String>,
}

impl AgentState {
    pub fn new(start: impl Into<String>) -> Self {
        let start = start.into();
        Self {
            current_node: start.clone(),
            keyphrase_index: 0,
            kgs_history: Vec::new(),
            visited_forbidden: BTreeSet::new(),
            steps_taken: 0,
            path: vec![start],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    AcThreshold,
    MaxSteps,
    DeadEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub from: String,
    /// `None` when no admissible neighbor existed (dead end).
    pub to: Option<String>,
    pub keyphrase: Option<String>,
    pub keyphrase_index: Option<usize>,
    pub kgs: Option<KgsResult>,
    pub taken_split: Option<u8>,
    /// AC score at `from`, computed before moving.
    pub ac_score: Option<f64>,
    pub advanced: bool,
    pub backtracked: bool,
}

impl StepRecord {
    pub(crate) fn hop(from: &str, to: &str, backtracked: bool) -> Self {
        Self {
            from: from.to_string(),
            to: Some(to.to_string()),
            keyphrase: None,
            keyphrase_index: None,
            kgs: None,
            taken_split: None,
            ac_score: None,
            advanced: false,
            backtracked,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgsCheck {
    /// Number of moves (forward and reverse) made before the check.
    pub after_step: usize,
    pub sgs: f64,
    pub backtracked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub nodes: Vec<String>,
    pub stop_reason: StopReason,
    pub steps: Vec<StepRecord>,
    #[serde(default)]
    pub sgs_checks: Vec<SgsCheck>,
    /// AC score at the final node when the run stopped on a check.
    pub final_ac_score: Option<f64>,
}

impl Trajectory {
    pub fn final_node(&self) -> &str {
        self.nodes
            .last()
            .expect("trajectories include the start node")
    }

    /// Moves made, reverse hops included.
    pub fn moves(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn backtrack_hops(&self) -> usize {
        self.steps.iter().filter(|s| s.backtracked).count()
    }
}

/// Sequence grounding score: mean of the last `window_n` KGS values.
pub fn sgs(kgs_history: &[f64], window_n: usize) -> Result<f64, PolicyError> {
    if window_n == 0 || kgs_history.len() < window_n {
        return Err(PolicyError::InsufficientHistory {
            have: kgs_history.len(),
            need: window_n.max(1),
        });
    }
    let tail = &kgs_history[kgs_history.len() - window_n..];
    Ok(tail.iter().sum::<f64>() / window_n as f64)
}
