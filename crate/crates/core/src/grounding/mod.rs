//! Grounding scores for (view split, text) pairs.
//!
//! Every backend answers in `[0, 1]`. The keyphrase grounding score (KGS) of
//! a viewpoint is the best score over its four splits; the split achieving it
//! is the chosen split.

mod oracle;
mod remote;
mod replay;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env_graph::{Viewpoint, SPLITS_PER_VIEWPOINT};

pub use oracle::{oracle_score, OracleScorer, DEFAULT_DECAY};
pub use remote::{RemoteScorer, ScoreRequest, ScoreResponse};
pub use replay::{RecordingScorer, ReplayScorer, ScoreEntry, ScoreTable, ScoreTableError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("no texts to score")]
    EmptyTexts,
    #[error("phrase is empty")]
    EmptyPhrase,
    #[error("backend returned {got} scores for {expected} texts at {key}")]
    CountMismatch {
        key: String,
        expected: usize,
        got: usize,
    },
    #[error("score {value} for {key} is outside [0, 1]")]
    OutOfRange { key: String, value: f64 },
    #[error("replay table has no score for node {node:?} split {split} text {text:?}")]
    ReplayMiss {
        node: String,
        split: u8,
        text: String,
    },
    #[error("scorer backend failed at {key}: {message}")]
    Backend { key: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerDescriptor {
    pub name: String,
    pub deterministic: bool,
}

/// Identifies one quarter-panorama image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewKey<'a> {
    pub node: &'a str,
    pub split: u8,
    pub image_ref: &'a str,
}

impl<'a> ViewKey<'a> {
    pub fn of(node: &'a Viewpoint, split: usize) -> Self {
        Self {
            node: &node.id,
            split: split as u8,
            image_ref: &node.splits[split].image_ref,
        }
    }

    pub(crate) fn describe(&self) -> String {
        format!("{}/{}", self.node, self.split)
    }
}

/// Backend contract: one score per text, in order, each in `[0, 1]`.
/// Implementations must tolerate concurrent calls.
pub trait GroundingScorer: Send + Sync {
    fn descriptor(&self) -> ScorerDescriptor;

    fn score_texts(&self, view: ViewKey<'_>, texts: &[&str]) -> Result<Vec<f64>, ScoreError>;
}

impl<T: GroundingScorer + ?Sized> GroundingScorer for &T {
    fn descriptor(&self) -> ScorerDescriptor {
        (**self).descriptor()
    }

    fn score_texts(&self, view: ViewKey<'_>, texts: &[&str]) -> Result<Vec<f64>, ScoreError> {
        (**self).score_texts(view, texts)
    }
}

impl<T: GroundingScorer + ?Sized> GroundingScorer for std::sync::Arc<T> {
    fn descriptor(&self) -> ScorerDescriptor {
        (**self).descriptor()
    }

    fn score_texts(&self, view: ViewKey<'_>, texts: &[&str]) -> Result<Vec<f64>, ScoreError> {
        (**self).score_texts(view, texts)
    }
}

/// Scores `texts` against one view and enforces the backend contract.
pub fn score(
    scorer: &dyn GroundingScorer,
    view: ViewKey<'_>,
    texts: &[&str],
) -> Result<Vec<f64>, ScoreError> {
    if texts.is_empty() {
        return Err(ScoreError::EmptyTexts);
    }
    let scores = scorer.score_texts(view, texts)?;
    if scores.len() != texts.len() {
        return Err(ScoreError::CountMismatch {
            key: view.describe(),
            expected: texts.len(),
            got: scores.len(),
        });
    }
    for &value in &scores {
        if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
            return Err(ScoreError::OutOfRange {
                key: view.describe(),
                value,
            });
        }
    }
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KgsResult {
    pub per_split_scores: [f64; SPLITS_PER_VIEWPOINT],
    pub chosen_split: u8,
    pub kgs: f64,
}

impl KgsResult {
    /// Argmax with ties going to the lowest split index.
    pub fn from_scores(per_split_scores: [f64; SPLITS_PER_VIEWPOINT]) -> Self {
        let mut chosen = 0;
        for k in 1..SPLITS_PER_VIEWPOINT {
            if per_split_scores[k] > per_split_scores[chosen] {
                chosen = k;
            }
        }
        Self {
            per_split_scores,
            chosen_split: chosen as u8,
            kgs: per_split_scores[chosen],
        }
    }

    /// Split indices by descending score, ties by ascending index.
    pub fn ranked_splits(&self) -> [usize; SPLITS_PER_VIEWPOINT] {
        let mut order = [0, 1, 2, 3];
        order.sort_by(|&a, &b| {
            self.per_split_scores[b]
                .total_cmp(&self.per_split_scores[a])
                .then(a.cmp(&b))
        });
        order
    }
}

/// Grounds `phrase` on all four splits of `node`.
pub fn kgs(
    scorer: &dyn GroundingScorer,
    node: &Viewpoint,
    phrase: &str,
) -> Result<KgsResult, ScoreError> {
    if phrase.trim().is_empty() {
        return Err(ScoreError::EmptyPhrase);
    }
    let mut scores = [0.0; SPLITS_PER_VIEWPOINT];
    for (k, slot) in scores.iter_mut().enumerate() {
        *slot = score(scorer, ViewKey::of(node, k), &[phrase])?[0];
    }
    Ok(KgsResult::from_scores(scores))
}

/// Best activity-component score over the four splits; 0 for an empty phrase.
pub fn ac_score(
    scorer: &dyn GroundingScorer,
    node: &Viewpoint,
    ac_phrase: &str,
) -> Result<f64, ScoreError> {
    if ac_phrase.trim().is_empty() {
        return Ok(0.0);
    }
    let mut best: f64 = 0.0;
    for k in 0..SPLITS_PER_VIEWPOINT {
        best = best.max(score(scorer, ViewKey::of(node, k), &[ac_phrase])?[0]);
    }
    Ok(best)
}
