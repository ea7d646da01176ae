//! Recorded score tables and the replay backend.
//!
//! File format: a JSON list of `{"node": id, "split": 0..3, "text": string,
//! "score": number}`, written sorted by `(node, split, text)`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{GroundingScorer, ScoreError, ScorerDescriptor, ViewKey};

#[derive(Debug, Error)]
pub enum ScoreTableError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed score table: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("invalid entry for node {node:?} split {split} text {text:?}: {reason}")]
    InvalidEntry {
        node: String,
        split: u8,
        text: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub node: String,
    pub split: u8,
    pub text: String,
    pub score: f64,
}

type Key = (String, u8, String);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    entries: BTreeMap<Key, f64>,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a score. Re-inserting a key with a different value is an error.
    pub fn insert(&mut self, entry: ScoreEntry) -> Result<(), ScoreTableError> {
        let invalid = |reason: &str| ScoreTableError::InvalidEntry {
            node: entry.node.clone(),
            split: entry.split,
            text: entry.text.clone(),
            reason: reason.to_string(),
        };
        if entry.split > 3 {
            return Err(invalid("split must be 0..3"));
        }
        if !(entry.score.is_finite() && (0.0..=1.0).contains(&entry.score)) {
            return Err(invalid("score must lie in [0, 1]"));
        }
        let key = (entry.node.clone(), entry.split, entry.text.clone());
        match self.entries.get(&key) {
            Some(&old) if old != entry.score => Err(invalid("conflicting duplicate")),
            _ => {
                self.entries.insert(key, entry.score);
                Ok(())
            }
        }
    }

    pub fn get(&self, node: &str, split: u8, text: &str) -> Option<f64> {
        self.entries
            .get(&(node.to_string(), split, text.to_string()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = ScoreEntry> + '_ {
        self.entries
            .iter()
            .map(|((node, split, text), &score)| ScoreEntry {
                node: node.clone(),
                split: *split,
                text: text.clone(),
                score,
            })
    }

    pub fn parse(text: &str) -> Result<Self, ScoreTableError> {
        let rows: Vec<ScoreEntry> = serde_json::from_str(text)?;
        let mut table = Self::new();
        for row in rows {
            table.insert(row)?;
        }
        Ok(table)
    }

    pub fn render(&self) -> String {
        let rows: Vec<ScoreEntry> = self.entries().collect();
        let mut text = serde_json::to_string_pretty(&rows).expect("score table serializes");
        text.push('\n');
        text
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ScoreTableError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ScoreTableError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ScoreTableError> {
        let path = path.as_ref();
        fs::write(path, self.render()).map_err(|source| ScoreTableError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Serves recorded scores; a missing key is an error naming the key.
pub struct ReplayScorer {
    table: ScoreTable,
}

impl ReplayScorer {
    pub fn new(table: ScoreTable) -> Self {
        Self { table }
    }

    pub fn table(&self) -> &ScoreTable {
        &self.table
    }
}

impl GroundingScorer for ReplayScorer {
    fn descriptor(&self) -> ScorerDescriptor {
        ScorerDescriptor {
            name: "replay".into(),
            deterministic: true,
        }
    }

    fn score_texts(&self, view: ViewKey<'_>, texts: &[&str]) -> Result<Vec<f64>, ScoreError> {
        texts
            .iter()
            .map(|text| {
                self.table
                    .get(view.node, view.split, text)
                    .ok_or_else(|| ScoreError::ReplayMiss {
                        node: view.node.to_string(),
                        split: view.split,
                        text: text.to_string(),
                    })
            })
            .collect()
    }
}

/// Wraps a backend and keeps every score it hands out.
pub struct RecordingScorer<S> {
    inner: S,
    table: Mutex<ScoreTable>,
}

impl<S: GroundingScorer> RecordingScorer<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            table: Mutex::new(ScoreTable::new()),
        }
    }

    pub fn into_table(self) -> ScoreTable {
        self.table.into_inner().expect("recording lock")
    }

    /// Copy of everything recorded so far.
    pub fn snapshot(&self) -> ScoreTable {
        self.table.lock().expect("recording lock").clone()
    }
}

impl<S: GroundingScorer> GroundingScorer for RecordingScorer<S> {
    fn descriptor(&self) -> ScorerDescriptor {
        let inner = self.inner.descriptor();
        ScorerDescriptor {
            name: format!("recording({})", inner.name),
            deterministic: inner.deterministic,
        }
    }

    fn score_texts(&self, view: ViewKey<'_>, texts: &[&str]) -> Result<Vec<f64>, ScoreError> {
        let scores = self.inner.score_texts(view, texts)?;
        let mut table = self.table.lock().expect("recording lock");
        for (text, &score) in texts.iter().zip(&scores) {
            table
                .insert(ScoreEntry {
                    node: view.node.to_string(),
                    split: view.split,
                    text: text.to_string(),
                    score,
                })
                .map_err(|e| ScoreError::Backend {
                    key: view.describe(),
                    message: e.to_string(),
                })?;
        }
        Ok(scores)
    }
}
