//! Instruction breakdown: navigation component (NC) keyphrases and the
//! activity component (AC) phrase.
//!
//! Tokens are whitespace-separated words, lowercased, with every
//! non-alphanumeric character removed. Words that reduce to nothing are not
//! tokens and never count toward keyphrase length.

mod client;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use client::{
    ClientError, DecomposeRequest, DecomposeResponse, DecomposerClient, HttpDecomposer,
    DECOMPOSE_PROMPT,
};

pub const DEFAULT_MAX_KEYPHRASE_WORDS: usize = 6;

pub const ACTION_VERBS: &[&str] = &[
    "replace",
    "clean",
    "pick",
    "bring",
    "move",
    "dust",
    "water",
    "wash",
    "turn",
    "open",
    "close",
    "take",
    "put",
    "place",
    "remove",
    "wipe",
    "empty",
    "fold",
    "fetch",
    "grab",
    "check",
    "find",
    "touch",
    "push",
    "pull",
    "lift",
    "set",
    "hang",
    "straighten",
    "fix",
    "make",
    "switch",
    "unplug",
    "plug",
    "adjust",
    "carry",
    "get",
    "feed",
    "sweep",
    "vacuum",
    "mop",
    "scrub",
    "polish",
    "arrange",
    "collect",
    "retrieve",
    "throw",
    "flush",
    "tidy",
];

/// Single-word prepositions that open a keyphrase. "next to" is handled as a
/// two-word unit.
pub const PREPOSITIONS: &[&str] = &[
    "to", "into", "in", "inside", "on", "at", "near", "above", "below", "by", "under", "over",
    "from", "towards", "behind", "beside",
];

/// Motion verbs also open a keyphrase; a preposition directly after one
/// stays attached to it ("go to the kitchen").
pub const MOTION_VERBS: &[&str] = &[
    "go", "walk", "head", "enter", "exit", "leave", "proceed", "continue", "climb", "descend",
    "travel", "return", "pass", "cross", "step", "turn",
];

#[derive(Debug, Error, PartialEq)]
pub enum InstructionError {
    #[error("instruction is empty")]
    Empty,
    #[error("external decomposition requires a client")]
    MissingClient,
    #[error("decomposer client failed: {0}")]
    Client(String),
    #[error("malformed decomposer response: {0}")]
    MalformedResponse(String),
}

/// Raw coarse-grained instruction; never blank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Instruction(String);

impl Instruction {
    pub fn new(raw: impl Into<String>) -> Result<Self, InstructionError> {
        let raw = raw.into();
        if raw.trim().is_empty() {
            return Err(InstructionError::Empty);
        }
        Ok(Self(raw))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Instruction {
    type Error = InstructionError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Instruction> for String {
    fn from(value: Instruction) -> Self {
        value.0
    }
}

impl std::fmt::Display for Instruction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionSource {
    Preposition,
    External,
    Passthrough,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecomposeMode {
    #[default]
    Preposition,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposedInstruction {
    pub nc_keyphrases: Vec<String>,
    pub ac_phrase: String,
    pub source: DecompositionSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposerConfig {
    pub max_keyphrase_words: usize,
    pub action_verbs: Vec<String>,
}

impl Default for DecomposerConfig {
    fn default() -> Self {
        Self {
            max_keyphrase_words: DEFAULT_MAX_KEYPHRASE_WORDS,
            action_verbs: ACTION_VERBS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl DecomposerConfig {
    fn is_action_verb(&self, token: &str) -> bool {
        self.action_verbs.iter().any(|v| v == token)
    }
}

pub fn normalize_word(word: &str) -> String {
    word.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(normalize_word)
        .filter(|t| !t.is_empty())
        .collect()
}

struct Word<'a> {
    text: &'a str,
    start: usize,
    norm: String,
}

fn words(text: &str) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text
        .char_indices()
        .chain(std::iter::once((text.len(), ' ')))
    {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                let w = &text[s..i];
                out.push(Word {
                    text: w,
                    start: s,
                    norm: normalize_word(w),
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    out
}

fn trim_word(word: &str) -> &str {
    word.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Joins the first `max_words` tokens' original words, with surrounding
/// punctuation trimmed from each word.
fn emit(ws: &[&Word<'_>], max_words: usize) -> String {
    ws.iter()
        .filter(|w| !w.norm.is_empty())
        .take(max_words)
        .map(|w| trim_word(w.text))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Splits at the first standalone "and" whose right side starts with an
/// action verb (optionally after "then"). Without such a split the whole
/// instruction is navigation.
pub fn split_nc_ac(instruction: &Instruction) -> (String, String) {
    split_nc_ac_with(instruction, &DecomposerConfig::default())
}

pub fn split_nc_ac_with(instruction: &Instruction, cfg: &DecomposerConfig) -> (String, String) {
    let raw = instruction.as_str();
    let ws = words(raw);
    for (i, w) in ws.iter().enumerate().skip(1) {
        if w.norm != "and" {
            continue;
        }
        let mut next = i + 1;
        if ws.get(next).is_some_and(|n| n.norm == "then") {
            next += 1;
        }
        let Some(verb) = ws.get(next) else { break };
        if cfg.is_action_verb(&verb.norm) {
            let nc = raw[..w.start]
                .trim_end()
                .trim_end_matches([',', ';'])
                .trim_end();
            if nc.is_empty() {
                continue;
            }
            let ac = raw[verb.start..].trim();
            return (nc.to_string(), ac.to_string());
        }
    }
    (raw.trim().to_string(), String::new())
}

fn is_preposition(norm: &str) -> bool {
    PREPOSITIONS.contains(&norm)
}

fn is_motion_verb(norm: &str) -> bool {
    MOTION_VERBS.contains(&norm)
}

/// Segments `nc` at prepositions and motion verbs. A segment only closes once
/// it holds a word that is neither, so "go to the" and "from behind the" stay
/// together. Each segment is cut to `max_words` tokens; empty ones vanish.
pub fn keyphrases_by_preposition(nc: &str, max_words: usize) -> Vec<String> {
    assert!(max_words >= 1, "max_words must be at least 1");
    let ws = words(nc);
    let mut segments: Vec<Vec<&Word<'_>>> = Vec::new();
    let mut current: Vec<&Word<'_>> = Vec::new();
    let mut has_content = false;
    let mut i = 0;
    while i < ws.len() {
        let w = &ws[i];
        let two_word_prep = w.norm == "next" && ws.get(i + 1).is_some_and(|n| n.norm == "to");
        let opener = two_word_prep || is_preposition(&w.norm) || is_motion_verb(&w.norm);
        if opener && has_content {
            segments.push(std::mem::take(&mut current));
            has_content = false;
        }
        if two_word_prep {
            current.push(w);
            current.push(&ws[i + 1]);
            i += 2;
            continue;
        }
        if !opener && !w.norm.is_empty() {
            has_content = true;
        }
        current.push(w);
        i += 1;
    }
    segments.push(current);
    segments
        .iter()
        .map(|seg| emit(seg, max_words))
        .filter(|s| !s.is_empty())
        .collect()
}

/// Cuts `text` to its first `max_words` tokens, keeping original casing.
pub fn truncate_words(text: &str, max_words: usize) -> String {
    let ws = words(text);
    let refs: Vec<&Word<'_>> = ws.iter().collect();
    emit(&refs, max_words)
}

pub fn decompose(
    instruction: &Instruction,
    mode: DecomposeMode,
    client: Option<&dyn DecomposerClient>,
    cfg: &DecomposerConfig,
) -> Result<DecomposedInstruction, InstructionError> {
    match mode {
        DecomposeMode::Preposition => Ok(decompose_by_preposition(instruction, cfg)),
        DecomposeMode::External => {
            let client = client.ok_or(InstructionError::MissingClient)?;
            let response = client
                .decompose(&DecomposeRequest::new(instruction.as_str()))
                .map_err(|e| InstructionError::Client(e.to_string()))?;
            decompose_from_steps(&response.steps, cfg)
        }
    }
}

pub fn decompose_by_preposition(
    instruction: &Instruction,
    cfg: &DecomposerConfig,
) -> DecomposedInstruction {
    let (nc, ac) = split_nc_ac_with(instruction, cfg);
    let keyphrases = keyphrases_by_preposition(&nc, cfg.max_keyphrase_words);
    if keyphrases.is_empty() {
        // Nothing tokenizable survived; ground the raw navigation text.
        return DecomposedInstruction {
            nc_keyphrases: vec![nc],
            ac_phrase: ac,
            source: DecompositionSource::Passthrough,
        };
    }
    DecomposedInstruction {
        nc_keyphrases: keyphrases,
        ac_phrase: ac,
        source: DecompositionSource::Preposition,
    }
}

/// Parses a numbered list ("1. ..." or "1) ...") out of the returned steps.
/// The final step becomes the AC phrase when it opens with an action verb and
/// at least one navigation step precedes it.
pub fn decompose_from_steps(
    steps: &[String],
    cfg: &DecomposerConfig,
) -> Result<DecomposedInstruction, InstructionError> {
    let mut parsed: Vec<String> = steps
        .iter()
        .flat_map(|s| s.lines())
        .filter_map(numbered_line)
        .collect();
    if parsed.is_empty() {
        return Err(InstructionError::MalformedResponse(
            "no numbered steps in response".into(),
        ));
    }
    let mut ac_phrase = String::new();
    if parsed.len() >= 2 {
        let last = parsed.last().expect("non-empty");
        if tokenize(last)
            .first()
            .is_some_and(|t| cfg.is_action_verb(t))
        {
            ac_phrase = parsed.pop().expect("non-empty");
        }
    }
    let nc_keyphrases: Vec<String> = parsed
        .iter()
        .map(|s| truncate_words(s, cfg.max_keyphrase_words))
        .filter(|s| !s.is_empty())
        .collect();
    if nc_keyphrases.is_empty() {
        return Err(InstructionError::MalformedResponse(
            "numbered steps carry no words".into(),
        ));
    }
    Ok(DecomposedInstruction {
        nc_keyphrases,
        ac_phrase,
        source: DecompositionSource::External,
    })
}

fn numbered_line(line: &str) -> Option<String> {
    let line = line.trim();
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return None;
    }
    let rest = line[digits..].strip_prefix(['.', ')'])?;
    let body = rest.trim();
    (!body.is_empty()).then(|| body.to_string())
}
