use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use zsnav_core::env_graph::SynthParams;
use zsnav_core::grounding::DEFAULT_DECAY;
use zsnav_core::instruction::{DecomposeMode, DEFAULT_MAX_KEYPHRASE_WORDS};
use zsnav_core::metrics::DEFAULT_SUCCESS_RADIUS_M;
use zsnav_core::{PolicyConfig, PolicyKind, SplitLabel};

pub const SCORER_URL_ENV: &str = "ZSNAV_SCORER_URL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerBackend {
    #[default]
    Oracle,
    Replay,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerConfig {
    pub backend: ScorerBackend,
    pub decay: f64,
    pub noise: f64,
    pub noise_seed: u64,
    /// Score table for the replay backend.
    pub table: Option<PathBuf>,
    /// Service root for the remote backend.
    pub url: Option<String>,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            backend: ScorerBackend::Oracle,
            decay: DEFAULT_DECAY,
            noise: 0.0,
            noise_seed: 0,
            table: None,
            url: None,
        }
    }
}

impl ScorerConfig {
    fn validate(&self) -> Result<()> {
        match (self.backend, &self.table, &self.url) {
            (ScorerBackend::Oracle, None, None) => {}
            (ScorerBackend::Replay, Some(table), None) => {
                if !table.is_file() {
                    bail!("score table {} does not exist", table.display());
                }
            }
            (ScorerBackend::Remote, None, Some(_)) => {}
            (ScorerBackend::Replay, None, _) => bail!("replay scorer needs a score table"),
            (ScorerBackend::Remote, _, None) => {
                bail!("remote scorer needs a url (flag, {SCORER_URL_ENV} or config)")
            }
            (backend, _, _) => {
                bail!("scorer settings for more than one backend given with backend {backend:?}")
            }
        }
        if !(0.0..=1.0).contains(&self.decay) || self.decay == 0.0 {
            bail!("oracle decay must lie in (0, 1], got {}", self.decay);
        }
        if !(0.0..=1.0).contains(&self.noise) {
            bail!("oracle noise must lie in [0, 1], got {}", self.noise);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub params: SynthParams,
}

/// Everything a run needs. Mirrors the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub environments: Vec<PathBuf>,
    pub episodes: Option<PathBuf>,
    pub synthetic: Option<SyntheticSource>,
    pub policy: PolicyKind,
    pub scorer: ScorerConfig,
    /// `policy_config.seed` is replaced by `seed`.
    pub policy_config: PolicyConfig,
    pub decompose: DecomposeMode,
    pub decomposer_url: Option<String>,
    pub max_keyphrase_words: usize,
    pub split_label: SplitLabel,
    pub success_radius_m: f64,
    pub trajectory_log: PathBuf,
    pub results: PathBuf,
    pub seed: u64,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            environments: Vec::new(),
            episodes: None,
            synthetic: None,
            policy: PolicyKind::SeqClipNav,
            scorer: ScorerConfig::default(),
            policy_config: PolicyConfig::default(),
            decompose: DecomposeMode::Preposition,
            decomposer_url: None,
            max_keyphrase_words: DEFAULT_MAX_KEYPHRASE_WORDS,
            split_label: SplitLabel::Unseen,
            success_radius_m: DEFAULT_SUCCESS_RADIUS_M,
            trajectory_log: PathBuf::from("trajectories.jsonl"),
            results: PathBuf::from("results.jsonl"),
            seed: 0,
            jobs: None,
        }
    }
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.environments.iter_mut().for_each(rebase);
        cfg.episodes.as_mut().map(rebase);
        cfg.scorer.table.as_mut().map(rebase);
        rebase(&mut cfg.trajectory_log);
        rebase(&mut cfg.results);
        Ok(cfg)
    }

    pub fn policy_config(&self) -> PolicyConfig {
        PolicyConfig {
            seed: self.seed,
            ..self.policy_config.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.synthetic, self.environments.is_empty()) {
            (Some(_), false) => bail!("give either environment files or synthetic seeds, not both"),
            (None, true) => bail!("no environment files or synthetic seeds given"),
            (None, false) if self.episodes.is_none() => {
                bail!("an episode file is required with environment files")
            }
            (Some(s), _) if s.seeds.is_empty() => bail!("synthetic source lists no seeds"),
            _ => {}
        }
        for path in self.environments.iter().chain(&self.episodes) {
            if !path.is_file() {
                bail!("{} does not exist", path.display());
            }
        }
        self.scorer.validate()?;
        self.policy_config().validate()?;
        if self.decompose == DecomposeMode::External && self.decomposer_url.is_none() {
            bail!("external decomposition needs a decomposer url");
        }
        if self.max_keyphrase_words == 0 {
            bail!("max_keyphrase_words must be positive");
        }
        if self.success_radius_m.is_nan() || self.success_radius_m < 0.0 {
            bail!("success radius must be non-negative");
        }
        if self.jobs == Some(0) {
            bail!("jobs must be positive");
        }
        Ok(())
    }
}

fn enum_arg<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Run flags. Every flag overrides the config file, which overrides defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file mirroring the run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Environment graph file; repeat for several scans.
    #[arg(long = "env")]
    pub environments: Vec<PathBuf>,
    #[arg(long)]
    pub episodes: Option<PathBuf>,
    /// Generate a synthetic world in memory; repeat for several.
    #[arg(long = "synthetic-seed")]
    pub synthetic_seeds: Vec<u64>,
    /// random, clip-nav or seq-clip-nav.
    #[arg(long, value_parser = enum_arg::<PolicyKind>)]
    pub policy: Option<PolicyKind>,
    /// oracle, replay or remote.
    #[arg(long, value_parser = enum_arg::<ScorerBackend>)]
    pub scorer: Option<ScorerBackend>,
    /// Score table for the replay backend.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub scorer_url: Option<String>,
    #[arg(long)]
    pub decay: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub noise_seed: Option<u64>,
    /// preposition or external.
    #[arg(long, value_parser = enum_arg::<DecomposeMode>)]
    pub decompose: Option<DecomposeMode>,
    #[arg(long)]
    pub decomposer_url: Option<String>,
    #[arg(long)]
    pub max_keyphrase_words: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub window_n: Option<usize>,
    #[arg(long)]
    pub stop_threshold: Option<f64>,
    #[arg(long)]
    pub advance_threshold: Option<f64>,
    #[arg(long)]
    pub backtrack_threshold: Option<f64>,
    #[arg(long)]
    pub random_walk_steps: Option<usize>,
    #[arg(long)]
    pub count_backtrack_steps: Option<bool>,
    /// seen or unseen.
    #[arg(long, value_parser = enum_arg::<SplitLabel>)]
    pub split_label: Option<SplitLabel>,
    #[arg(long)]
    pub success_radius: Option<f64>,
    #[arg(long)]
    pub trajectory_log: Option<PathBuf>,
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// Worker threads for episode execution.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl RunArgs {
    /// Layers flags over the config file over defaults. The scorer url comes
    /// from the flag, then `env_url`, then the file.
    pub fn resolve(&self, env_url: Option<String>) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if !self.environments.is_empty() {
            cfg.environments = self.environments.clone();
            cfg.synthetic = None;
        }
        if !self.synthetic_seeds.is_empty() {
            let params = cfg.synthetic.take().map(|s| s.params).unwrap_or_default();
            cfg.synthetic = Some(SyntheticSource {
                seeds: self.synthetic_seeds.clone(),
                params,
            });
            cfg.environments.clear();
        }
        set(&mut cfg.episodes, self.episodes.clone().map(Some));
        set(&mut cfg.policy, self.policy);
        if let Some(backend) = self.scorer {
            if backend != cfg.scorer.backend {
                cfg.scorer.table = None;
                cfg.scorer.url = None;
            }
            cfg.scorer.backend = backend;
        }
        set(&mut cfg.scorer.table, self.scores.clone().map(Some));
        if cfg.scorer.backend == ScorerBackend::Remote {
            set(&mut cfg.scorer.url, env_url.map(Some));
        }
        set(&mut cfg.scorer.url, self.scorer_url.clone().map(Some));
        set(&mut cfg.scorer.decay, self.decay);
        set(&mut cfg.scorer.noise, self.noise);
        set(&mut cfg.scorer.noise_seed, self.noise_seed);
        set(&mut cfg.decompose, self.decompose);
        set(
            &mut cfg.decomposer_url,
            self.decomposer_url.clone().map(Some),
        );
        set(&mut cfg.max_keyphrase_words, self.max_keyphrase_words);
        set(&mut cfg.seed, self.seed);
        let p = &mut cfg.policy_config;
        set(&mut p.max_steps, self.max_steps);
        set(&mut p.window_n, self.window_n);
        set(&mut p.stop_threshold, self.stop_threshold);
        set(&mut p.advance_threshold, self.advance_threshold);
        set(&mut p.backtrack_threshold, self.backtrack_threshold);
        set(&mut p.random_walk_steps, self.random_walk_steps);
        set(&mut p.count_backtrack_steps, self.count_backtrack_steps);
        set(&mut cfg.split_label, self.split_label);
        set(&mut cfg.success_radius_m, self.success_radius);
        set(&mut cfg.trajectory_log, self.trajectory_log.clone());
        set(&mut cfg.results, self.results.clone());
        set(&mut cfg.jobs, self.jobs.map(Some));
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
