//! Zero-shot language-guided navigation on discrete viewpoint graphs.
//!
//! The crate covers environment graphs and synthetic worlds, instruction
//! decomposition, text-to-view grounding backends, the CLIP-Nav and
//! Seq CLIP-Nav policies with a random-walk baseline, batch execution, and
//! the SR / SPL / OSR / RCS metrics.

pub mod env_graph;
pub mod grounding;
mod http;
pub mod instruction;
pub mod metrics;
pub mod policy;
pub mod rng;
pub mod runner;

pub use env_graph::{EnvironmentGraph, Episode, GraphError, ViewSplit, Viewpoint};
pub use grounding::{GroundingScorer, KgsResult, OracleScorer, RemoteScorer, ReplayScorer};
pub use instruction::{decompose, DecomposedInstruction, Instruction};
pub use metrics::{EpisodeResult, MetricsReport, SplitLabel};
pub use policy::{PolicyConfig, PolicyKind, StopReason, Trajectory};
pub use runner::{run_batch, Execution, RunSpec, World, Worlds};
