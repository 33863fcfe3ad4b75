//! Running agents against environments: the agent contract and built-in
//! agents, single and batched episodes, the line-delimited JSON wire
//! protocol, and supervised fine-tuning export.

use std::time::Duration;

use thiserror::Error;

use crate::params::ConfigError;

pub mod agent;
pub mod runner;
pub mod sft;
pub mod wire;

pub use agent::{Agent, AgentFactory, AgentSpec, EpisodeStart, RandomAgent, ScriptedAgent, SolverAgent, TurnView};
pub use runner::{batch_configs, run_batch, run_episode, BatchOutput, EvalSummary, RunOptions, TaskSummary};
pub use sft::{export_sft, load_manifest, manifest_text, read_records, replay_record, ExportStats, SftRecord};
pub use wire::{serve, serve_connection, ExternalAgent, Transport};

/// Default wall-clock budget for one agent reply.
pub const DEFAULT_AGENT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("empty batch")]
    EmptyBatch,
    #[error("bad agent spec '{0}'")]
    BadAgentSpec(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("export sink: {0}")]
    Sink(#[from] std::io::Error),
    #[error("record {id}: {reason}")]
    BadRecord { id: String, reason: String },
}
