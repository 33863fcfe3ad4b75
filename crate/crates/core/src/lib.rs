//! Procedurally generated visual decision-making environments driven by
//! function-call actions, together with oracle solvers and an evaluation
//! harness.
//!
//! The crate is organised bottom-up:
//!
//! - [`actions`]: the function-call grammar agents speak, and per-environment
//!   payload schemas.
//! - [`render`]: a small deterministic software renderer (canvas, bitmap font,
//!   PNG encoding, ASCII frames).
//! - [`envs`]: the twelve environments and their registry.
//! - [`solvers`]: privileged multi-step solvers for every environment.
//! - [`episode`]: the generic step engine and trajectory bookkeeping.
//! - [`harness`]: agents, batch evaluation, the wire protocol and SFT export.

pub mod actions;
pub mod envs;
pub mod episode;
pub mod harness;
pub mod params;
pub mod render;
pub mod rng;
pub mod solvers;

pub use actions::{canonical_repr, extract_action, ActionCall, ParseError, Value};
pub use envs::{make_env, AssetStore, EnvKind, Environment};
pub use episode::{
    build_history, Episode, EpisodeConfig, EpisodeError, HistoryWindow, Observation, StepKind, StepOutcome, Trajectory,
    TurnRecord,
};
pub use params::{ConfigError, Difficulty, ParamMap};
pub use render::{Canvas, CharGrid, Rgb};
pub use solvers::{verify_plan, SolveError, SolverOptions, SolverPlan};
