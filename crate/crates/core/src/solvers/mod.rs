//! Oracle solvers.
//!
//! Solvers read the true (hidden) environment state and emit a plan of
//! actions ending in `stop`. Several support a requested plan length
//! (`target_steps`), reached by inserting state-neutral action pairs;
//! demonstration variety comes from the plan's structure, not from inference.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::{canonical_repr, ActionCall};
use crate::envs::{EnvKind, Environment};
use crate::episode::{Episode, EpisodeConfig};

pub mod equation;
pub mod image;
pub mod maze;
pub mod mr3d;
pub mod patch;
pub mod rotation;
pub mod sliding;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Strategy name; `None` selects the environment's default.
    pub strategy: Option<String>,
    /// Requested number of non-`stop` actions.
    pub target_steps: Option<usize>,
    /// Seed for stochastic choices (padding placement, splits, DFS order).
    pub seed: u64,
}

impl SolverOptions {
    pub fn with_strategy(strategy: &str) -> Self {
        Self { strategy: Some(strategy.to_string()), ..Self::default() }
    }

    pub fn with_target(mut self, steps: usize) -> Self {
        self.target_steps = Some(steps);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub(crate) fn rng(&self, domain: &str) -> crate::rng::StreamRng {
        crate::rng::stream(self.seed, &format!("solver/{domain}"))
    }
}

/// An ordered action list that always ends with `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverPlan {
    pub actions: Vec<ActionCall>,
    pub strategy: String,
    pub seed: u64,
}

impl SolverPlan {
    /// Appends `stop` to `moves`.
    pub fn new(mut moves: Vec<ActionCall>, strategy: &str, seed: u64) -> Self {
        moves.push(ActionCall::stop());
        Self { actions: moves, strategy: strategy.to_string(), seed }
    }

    /// The actions before the final `stop`.
    pub fn moves(&self) -> &[ActionCall] {
        match self.actions.split_last() {
            Some((last, rest)) if last.is_stop() => rest,
            _ => &self.actions,
        }
    }

    /// Canonical action text, one entry per action.
    pub fn lines(&self) -> Vec<String> {
        self.actions.iter().map(canonical_repr).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("unknown strategy '{strategy}' for {env}")]
    UnknownStrategy { env: String, strategy: String },
    #[error("requested {target} steps but the shortest plan needs {minimal}")]
    TargetTooShort { minimal: usize, target: usize },
    #[error("cannot pad plan to the requested length: {0}")]
    PaddingImpossible(String),
    #[error("no solution found: {0}")]
    NoSolution(String),
}

/// Resolves the strategy name against the environment's list.
pub(crate) fn pick_strategy(kind: EnvKind, opts: &SolverOptions) -> Result<&'static str, SolveError> {
    let all = kind.strategies();
    match &opts.strategy {
        None => Ok(all[0]),
        Some(s) => all
            .iter()
            .copied()
            .find(|k| k == s)
            .ok_or_else(|| SolveError::UnknownStrategy { env: kind.id().to_string(), strategy: s.clone() }),
    }
}

/// Number of padding actions needed to reach the requested length.
pub(crate) fn padding_needed(minimal: usize, target: Option<usize>) -> Result<usize, SolveError> {
    match target {
        None => Ok(0),
        Some(t) if t < minimal => Err(SolveError::TargetTooShort { minimal, target: t }),
        Some(t) => Ok(t - minimal),
    }
}

/// Replays `plan` from the given state through the real step engine and
/// reports whether it earns reward 1.
pub fn verify_plan(env: &dyn Environment, plan: &SolverPlan) -> bool {
    let config =
        EpisodeConfig { max_steps: Some(plan.actions.len().max(1) as u32), ..EpisodeConfig::new(env.kind(), 0) };
    let mut episode = match Episode::from_env(config, env.clone_box()) {
        Ok(e) => e,
        Err(_) => return false,
    };
    for line in plan.lines() {
        match episode.step(&line) {
            Ok(outcome) if outcome.terminated || outcome.truncated => return outcome.reward == 1,
            Ok(_) => {}
            Err(_) => return false,
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_moves_exclude_stop() {
        let plan = SolverPlan::new(vec![ActionCall::known("move", vec![])], "bfs", 0);
        assert_eq!(plan.actions.len(), 2);
        assert_eq!(plan.moves().len(), 1);
        assert_eq!(plan.lines()[1], "('stop',)");
    }

    #[test]
    fn padding_arithmetic() {
        assert_eq!(padding_needed(3, None), Ok(0));
        assert_eq!(padding_needed(3, Some(7)), Ok(4));
        assert_eq!(padding_needed(3, Some(2)), Err(SolveError::TargetTooShort { minimal: 3, target: 2 }));
    }

    #[test]
    fn strategies_resolve() {
        assert_eq!(pick_strategy(EnvKind::Jigsaw, &SolverOptions::default()), Ok("reorder"));
        assert_eq!(pick_strategy(EnvKind::Jigsaw, &SolverOptions::with_strategy("swap")), Ok("swap"));
        assert!(pick_strategy(EnvKind::Jigsaw, &SolverOptions::with_strategy("dfs")).is_err());
    }
}
