//! Episode lifecycle: reset, the generic step function, budgets and
//! trajectory bookkeeping.
//!
//! A step resolves to exactly one of three outcomes:
//!
//! 1. the text holds no well-formed action literal: feedback `invalid format`;
//! 2. the literal names an unknown action or breaks its payload schema:
//!    feedback `invalid action: <reason>`;
//! 3. the action is applied. `stop` terminates and the reward is the
//!    environment's success predicate at that moment.
//!
//! Every step, whatever its outcome, consumes one unit of the step budget.
//! Running out of budget without `stop` truncates with reward 0.

use std::fmt;
use std::num::NonZeroUsize;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::actions::{extract_action, validate, ActionCall};
use crate::envs::{make_env, AssetStore, EnvKind, Environment};
use crate::params::{out_of_range, ConfigError, Difficulty, ParamMap};
use crate::render::{ascii_frame, Canvas};

/// How many past turns an agent is shown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HistoryWindow {
    Last(NonZeroUsize),
    #[default]
    Unbounded,
}

impl HistoryWindow {
    /// Rejects a zero window.
    pub fn last(k: usize) -> Result<Self, ConfigError> {
        NonZeroUsize::new(k)
            .map(HistoryWindow::Last)
            .ok_or_else(|| out_of_range("history_window", 0, "at least 1, or inf"))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        match text {
            "inf" | "unbounded" | "all" => Ok(HistoryWindow::Unbounded),
            other => other
                .parse::<usize>()
                .map_err(|_| out_of_range("history_window", other, "positive integer or inf"))
                .and_then(HistoryWindow::last),
        }
    }
}

impl fmt::Display for HistoryWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistoryWindow::Last(k) => write!(f, "{k}"),
            HistoryWindow::Unbounded => f.write_str("inf"),
        }
    }
}

impl Serialize for HistoryWindow {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            HistoryWindow::Last(k) => s.serialize_u64(k.get() as u64),
            HistoryWindow::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for HistoryWindow {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(n) => HistoryWindow::last(n as usize),
            Raw::Text(t) => HistoryWindow::parse(&t),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

fn default_true() -> bool {
    true
}

/// Everything needed to start an episode. Serialises to a flat JSON object;
/// environment parameters sit beside the fixed keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub env_id: String,
    #[serde(default)]
    pub difficulty: Difficulty,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to 20 (easy) or 30 (hard).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u32>,
    #[serde(default = "default_true")]
    pub feedback_enabled: bool,
    #[serde(default)]
    pub text_mode: bool,
    #[serde(default)]
    pub goal_observation: bool,
    #[serde(default)]
    pub history_window: HistoryWindow,
    /// Explicit parameters; override the difficulty preset.
    #[serde(flatten)]
    pub params: ParamMap,
}

impl EpisodeConfig {
    pub fn new(kind: EnvKind, seed: u64) -> Self {
        Self {
            env_id: kind.id().to_string(),
            difficulty: Difficulty::Easy,
            seed,
            max_steps: None,
            feedback_enabled: true,
            text_mode: false,
            goal_observation: false,
            history_window: HistoryWindow::Unbounded,
            params: ParamMap::new(),
        }
    }

    pub fn with_difficulty(mut self, difficulty: Difficulty) -> Self {
        self.difficulty = difficulty;
        self
    }

    pub fn with_param(mut self, key: &str, value: serde_json::Value) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn kind(&self) -> Result<EnvKind, ConfigError> {
        self.env_id.parse()
    }

    pub fn effective_max_steps(&self) -> u32 {
        self.max_steps.unwrap_or_else(|| self.difficulty.default_max_steps())
    }
}

/// What the agent perceives on one turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    #[serde(skip)]
    pub image: Option<Arc<Canvas>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_view: Option<String>,
    pub feedback: String,
    pub steps_remaining: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    InvalidFormat,
    InvalidAction,
    Applied,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: u8,
    pub terminated: bool,
    pub truncated: bool,
    pub kind: StepKind,
    pub parsed: Option<ActionCall>,
    /// Outcome text before the remaining-step count is appended.
    pub env_feedback: String,
}

/// One turn: the observation acted on, the agent's raw text, its parse and
/// the feedback shown afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub observation: Observation,
    pub raw_action: String,
    pub parsed: Option<ActionCall>,
    pub feedback: String,
    pub kind: StepKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub instruction: String,
    pub env_id: String,
    pub difficulty: Difficulty,
    pub seed: u64,
    pub params: ParamMap,
    pub max_steps: u32,
    pub text_mode: bool,
    pub feedback_enabled: bool,
    pub initial_state_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Observation>,
    pub turns: Vec<TurnRecord>,
    pub final_observation: Observation,
    pub reward: u8,
    pub terminated: bool,
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_cause: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpisodeError {
    #[error("episode already finished")]
    Finished,
}

/// The last `window` turns of a trajectory (all of them when unbounded).
pub fn build_history(trajectory: &Trajectory, window: HistoryWindow) -> &[TurnRecord] {
    let turns = &trajectory.turns;
    match window {
        HistoryWindow::Unbounded => turns,
        HistoryWindow::Last(k) => &turns[turns.len().saturating_sub(k.get())..],
    }
}

/// Appends the remaining-step count to an outcome text; with feedback
/// disabled only the count is shown.
pub fn compose_feedback(outcome: &str, steps_remaining: u32, feedback_enabled: bool) -> String {
    if feedback_enabled && !outcome.is_empty() {
        format!("{outcome}\nSteps remaining: {steps_remaining}")
    } else {
        format!("Steps remaining: {steps_remaining}")
    }
}

/// A single-owner episode state machine.
pub struct Episode {
    config: EpisodeConfig,
    env: Box<dyn Environment>,
    steps_remaining: u32,
    current: Observation,
    finished: bool,
    trajectory: Trajectory,
}

impl fmt::Debug for Episode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Episode")
            .field("env", &self.config.env_id)
            .field("seed", &self.config.seed)
            .field("steps_remaining", &self.steps_remaining)
            .field("finished", &self.finished)
            .finish()
    }
}

impl Episode {
    /// Generates the environment from the config's seed and returns the
    /// episode positioned at its first observation.
    pub fn reset(config: &EpisodeConfig, assets: &AssetStore) -> Result<Self, ConfigError> {
        let kind = config.kind()?;
        let env = make_env(kind, config.difficulty, &config.params, config.seed, assets)?;
        Self::from_env(config.clone(), env)
    }

    /// Starts an episode on an already generated environment.
    pub fn from_env(config: EpisodeConfig, env: Box<dyn Environment>) -> Result<Self, ConfigError> {
        let kind = env.kind();
        if config.text_mode && !kind.supports_text() {
            return Err(ConfigError::TextModeUnsupported(kind.id().to_string()));
        }
        let max_steps = config.effective_max_steps();
        if max_steps == 0 {
            return Err(out_of_range("max_steps", 0, "at least 1"));
        }
        let instruction = compose_instruction(env.as_ref(), &config, max_steps);
        let current = observe(env.as_ref(), &config, String::new(), max_steps, None);
        let goal = if config.goal_observation { goal_observation_of(env.as_ref(), &config, max_steps) } else { None };
        let trajectory = Trajectory {
            instruction,
            env_id: kind.id().to_string(),
            difficulty: config.difficulty,
            seed: config.seed,
            params: env.params(),
            max_steps,
            text_mode: config.text_mode,
            feedback_enabled: config.feedback_enabled,
            initial_state_hash: crate::rng::digest_hex(env.canonical_state().as_bytes()),
            goal,
            turns: Vec::new(),
            final_observation: current.clone(),
            reward: 0,
            terminated: false,
            truncated: false,
            abort_cause: None,
            strategy: None,
        };
        Ok(Self { config, env, steps_remaining: max_steps, current, finished: false, trajectory })
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn instruction(&self) -> &str {
        &self.trajectory.instruction
    }

    pub fn observation(&self) -> &Observation {
        &self.current
    }

    /// The environment's state. Solvers and tests read it; agents must not.
    pub fn env(&self) -> &dyn Environment {
        self.env.as_ref()
    }

    pub fn steps_remaining(&self) -> u32 {
        self.steps_remaining
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// The observation the environment would show once solved, rendered the
    /// same way as regular observations.
    pub fn goal_observation(&self) -> Option<Observation> {
        goal_observation_of(self.env.as_ref(), &self.config, self.steps_remaining)
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn into_trajectory(self) -> Trajectory {
        self.trajectory
    }

    /// Ends the episode early (e.g. the agent's transport failed); counts as
    /// truncation with reward 0.
    pub fn abort(&mut self, cause: impl Into<String>) {
        if self.finished {
            return;
        }
        self.finished = true;
        self.trajectory.truncated = true;
        self.trajectory.abort_cause = Some(cause.into());
    }

    pub fn step(&mut self, raw: &str) -> Result<StepOutcome, EpisodeError> {
        if self.finished {
            return Err(EpisodeError::Finished);
        }
        self.steps_remaining -= 1;

        let mut terminated = false;
        let mut reward = 0u8;
        let mut changed = false;
        let (kind, parsed, env_feedback) = match extract_action(raw) {
            Err(_) => (StepKind::InvalidFormat, None, "invalid format".to_string()),
            Ok(call) => match validate(&call, self.env.schemas()) {
                Err(violation) => (StepKind::InvalidAction, Some(call), format!("invalid action: {violation}")),
                Ok(args) => {
                    let text = if call.is_stop() {
                        terminated = true;
                        let solved = self.env.is_solved();
                        reward = u8::from(solved);
                        if solved { "stopped: task solved" } else { "stopped: task not solved" }.to_string()
                    } else {
                        changed = true;
                        self.env.apply(&call.name, &args)
                    };
                    (StepKind::Applied, Some(call), text)
                }
            },
        };
        let truncated = !terminated && self.steps_remaining == 0;

        let previous_image = if changed { None } else { self.current.image.clone() };
        let observation =
            observe(self.env.as_ref(), &self.config, env_feedback.clone(), self.steps_remaining, previous_image);
        let acted_on = std::mem::replace(&mut self.current, observation.clone());
        self.trajectory.turns.push(TurnRecord {
            observation: acted_on,
            raw_action: raw.to_string(),
            parsed: parsed.clone(),
            feedback: observation.feedback.clone(),
            kind,
        });
        self.trajectory.final_observation = observation.clone();
        if terminated || truncated {
            self.finished = true;
            self.trajectory.reward = reward;
            self.trajectory.terminated = terminated;
            self.trajectory.truncated = truncated;
        }
        Ok(StepOutcome { observation, reward, terminated, truncated, kind, parsed, env_feedback })
    }
}

fn observe(
    env: &dyn Environment,
    config: &EpisodeConfig,
    outcome: String,
    steps_remaining: u32,
    reuse_image: Option<Arc<Canvas>>,
) -> Observation {
    let feedback = compose_feedback(&outcome, steps_remaining, config.feedback_enabled);
    if config.text_mode {
        let grid = env.render_ascii().expect("text mode checked at reset");
        Observation { image: None, text_view: Some(ascii_frame(&grid)), feedback, steps_remaining }
    } else {
        let image = reuse_image.unwrap_or_else(|| Arc::new(env.render()));
        Observation { image: Some(image), text_view: None, feedback, steps_remaining }
    }
}

fn goal_observation_of(env: &dyn Environment, config: &EpisodeConfig, steps_remaining: u32) -> Option<Observation> {
    let feedback = compose_feedback("goal state", steps_remaining, config.feedback_enabled);
    if config.text_mode {
        env.goal_ascii().map(|g| Observation {
            image: None,
            text_view: Some(ascii_frame(&g)),
            feedback,
            steps_remaining,
        })
    } else {
        env.goal_render().map(|c| Observation { image: Some(Arc::new(c)), text_view: None, feedback, steps_remaining })
    }
}

fn compose_instruction(env: &dyn Environment, config: &EpisodeConfig, max_steps: u32) -> String {
    let mut out = env.task_text();
    out.push_str("\n\nAvailable actions:\n");
    out.push_str(&env.schemas().describe());
    out.push_str(
        "\n\nAction format: reply with one action per turn, written as a function call such as \
         move(2) or as a tuple literal such as ('move', 2). Lists may be written with [...] or (...). \
         Only the last action literal in your reply is executed.",
    );
    out.push_str(&format!(
        "\nYou have {max_steps} steps; every reply uses one step, even if it cannot be executed. \
         Each turn's feedback reports the steps remaining. The episode ends when you call stop(), \
         and you succeed only if the task is solved at that moment."
    ));
    if config.text_mode {
        out.push_str("\nObservations are rendered as ASCII text.");
    }
    if config.goal_observation {
        out.push_str("\nThe observation of the solved configuration is attached to this instruction.");
    }
    out
}
