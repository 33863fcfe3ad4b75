//! The agent contract and the built-in agents.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::Rng;

use super::wire::{ExternalAgent, Transport};
use super::HarnessError;
use crate::actions::{canonical_repr, ActionCall, ArgKind, Value};
use crate::envs::Environment;
use crate::episode::{EpisodeConfig, Observation, TurnRecord};
use crate::solvers::SolverOptions;

/// Handed to an agent once per episode before the first turn.
pub struct EpisodeStart<'a> {
    pub config: &'a EpisodeConfig,
    pub instruction: &'a str,
    /// Privileged state access. Only oracle agents should look at it.
    pub env: &'a dyn Environment,
}

/// What an agent sees on one turn.
pub struct TurnView<'a> {
    pub instruction: &'a str,
    /// Past turns, already cut to the configured history window.
    pub history: &'a [TurnRecord],
    pub observation: &'a Observation,
    /// The solved-state observation, when goal observations are on.
    pub goal: Option<&'a Observation>,
    /// Zero-based turn index.
    pub turn: usize,
}

/// Receives the instruction, a window of past turns and the current
/// observation; returns raw action text.
///
/// `Err` from `act` means the agent is gone (dropped connection, dead
/// process); the episode then ends truncated. Slow or malformed replies are
/// not errors: return the text (possibly empty) and the step engine scores
/// it as an invalid format.
pub trait Agent: Send {
    fn begin(&mut self, start: &EpisodeStart<'_>) -> Result<(), HarnessError>;
    fn act(&mut self, view: &TurnView<'_>) -> Result<String, HarnessError>;
    /// Called once with the final result; the default ignores it.
    fn end(&mut self, _reward: u8, _terminated: bool, _truncated: bool) {}
    /// Solver strategy behind the actions, recorded in trajectories.
    fn strategy(&self) -> Option<String> {
        None
    }
}

/// Builds one fresh agent per episode.
pub trait AgentFactory: Sync {
    fn create(&self) -> Result<Box<dyn Agent>, HarnessError>;
}

impl<F> AgentFactory for F
where
    F: Fn() -> Result<Box<dyn Agent>, HarnessError> + Sync,
{
    fn create(&self) -> Result<Box<dyn Agent>, HarnessError> {
        self()
    }
}

/// Plays the oracle solver's plan for each episode.
#[derive(Debug, Default)]
pub struct SolverAgent {
    strategy: Option<String>,
    target_steps: Option<usize>,
    plan: Vec<String>,
    used: Option<String>,
    next: usize,
}

impl SolverAgent {
    pub fn new(strategy: Option<String>) -> Self {
        Self { strategy, ..Self::default() }
    }

    pub fn with_target(mut self, steps: usize) -> Self {
        self.target_steps = Some(steps);
        self
    }
}

impl Agent for SolverAgent {
    fn begin(&mut self, start: &EpisodeStart<'_>) -> Result<(), HarnessError> {
        let opts =
            SolverOptions { strategy: self.strategy.clone(), target_steps: self.target_steps, seed: start.config.seed };
        self.next = 0;
        match start.env.solve(&opts) {
            Ok(plan) => {
                self.used = Some(plan.strategy.clone());
                self.plan = plan.lines();
            }
            Err(e) => {
                log::warn!("solver failed on {} seed {}: {e}", start.config.env_id, start.config.seed);
                self.used = self.strategy.clone();
                self.plan = vec!["stop()".into()];
            }
        }
        Ok(())
    }

    fn act(&mut self, _view: &TurnView<'_>) -> Result<String, HarnessError> {
        let line = self.plan.get(self.next).cloned().unwrap_or_else(|| "stop()".into());
        self.next += 1;
        Ok(line)
    }

    fn strategy(&self) -> Option<String> {
        self.used.clone()
    }
}

/// Probability that the random agent stops on a given turn.
pub const RANDOM_STOP_P: f64 = 0.05;

/// Uniformly random schema-valid actions; `stop` with probability 0.05.
#[derive(Debug, Default)]
pub struct RandomAgent {
    rng: Option<crate::rng::StreamRng>,
    actions: Vec<(String, Vec<ArgKind>)>,
}

impl RandomAgent {
    pub fn new() -> Self {
        Self::default()
    }
}

fn sample_arg(kind: &ArgKind, rng: &mut impl Rng) -> Value {
    match kind {
        ArgKind::Int { min, max } => Value::Int(rng.gen_range(*min..=*max)),
        ArgKind::Real { min, max } => Value::Real(rng.gen_range(*min..=*max)),
        ArgKind::IntList { bounds } => {
            Value::List(bounds.iter().map(|&(lo, hi)| Value::Int(rng.gen_range(lo..=hi))).collect())
        }
        ArgKind::RealList { bounds } => {
            Value::List(bounds.iter().map(|&(lo, hi)| Value::Real(rng.gen_range(lo..=hi))).collect())
        }
    }
}

impl Agent for RandomAgent {
    fn begin(&mut self, start: &EpisodeStart<'_>) -> Result<(), HarnessError> {
        self.rng = Some(crate::rng::stream(start.config.seed, "agent/random"));
        self.actions = start
            .env
            .schemas()
            .iter()
            .filter(|s| s.name != "stop")
            .map(|s| (s.name.clone(), s.args.iter().map(|a| a.kind.clone()).collect()))
            .collect();
        Ok(())
    }

    fn act(&mut self, _view: &TurnView<'_>) -> Result<String, HarnessError> {
        let rng = self.rng.get_or_insert_with(|| crate::rng::stream(0, "agent/random"));
        if self.actions.is_empty() || rng.gen_bool(RANDOM_STOP_P) {
            return Ok(canonical_repr(&ActionCall::stop()));
        }
        let (name, args) = &self.actions[rng.gen_range(0..self.actions.len())];
        let payload = args.iter().map(|k| sample_arg(k, rng)).collect();
        Ok(canonical_repr(&ActionCall::known(name, payload)))
    }
}

/// Replays a fixed list of replies, then stops.
#[derive(Debug, Clone, Default)]
pub struct ScriptedAgent {
    script: Vec<String>,
    next: usize,
}

impl ScriptedAgent {
    pub fn new(script: Vec<String>) -> Self {
        Self { script, next: 0 }
    }
}

impl Agent for ScriptedAgent {
    fn begin(&mut self, _start: &EpisodeStart<'_>) -> Result<(), HarnessError> {
        self.next = 0;
        Ok(())
    }

    fn act(&mut self, _view: &TurnView<'_>) -> Result<String, HarnessError> {
        let line = self.script.get(self.next).cloned().unwrap_or_else(|| "stop()".into());
        self.next += 1;
        Ok(line)
    }
}

/// Command-line agent selector:
/// `solver[:strategy]`, `random`, `scripted:<a>;<b>;...`, `external:<transport>`.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentSpec {
    Solver(Option<String>),
    Random,
    Scripted(Vec<String>),
    External { transport: Transport, timeout: Duration },
}

impl AgentSpec {
    /// Replies in a script are separated by `;` or newlines; `stop` alone is
    /// shorthand for `stop()`.
    pub fn scripted(text: &str) -> Self {
        let script = text
            .split([';', '\n'])
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| if s == "stop" { "stop()".to_string() } else { s.to_string() })
            .collect();
        AgentSpec::Scripted(script)
    }

    pub fn with_timeout(self, limit: Duration) -> Self {
        match self {
            AgentSpec::External { transport, .. } => AgentSpec::External { transport, timeout: limit },
            other => other,
        }
    }
}

impl FromStr for AgentSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        match (head, rest) {
            ("solver", None) => Ok(AgentSpec::Solver(None)),
            ("solver", Some(strategy)) if !strategy.is_empty() => Ok(AgentSpec::Solver(Some(strategy.to_string()))),
            ("random", None) => Ok(AgentSpec::Random),
            ("scripted", Some(script)) => Ok(AgentSpec::scripted(script)),
            ("external", Some(addr)) => {
                Ok(AgentSpec::External { transport: addr.parse()?, timeout: super::DEFAULT_AGENT_TIMEOUT })
            }
            _ => Err(HarnessError::BadAgentSpec(s.to_string())),
        }
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentSpec::Solver(None) => f.write_str("solver"),
            AgentSpec::Solver(Some(s)) => write!(f, "solver:{s}"),
            AgentSpec::Random => f.write_str("random"),
            AgentSpec::Scripted(lines) => write!(f, "scripted:{}", lines.join(";")),
            AgentSpec::External { transport, .. } => write!(f, "external:{transport}"),
        }
    }
}

impl AgentFactory for AgentSpec {
    fn create(&self) -> Result<Box<dyn Agent>, HarnessError> {
        Ok(match self {
            AgentSpec::Solver(s) => Box::new(SolverAgent::new(s.clone())),
            AgentSpec::Random => Box::new(RandomAgent::new()),
            AgentSpec::Scripted(lines) => Box::new(ScriptedAgent::new(lines.clone())),
            AgentSpec::External { transport, timeout } => Box::new(ExternalAgent::connect(transport, *timeout)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{extract_action, validate};
    use crate::envs::{make_env, AssetStore, EnvKind};
    use crate::params::{Difficulty, ParamMap};

    #[test]
    fn spec_parsing() {
        assert_eq!("solver".parse::<AgentSpec>().unwrap(), AgentSpec::Solver(None));
        assert_eq!("solver:dfs".parse::<AgentSpec>().unwrap(), AgentSpec::Solver(Some("dfs".into())));
        assert_eq!("random".parse::<AgentSpec>().unwrap(), AgentSpec::Random);
        assert_eq!(
            "scripted:move(1); stop".parse::<AgentSpec>().unwrap(),
            AgentSpec::Scripted(vec!["move(1)".into(), "stop()".into()])
        );
        assert!("oracle".parse::<AgentSpec>().is_err());
        assert!("solver:".parse::<AgentSpec>().is_err());
        let ext: AgentSpec = "external:tcp:127.0.0.1:9000".parse().unwrap();
        assert_eq!(ext.to_string(), "external:tcp:127.0.0.1:9000");
    }

    #[test]
    fn random_actions_are_schema_valid() {
        let assets = AssetStore::synthetic();
        for kind in EnvKind::ALL {
            let env = make_env(kind, Difficulty::Easy, &ParamMap::new(), 1, &assets).unwrap();
            let config = EpisodeConfig::new(kind, 1);
            let mut agent = RandomAgent::new();
            agent.begin(&EpisodeStart { config: &config, instruction: "", env: env.as_ref() }).unwrap();
            let obs = Observation { image: None, text_view: None, feedback: String::new(), steps_remaining: 1 };
            for turn in 0..200 {
                let view = TurnView { instruction: "", history: &[], observation: &obs, goal: None, turn };
                let raw = agent.act(&view).unwrap();
                let call = extract_action(&raw).unwrap();
                assert!(validate(&call, env.schemas()).is_ok(), "{kind}: {raw}");
            }
        }
    }
}
