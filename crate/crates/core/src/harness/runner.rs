//! Single episodes, parallel batches and their summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::agent::{Agent, AgentFactory, EpisodeStart, TurnView};
use super::HarnessError;
use crate::envs::AssetStore;
use crate::episode::{build_history, Episode, EpisodeConfig, Trajectory};

/// Batch settings beyond the per-episode configs.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub assets: AssetStore,
    /// Worker threads; 0 is treated as 1.
    pub parallelism: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { assets: AssetStore::synthetic(), parallelism: 1 }
    }
}

/// Runs one episode to termination or truncation.
///
/// Fails only when the config itself is invalid (unknown env, bad
/// parameter, text mode on an image-only env). An agent that fails mid-run
/// ends the episode truncated, with the cause kept in the trajectory.
pub fn run_episode(
    config: &EpisodeConfig,
    agent: &mut dyn Agent,
    assets: &AssetStore,
) -> Result<Trajectory, HarnessError> {
    let episode = Episode::reset(config, assets)?;
    Ok(drive(episode, Ok(agent)))
}

fn drive(mut episode: Episode, agent: Result<&mut dyn Agent, HarnessError>) -> Trajectory {
    let agent = match agent {
        Ok(a) => a,
        Err(e) => {
            log::warn!("agent unavailable for {} seed {}: {e}", episode.config().env_id, episode.config().seed);
            episode.abort(e.to_string());
            return episode.into_trajectory();
        }
    };
    let config = episode.config().clone();
    let goal = episode.trajectory().goal.clone();
    let start = EpisodeStart { config: &config, instruction: episode.instruction(), env: episode.env() };
    if let Err(e) = agent.begin(&start) {
        log::warn!("agent failed to start on {} seed {}: {e}", config.env_id, config.seed);
        episode.abort(e.to_string());
    }
    let mut turn = 0;
    while !episode.is_finished() {
        let view = TurnView {
            instruction: episode.instruction(),
            history: build_history(episode.trajectory(), config.history_window),
            observation: episode.observation(),
            goal: goal.as_ref(),
            turn,
        };
        match agent.act(&view) {
            Ok(raw) => {
                episode.step(&raw).expect("loop only steps unfinished episodes");
            }
            Err(e) => {
                log::warn!("agent lost on {} seed {} turn {turn}: {e}", config.env_id, config.seed);
                episode.abort(e.to_string());
            }
        }
        turn += 1;
    }
    let mut trajectory = episode.into_trajectory();
    agent.end(trajectory.reward, trajectory.terminated, trajectory.truncated);
    trajectory.strategy = agent.strategy();
    trajectory
}

/// `episodes` copies of `base` with seeds `base.seed + i`.
pub fn batch_configs(base: &EpisodeConfig, episodes: usize) -> Vec<EpisodeConfig> {
    (0..episodes as u64).map(|i| EpisodeConfig { seed: base.seed + i, ..base.clone() }).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean turns over successful episodes.
    pub mean_success_steps: Option<f64>,
    /// Turns used, over all episodes.
    pub step_histogram: BTreeMap<usize, usize>,
    success_steps_total: usize,
}

impl TaskSummary {
    fn add(&mut self, steps: usize, success: bool) {
        self.episodes += 1;
        *self.step_histogram.entry(steps).or_default() += 1;
        if success {
            self.successes += 1;
            self.success_steps_total += steps;
        }
        self.refresh();
    }

    fn merge(&mut self, other: &TaskSummary) {
        self.episodes += other.episodes;
        self.successes += other.successes;
        self.success_steps_total += other.success_steps_total;
        for (k, v) in &other.step_histogram {
            *self.step_histogram.entry(*k).or_default() += v;
        }
        self.refresh();
    }

    fn refresh(&mut self) {
        self.success_rate = if self.episodes == 0 { 0.0 } else { self.successes as f64 / self.episodes as f64 };
        self.mean_success_steps = (self.successes > 0).then(|| self.success_steps_total as f64 / self.successes as f64);
    }
}

/// Per-task results keyed by `<env>/<difficulty>`. Built from integer
/// counts, so it does not depend on the order episodes finished in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub tasks: BTreeMap<String, TaskSummary>,
}

impl EvalSummary {
    pub fn from_trajectories<'a>(trajectories: impl IntoIterator<Item = &'a Trajectory>) -> Self {
        let mut out = Self::default();
        for t in trajectories {
            let key = format!("{}/{}", t.env_id, t.difficulty);
            out.tasks.entry(key).or_default().add(t.turns.len(), t.reward == 1);
        }
        out
    }

    pub fn merge(&mut self, other: &EvalSummary) {
        for (k, v) in &other.tasks {
            self.tasks.entry(k.clone()).or_default().merge(v);
        }
    }

    pub fn episodes(&self) -> usize {
        self.tasks.values().map(|t| t.episodes).sum()
    }

    /// Fixed-width text table, one row per task.
    pub fn table(&self) -> String {
        let mut out =
            format!("{:<32} {:>8} {:>9} {:>8} {:>10}\n", "task", "episodes", "successes", "rate", "mean_steps");
        for (task, s) in &self.tasks {
            let mean = s.mean_success_steps.map_or("-".to_string(), |m| format!("{m:.2}"));
            let _ = writeln!(out, "{task:<32} {:>8} {:>9} {:>8.2} {mean:>10}", s.episodes, s.successes, s.success_rate);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub summary: EvalSummary,
    /// In config order.
    pub trajectories: Vec<Trajectory>,
}

/// Runs every config with a fresh agent from `factory`, up to
/// `opts.parallelism` at a time. Configs are validated before any episode
/// starts.
pub fn run_batch(
    configs: &[EpisodeConfig],
    factory: &dyn AgentFactory,
    opts: &RunOptions,
) -> Result<BatchOutput, HarnessError> {
    if configs.is_empty() {
        return Err(HarnessError::EmptyBatch);
    }
    for c in configs {
        let kind = c.kind()?;
        if c.text_mode && !kind.supports_text() {
            return Err(crate::params::ConfigError::TextModeUnsupported(c.env_id.clone()).into());
        }
    }
    let one = |config: &EpisodeConfig| -> Result<Trajectory, HarnessError> {
        let episode = Episode::reset(config, &opts.assets)?;
        Ok(match factory.create() {
            Ok(mut agent) => drive(episode, Ok(agent.as_mut())),
            Err(e) => drive(episode, Err(e)),
        })
    };
    let trajectories = if opts.parallelism <= 1 {
        configs.iter().map(one).collect::<Result<Vec<_>, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.parallelism)
            .build()
            .map_err(|e| HarnessError::Transport(format!("thread pool: {e}")))?;
        pool.install(|| configs.par_iter().map(one).collect::<Result<Vec<_>, _>>())?
    };
    Ok(BatchOutput { summary: EvalSummary::from_trajectories(&trajectories), trajectories })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvKind;
    use crate::harness::{AgentSpec, ScriptedAgent, SolverAgent};
    use crate::params::Difficulty;

    #[test]
    fn solver_agent_solves_easy_maze() {
        let config = EpisodeConfig::new(EnvKind::Maze2d, 3);
        let t = run_episode(&config, &mut SolverAgent::new(None), &AssetStore::synthetic()).unwrap();
        assert_eq!(t.reward, 1);
        assert!(t.turns.len() <= 20);
        assert_eq!(t.strategy.as_deref(), Some("bfs"));
    }

    #[test]
    fn budget_consumed_by_invalid_replies() {
        let config = EpisodeConfig::new(EnvKind::SlidingBlock, 1);
        let mut agent = ScriptedAgent::new(vec!["nonsense".into(); 50]);
        let t = run_episode(&config, &mut agent, &AssetStore::synthetic()).unwrap();
        assert_eq!(t.turns.len(), 20);
        assert!(t.truncated && !t.terminated);
        assert_eq!(t.reward, 0);
    }

    #[test]
    fn text_mode_rejected_for_image_envs() {
        let config = EpisodeConfig { text_mode: true, ..EpisodeConfig::new(EnvKind::Jigsaw, 0) };
        assert!(run_episode(&config, &mut SolverAgent::new(None), &AssetStore::synthetic()).is_err());
        assert!(run_batch(&[config], &AgentSpec::Random, &RunOptions::default()).is_err());
    }

    #[test]
    fn empty_batch_is_an_error() {
        assert!(matches!(run_batch(&[], &AgentSpec::Random, &RunOptions::default()), Err(HarnessError::EmptyBatch)));
    }

    #[test]
    fn summary_counts() {
        let base = EpisodeConfig::new(EnvKind::Maze2d, 10).with_difficulty(Difficulty::Hard);
        let out = run_batch(&batch_configs(&base, 6), &AgentSpec::Solver(None), &RunOptions::default()).unwrap();
        let s = &out.summary.tasks["maze2d/hard"];
        assert_eq!((s.episodes, s.successes), (6, 6));
        assert_eq!(s.success_rate, 1.0);
        assert_eq!(s.step_histogram.values().sum::<usize>(), 6);
        let seeds: Vec<u64> = out.trajectories.iter().map(|t| t.seed).collect();
        assert_eq!(seeds, (10..16).collect::<Vec<_>>());
    }

    #[test]
    fn merge_is_order_insensitive() {
        let base = EpisodeConfig::new(EnvKind::Maze2d, 0);
        let out = run_batch(&batch_configs(&base, 8), &AgentSpec::Random, &RunOptions::default()).unwrap();
        let (a, b) = out.trajectories.split_at(3);
        let mut left = EvalSummary::from_trajectories(a);
        left.merge(&EvalSummary::from_trajectories(b));
        let mut right = EvalSummary::from_trajectories(b);
        right.merge(&EvalSummary::from_trajectories(a));
        assert_eq!(left, right);
        assert_eq!(left, out.summary);
    }
}
