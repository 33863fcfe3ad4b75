//! `stepgym` command-line front end.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on runtime failures.

use std::fs;
use std::io::{self, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use stepgym::envs::{make_env, resolve_params};
use stepgym::episode::Observation;
use stepgym::harness::{
    self, batch_configs, export_sft, load_manifest, manifest_text, run_batch, run_episode, AgentFactory, AgentSpec,
    ExternalAgent, HarnessError, RunOptions,
};
use stepgym::render::{ascii_frame, encode_png};
use stepgym::{
    verify_plan, AssetStore, ConfigError, Difficulty, EnvKind, Episode, EpisodeConfig, ParamMap, SolverOptions,
    Trajectory,
};

#[derive(Parser, Debug)]
#[command(name = "stepgym", version, about = "Visual decision-making environments, solvers and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// List environments with their parameters, actions and strategies
    List {
        /// Print JSON instead of text
        #[arg(long)]
        json: bool,
    },
    /// Run one episode and dump the trajectory and its frames
    Rollout {
        #[command(flatten)]
        env: EnvArgs,
        #[command(flatten)]
        toggles: Toggles,
        #[arg(long, default_value = "solver")]
        agent: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a solver plan, optionally replaying it through the step engine
    Solve {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long)]
        strategy: Option<String>,
        /// Pad the plan to this many actions before stop
        #[arg(long)]
        target_steps: Option<usize>,
        #[arg(long)]
        verify: bool,
    },
    /// Run a batch of episodes and print a summary table
    Eval {
        #[command(flatten)]
        env: EnvArgs,
        #[command(flatten)]
        toggles: Toggles,
        #[arg(long, default_value = "solver")]
        agent: String,
        #[arg(long, default_value_t = 70)]
        episodes: usize,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        /// Also print the summary as JSON
        #[arg(long)]
        json: bool,
        /// Directory for summary.json, manifest.txt and trajectories.jsonl
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run solver episodes and export the successful ones as chat records
    ExportSft {
        #[command(flatten)]
        env: EnvArgs,
        #[command(flatten)]
        toggles: Toggles,
        #[arg(long, default_value = "solver")]
        agent: String,
        #[arg(long, default_value_t = 70)]
        episodes: usize,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        /// Initial-state hashes to exclude, one per line
        #[arg(long)]
        test_manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve episodes over the line-delimited JSON protocol
    Serve {
        #[command(flatten)]
        env: EnvArgs,
        #[command(flatten)]
        toggles: Toggles,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        /// Run a single episode over this process's stdin/stdout instead
        #[arg(long)]
        stdio: bool,
        /// Stop after this many connections
        #[arg(long)]
        episodes: Option<usize>,
        /// Seconds to wait for each reply
        #[arg(long, default_value_t = 120)]
        timeout: u64,
        /// Directory for trajectories.jsonl
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the initial observation for a seed
    Render {
        #[command(flatten)]
        env: EnvArgs,
        /// Print the ASCII view to stdout
        #[arg(long)]
        ascii: bool,
        /// Render the solved state instead
        #[arg(long)]
        goal: bool,
        /// PNG output path
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Level {
    Easy,
    Hard,
}

#[derive(Args, Debug)]
struct EnvArgs {
    #[arg(long)]
    env: String,
    #[arg(long, value_enum, conflicts_with = "param")]
    difficulty: Option<Level>,
    /// Explicit parameter, e.g. `mw=9` or `gs=[6,6]`; repeatable
    #[arg(long = "param", value_name = "K=V")]
    param: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_steps: Option<u32>,
    /// Image directory; defaults to $VISGYM_ASSETS, else synthetic images
    #[arg(long)]
    assets: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Toggles {
    #[arg(long, default_value = "inf", value_parser = ["1", "2", "4", "inf"])]
    history_window: String,
    #[arg(long)]
    no_feedback: bool,
    #[arg(long)]
    text_mode: bool,
    #[arg(long)]
    goal_obs: bool,
}

fn parse_param(text: &str) -> Result<(String, Json)> {
    let (k, v) = text.split_once('=').with_context(|| format!("--param expects K=V, got '{text}'"))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Json::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

impl EnvArgs {
    fn kind(&self) -> Result<EnvKind> {
        Ok(self.env.parse()?)
    }

    fn difficulty(&self) -> Difficulty {
        match self.difficulty {
            Some(Level::Hard) => Difficulty::Hard,
            _ => Difficulty::Easy,
        }
    }

    fn params(&self) -> Result<ParamMap> {
        self.param.iter().map(|p| parse_param(p)).collect()
    }

    fn assets(&self) -> Result<AssetStore> {
        Ok(match &self.assets {
            Some(dir) => AssetStore::from_dir(dir)?,
            None => AssetStore::from_env()?,
        })
    }

    fn config(&self, toggles: Option<&Toggles>) -> Result<EpisodeConfig> {
        let mut c = EpisodeConfig::new(self.kind()?, self.seed).with_difficulty(self.difficulty());
        c.params = self.params()?;
        c.max_steps = self.max_steps;
        if let Some(t) = toggles {
            c.history_window = stepgym::HistoryWindow::parse(&t.history_window)?;
            c.feedback_enabled = !t.no_feedback;
            c.text_mode = t.text_mode;
            c.goal_observation = t.goal_obs;
        }
        Ok(c)
    }
}

fn agent_spec(text: &str) -> Result<AgentSpec> {
    Ok(text.parse::<AgentSpec>()?)
}

fn write_observation(dir: &Path, stem: &str, obs: &Observation) -> Result<()> {
    if let Some(img) = &obs.image {
        fs::write(dir.join(format!("{stem}.png")), encode_png(img))?;
    }
    if let Some(text) = &obs.text_view {
        fs::write(dir.join(format!("{stem}.txt")), text)?;
    }
    Ok(())
}

fn write_trajectories(path: &Path, ts: &[Trajectory]) -> Result<()> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    for t in ts {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn rollout(env: &EnvArgs, toggles: &Toggles, agent: &str, out: Option<PathBuf>) -> Result<()> {
    let config = env.config(Some(toggles))?;
    let mut agent = agent_spec(agent)?.create()?;
    let t = run_episode(&config, agent.as_mut(), &env.assets()?)?;
    let dir = out.unwrap_or_else(|| PathBuf::from(format!("rollout_{}_{}", config.env_id, config.seed)));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("trajectory.json"), serde_json::to_string_pretty(&t)?)?;
    if let Some(goal) = &t.goal {
        write_observation(&dir, "goal", goal)?;
    }
    for (k, turn) in t.turns.iter().enumerate() {
        write_observation(&dir, &format!("frame_{k:03}"), &turn.observation)?;
    }
    write_observation(&dir, &format!("frame_{:03}", t.turns.len()), &t.final_observation)?;
    println!(
        "{} seed {}: reward {} after {} turns ({}) -> {}",
        t.env_id,
        t.seed,
        t.reward,
        t.turns.len(),
        if t.terminated { "terminated" } else { "truncated" },
        dir.display()
    );
    Ok(())
}

fn solve(env: &EnvArgs, strategy: Option<String>, target_steps: Option<usize>, verify: bool) -> Result<bool> {
    let kind = env.kind()?;
    let instance = make_env(kind, env.difficulty(), &env.params()?, env.seed, &env.assets()?)?;
    let opts = SolverOptions { strategy, target_steps, seed: env.seed };
    let plan = instance.solve(&opts)?;
    println!("# {kind} seed {} strategy {}: {} actions", env.seed, plan.strategy, plan.actions.len());
    for line in plan.lines() {
        println!("{line}");
    }
    if verify {
        if verify_plan(instance.as_ref(), &plan) {
            println!("plan verified: reward 1");
        } else {
            println!("plan failed: reward 0");
            return Ok(false);
        }
    }
    Ok(true)
}

fn batch(
    env: &EnvArgs,
    toggles: &Toggles,
    agent: &str,
    episodes: usize,
    parallelism: usize,
) -> Result<harness::BatchOutput> {
    let configs = batch_configs(&env.config(Some(toggles))?, episodes);
    let opts = RunOptions { assets: env.assets()?, parallelism };
    Ok(run_batch(&configs, &agent_spec(agent)?, &opts)?)
}

fn eval(
    env: &EnvArgs,
    toggles: &Toggles,
    agent: &str,
    episodes: usize,
    parallelism: usize,
    json: bool,
    out: Option<PathBuf>,
) -> Result<()> {
    let result = batch(env, toggles, agent, episodes, parallelism)?;
    print!("{}", result.summary.table());
    let summary_json = serde_json::to_string_pretty(&result.summary)?;
    if json {
        println!("{summary_json}");
    }
    if let Some(dir) = out {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("summary.json"), format!("{summary_json}\n"))?;
        fs::write(dir.join("manifest.txt"), manifest_text(&result.trajectories))?;
        write_trajectories(&dir.join("trajectories.jsonl"), &result.trajectories)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn export(
    env: &EnvArgs,
    toggles: &Toggles,
    agent: &str,
    episodes: usize,
    parallelism: usize,
    manifest: Option<PathBuf>,
    out: &Path,
) -> Result<()> {
    let manifest = match manifest {
        Some(p) => load_manifest(&p).with_context(|| format!("reading {}", p.display()))?,
        None => Default::default(),
    };
    let result = batch(env, toggles, agent, episodes, parallelism)?;
    let stats = export_sft(&result.trajectories, &manifest, out, &env.assets()?)?;
    println!(
        "wrote {} records to {} (dropped {} failed, {} overlapping the test manifest)",
        stats.written,
        out.display(),
        stats.dropped_failed,
        stats.dropped_overlap
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn serve(
    env: &EnvArgs,
    toggles: &Toggles,
    listen: &str,
    stdio: bool,
    episodes: Option<usize>,
    timeout: u64,
    out: Option<PathBuf>,
) -> Result<()> {
    let config = env.config(Some(toggles))?;
    let assets = env.assets()?;
    let timeout = Duration::from_secs(timeout);
    // Trajectories are appended as episodes finish, so an open-ended server
    // still leaves a usable file.
    let mut sink = match &out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Some(io::BufWriter::new(fs::File::create(dir.join("trajectories.jsonl"))?))
        }
        None => None,
    };
    let mut record = |t: &Trajectory| -> Result<()> {
        if let Some(w) = sink.as_mut() {
            serde_json::to_writer(&mut *w, t)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        Ok(())
    };
    if stdio {
        let mut agent = ExternalAgent::from_streams(io::stdin(), io::stdout(), timeout);
        record(&run_episode(&config, &mut agent, &assets)?)?;
        return Ok(());
    }
    // Fail on a bad config before accepting anyone.
    Episode::reset(&config, &assets)?;
    let listener = TcpListener::bind(listen).with_context(|| format!("binding {listen}"))?;
    eprintln!("listening on {}", listener.local_addr()?);
    let mut failures = Vec::new();
    harness::serve(&listener, &config, &assets, timeout, episodes, |i, r| {
        let outcome = r.map_err(anyhow::Error::from).and_then(|t| {
            eprintln!("episode {i} (seed {}): reward {} after {} turns", t.seed, t.reward, t.turns.len());
            record(&t)
        });
        if let Err(e) = outcome {
            failures.push(format!("episode {i}: {e}"));
        }
    })?;
    if !failures.is_empty() {
        bail!("{}", failures.join("; "));
    }
    Ok(())
}

fn render(env: &EnvArgs, ascii: bool, goal: bool, out: Option<PathBuf>) -> Result<()> {
    let kind = env.kind()?;
    let instance = make_env(kind, env.difficulty(), &env.params()?, env.seed, &env.assets()?)?;
    if ascii {
        let grid = if goal { instance.goal_ascii() } else { instance.render_ascii() };
        let grid = grid.with_context(|| format!("{kind} has no ASCII view"))?;
        print!("{}", ascii_frame(&grid));
        if out.is_none() {
            return Ok(());
        }
    }
    let canvas = if goal {
        instance.goal_render().with_context(|| format!("{kind} has no goal rendering"))?
    } else {
        instance.render()
    };
    let path =
        out.unwrap_or_else(|| PathBuf::from(format!("{kind}_{}{}.png", env.seed, if goal { "_goal" } else { "" })));
    fs::write(&path, encode_png(&canvas)).with_context(|| format!("writing {}", path.display()))?;
    println!("{}", path.display());
    Ok(())
}

fn list(as_json: bool) -> Result<()> {
    let assets = AssetStore::synthetic();
    let mut rows = Vec::new();
    for kind in EnvKind::ALL {
        let sample = make_env(kind, Difficulty::Easy, &ParamMap::new(), 0, &assets)?;
        let actions: Vec<Json> =
            sample.schemas().iter().map(|s| json!({"signature": s.signature, "doc": s.doc})).collect();
        rows.push(json!({
            "env": kind.id(),
            "text_mode": kind.supports_text(),
            "strategies": kind.strategies(),
            "easy": resolve_params(kind, Difficulty::Easy, &ParamMap::new())?,
            "hard": resolve_params(kind, Difficulty::Hard, &ParamMap::new())?,
            "actions": actions,
        }));
    }
    if as_json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
        return Ok(());
    }
    for row in &rows {
        println!(
            "{}{}",
            row["env"].as_str().unwrap_or_default(),
            if row["text_mode"] == true { "  [text mode]" } else { "" }
        );
        println!("  easy: {}", row["easy"]);
        println!("  hard: {}", row["hard"]);
        println!("  strategies: {}", row["strategies"]);
        for a in row["actions"].as_array().into_iter().flatten() {
            println!("  - {}: {}", a["signature"].as_str().unwrap_or_default(), a["doc"].as_str().unwrap_or_default());
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Cmd::List { json } => list(json)?,
        Cmd::Rollout { env, toggles, agent, out } => rollout(&env, &toggles, &agent, out)?,
        Cmd::Solve { env, strategy, target_steps, verify } => return solve(&env, strategy, target_steps, verify),
        Cmd::Eval { env, toggles, agent, episodes, parallelism, json, out } => {
            eval(&env, &toggles, &agent, episodes, parallelism, json, out)?
        }
        Cmd::ExportSft { env, toggles, agent, episodes, parallelism, test_manifest, out } => {
            export(&env, &toggles, &agent, episodes, parallelism, test_manifest, &out)?
        }
        Cmd::Serve { env, toggles, listen, stdio, episodes, timeout, out } => {
            serve(&env, &toggles, &listen, stdio, episodes, timeout, out)?
        }
        Cmd::Render { env, ascii, goal, out } => render(&env, ascii, goal, out)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage_error(&e) { 1 } else { 2 })
        }
    }
}

/// Bad env names, parameters, toggles and agent specs are the caller's
/// mistake; everything else is a runtime failure.
fn is_usage_error(e: &anyhow::Error) -> bool {
    let config = |c: &ConfigError| !matches!(c, ConfigError::Asset(_) | ConfigError::Generation(_));
    e.chain().any(|cause| {
        if let Some(c) = cause.downcast_ref::<ConfigError>() {
            return config(c);
        }
        match cause.downcast_ref::<HarnessError>() {
            Some(HarnessError::Config(c)) => config(c),
            Some(HarnessError::BadAgentSpec(_) | HarnessError::EmptyBatch) => true,
            _ => false,
        }
    })
}
