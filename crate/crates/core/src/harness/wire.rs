//! Line-delimited JSON protocol between the environment side and a remote
//! agent.
//!
//! Environment to agent, one object per line:
//!
//! ```text
//! {"type":"turn","turn":0,"instruction":"...","image_png_b64":"...","feedback":"...","steps_remaining":20,"history":[...]}
//! {"type":"done","reward":1,"terminated":true,"truncated":false}
//! ```
//!
//! `instruction` and `goal` appear on the first turn only. Observations carry
//! either `image_png_b64` or `text_view`. `history` lists the turns inside
//! the configured window, oldest first.
//!
//! Agent to environment: `{"type":"action","raw":"('move', 2)"}`. Any other
//! line is taken verbatim as the raw action text.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::agent::{Agent, EpisodeStart, TurnView};
use super::runner::run_episode;
use super::HarnessError;
use crate::envs::AssetStore;
use crate::episode::{EpisodeConfig, Observation, Trajectory};
use crate::render::encode_png;

/// Where an external agent lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transport {
    /// Connect to an agent listening at `host:port`.
    Tcp(String),
    /// Spawn a shell command and talk over its standard streams.
    Command(String),
}

impl FromStr for Transport {
    type Err = HarnessError;

    /// `tcp:<host:port>`, `cmd:<shell command>`, or a bare `host:port`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(addr) = s.strip_prefix("tcp:") {
            return Ok(Transport::Tcp(addr.to_string()));
        }
        if let Some(cmd) = s.strip_prefix("cmd:") {
            if cmd.trim().is_empty() {
                return Err(HarnessError::BadAgentSpec(s.to_string()));
            }
            return Ok(Transport::Command(cmd.to_string()));
        }
        match s.rsplit_once(':') {
            Some((host, port)) if !host.is_empty() && port.parse::<u16>().is_ok() => Ok(Transport::Tcp(s.to_string())),
            _ => Err(HarnessError::BadAgentSpec(s.to_string())),
        }
    }
}

impl fmt::Display for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transport::Tcp(addr) => write!(f, "tcp:{addr}"),
            Transport::Command(cmd) => write!(f, "cmd:{cmd}"),
        }
    }
}

/// An observation as sent over the wire.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WireView {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_png_b64: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_view: Option<String>,
}

impl WireView {
    pub fn of(obs: &Observation) -> Self {
        Self {
            image_png_b64: obs.image.as_ref().map(|c| base64::engine::general_purpose::STANDARD.encode(encode_png(c))),
            text_view: obs.text_view.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireTurn {
    #[serde(flatten)]
    pub view: WireView,
    pub action: String,
    pub feedback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnMessage {
    pub turn: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<WireView>,
    #[serde(flatten)]
    pub view: WireView,
    pub feedback: String,
    pub steps_remaining: u32,
    pub history: Vec<WireTurn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Turn(TurnMessage),
    Done { reward: u8, terminated: bool, truncated: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AgentMessage {
    Action { raw: String },
}

impl TurnMessage {
    pub fn from_view(view: &TurnView<'_>) -> Self {
        let first = view.turn == 0;
        Self {
            turn: view.turn,
            instruction: first.then(|| view.instruction.to_string()),
            goal: if first { view.goal.map(WireView::of) } else { None },
            view: WireView::of(view.observation),
            feedback: view.observation.feedback.clone(),
            steps_remaining: view.observation.steps_remaining,
            history: view
                .history
                .iter()
                .map(|t| WireTurn {
                    view: WireView::of(&t.observation),
                    action: t.raw_action.clone(),
                    feedback: t.feedback.clone(),
                })
                .collect(),
        }
    }
}

/// Raw action text carried by one reply line.
pub fn reply_text(line: &str) -> String {
    let line = line.trim_end_matches(['\r', '\n']);
    match serde_json::from_str::<AgentMessage>(line) {
        Ok(AgentMessage::Action { raw }) => raw,
        Err(_) => line.to_string(),
    }
}

/// An agent on the other end of a byte stream.
///
/// A reader thread turns the agent's output into lines so replies can be
/// awaited with a deadline. A reply that misses the deadline counts as an
/// empty (invalid format) reply; a late reply is then consumed by the next
/// turn.
pub struct ExternalAgent {
    writer: Box<dyn Write + Send>,
    lines: Receiver<String>,
    timeout: Duration,
    socket: Option<TcpStream>,
    child: Option<Child>,
}

impl fmt::Debug for ExternalAgent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalAgent").field("timeout", &self.timeout).finish_non_exhaustive()
    }
}

fn pump(reader: impl Read + Send + 'static) -> Receiver<String> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut reader = BufReader::new(reader);
        loop {
            let mut line = String::new();
            match reader.read_line(&mut line) {
                Ok(0) | Err(_) => break,
                Ok(_) => {
                    if tx.send(line).is_err() {
                        break;
                    }
                }
            }
        }
    });
    rx
}

fn transport_err(e: impl fmt::Display) -> HarnessError {
    HarnessError::Transport(e.to_string())
}

impl ExternalAgent {
    pub fn connect(transport: &Transport, timeout: Duration) -> Result<Self, HarnessError> {
        match transport {
            Transport::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(|e| transport_err(format!("{addr}: {e}")))?;
                Self::from_tcp(stream, timeout)
            }
            Transport::Command(cmd) => {
                let mut child = shell(cmd)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .spawn()
                    .map_err(|e| transport_err(format!("{cmd}: {e}")))?;
                let stdin = child.stdin.take().expect("piped");
                let stdout = child.stdout.take().expect("piped");
                let mut agent = Self::from_streams(stdout, stdin, timeout);
                agent.child = Some(child);
                Ok(agent)
            }
        }
    }

    pub fn from_tcp(stream: TcpStream, timeout: Duration) -> Result<Self, HarnessError> {
        let _ = stream.set_nodelay(true);
        let reader = stream.try_clone().map_err(transport_err)?;
        let writer = stream.try_clone().map_err(transport_err)?;
        let mut agent = Self::from_streams(reader, writer, timeout);
        agent.socket = Some(stream);
        Ok(agent)
    }

    pub fn from_streams(
        reader: impl Read + Send + 'static,
        writer: impl Write + Send + 'static,
        timeout: Duration,
    ) -> Self {
        Self { writer: Box::new(writer), lines: pump(reader), timeout, socket: None, child: None }
    }

    fn send(&mut self, msg: &ServerMessage) -> Result<(), HarnessError> {
        let mut line = serde_json::to_string(msg).map_err(transport_err)?;
        line.push('\n');
        self.writer.write_all(line.as_bytes()).map_err(transport_err)?;
        self.writer.flush().map_err(transport_err)
    }
}

#[cfg(unix)]
fn shell(cmd: &str) -> Command {
    let mut c = Command::new("sh");
    c.arg("-c").arg(cmd);
    c
}

#[cfg(not(unix))]
fn shell(cmd: &str) -> Command {
    let mut c = Command::new("cmd");
    c.arg("/C").arg(cmd);
    c
}

impl Agent for ExternalAgent {
    fn begin(&mut self, _start: &EpisodeStart<'_>) -> Result<(), HarnessError> {
        Ok(())
    }

    fn act(&mut self, view: &TurnView<'_>) -> Result<String, HarnessError> {
        self.send(&ServerMessage::Turn(TurnMessage::from_view(view)))?;
        match self.lines.recv_timeout(self.timeout) {
            Ok(line) => Ok(reply_text(&line)),
            Err(RecvTimeoutError::Timeout) => {
                log::warn!("agent reply timed out after {:?} on turn {}", self.timeout, view.turn);
                Ok(String::new())
            }
            Err(RecvTimeoutError::Disconnected) => Err(transport_err("agent closed the connection")),
        }
    }

    fn end(&mut self, reward: u8, terminated: bool, truncated: bool) {
        if let Err(e) = self.send(&ServerMessage::Done { reward, terminated, truncated }) {
            log::debug!("could not deliver done message: {e}");
        }
    }
}

impl Drop for ExternalAgent {
    fn drop(&mut self) {
        if let Some(s) = &self.socket {
            let _ = s.shutdown(Shutdown::Both);
        }
        if let Some(child) = &mut self.child {
            // Closing stdin asks the agent to exit; give it a moment first.
            self.writer = Box::new(std::io::sink());
            for _ in 0..20 {
                if matches!(child.try_wait(), Ok(Some(_))) {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Runs one episode with the agent on an accepted connection.
pub fn serve_connection(
    stream: TcpStream,
    config: &EpisodeConfig,
    assets: &AssetStore,
    timeout: Duration,
) -> Result<Trajectory, HarnessError> {
    let mut agent = ExternalAgent::from_tcp(stream, timeout)?;
    run_episode(config, &mut agent, assets)
}

/// Accepts connections and runs one episode on each; connection `i` gets
/// seed `base.seed + i`. Stops after `limit` connections when given.
/// `on_done` runs on the calling thread as each episode finishes.
pub fn serve(
    listener: &TcpListener,
    base: &EpisodeConfig,
    assets: &AssetStore,
    timeout: Duration,
    limit: Option<usize>,
    mut on_done: impl FnMut(usize, Result<Trajectory, HarnessError>),
) -> Result<(), HarnessError> {
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        let acceptor = scope.spawn(move || -> Result<(), HarnessError> {
            for (index, conn) in listener.incoming().enumerate() {
                let stream = conn.map_err(transport_err)?;
                let config = EpisodeConfig { seed: base.seed + index as u64, ..base.clone() };
                let tx = tx.clone();
                scope.spawn(move || {
                    let _ = tx.send((index, serve_connection(stream, &config, assets, timeout)));
                });
                if limit.is_some_and(|l| index + 1 >= l) {
                    break;
                }
            }
            Ok(())
        });
        // Ends once the acceptor and every episode thread have dropped
        // their senders.
        for (i, result) in rx {
            on_done(i, result);
        }
        acceptor.join().map_err(|_| transport_err("acceptor thread panicked"))?
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvKind;

    #[test]
    fn transport_parsing() {
        assert_eq!("tcp:localhost:9".parse::<Transport>().unwrap(), Transport::Tcp("localhost:9".into()));
        assert_eq!("127.0.0.1:80".parse::<Transport>().unwrap(), Transport::Tcp("127.0.0.1:80".into()));
        assert_eq!("cmd:python a.py".parse::<Transport>().unwrap(), Transport::Command("python a.py".into()));
        assert!("nowhere".parse::<Transport>().is_err());
        assert!("cmd:".parse::<Transport>().is_err());
    }

    #[test]
    fn replies() {
        assert_eq!(reply_text("{\"type\":\"action\",\"raw\":\"('move', 2)\"}\n"), "('move', 2)");
        assert_eq!(reply_text("move(2)\n"), "move(2)");
        assert_eq!(reply_text("{\"type\":\"other\"}"), "{\"type\":\"other\"}");
    }

    #[test]
    fn message_shapes() {
        let done = serde_json::to_value(ServerMessage::Done { reward: 1, terminated: true, truncated: false }).unwrap();
        assert_eq!(done, serde_json::json!({"type":"done","reward":1,"terminated":true,"truncated":false}));
        let obs = Observation {
            image: None,
            text_view: Some("#".into()),
            feedback: "Steps remaining: 3".into(),
            steps_remaining: 3,
        };
        let view = TurnView { instruction: "go", history: &[], observation: &obs, goal: None, turn: 0 };
        let turn = serde_json::to_value(ServerMessage::Turn(TurnMessage::from_view(&view))).unwrap();
        assert_eq!(turn["type"], "turn");
        assert_eq!(turn["instruction"], "go");
        assert_eq!(turn["text_view"], "#");
        assert_eq!(turn["steps_remaining"], 3);
        assert!(turn.get("image_png_b64").is_none());
        let later = TurnView { turn: 1, ..view };
        assert!(serde_json::to_value(TurnMessage::from_view(&later)).unwrap().get("instruction").is_none());
    }

    #[cfg(unix)]
    #[test]
    fn stream_agent_round_trip() {
        // The agent side: replies to every turn with stop.
        let (to_agent_r, to_agent_w) = std::os::unix::net::UnixStream::pair().unwrap();
        let agent_side = thread::spawn(move || {
            let mut writer = to_agent_r.try_clone().unwrap();
            let reader = BufReader::new(to_agent_r);
            let mut seen = Vec::new();
            for line in reader.lines() {
                let msg: ServerMessage = serde_json::from_str(&line.unwrap()).unwrap();
                let done = matches!(msg, ServerMessage::Done { .. });
                seen.push(msg);
                if done {
                    break;
                }
                writer.write_all(b"{\"type\":\"action\",\"raw\":\"stop()\"}\n").unwrap();
            }
            seen
        });
        let reader = to_agent_w.try_clone().unwrap();
        let mut agent = ExternalAgent::from_streams(reader, to_agent_w, Duration::from_secs(10));
        let config = EpisodeConfig { text_mode: true, ..EpisodeConfig::new(EnvKind::Maze2d, 4) };
        let traj = run_episode(&config, &mut agent, &AssetStore::synthetic()).unwrap();
        drop(agent);
        assert_eq!(traj.turns.len(), 1);
        assert!(traj.terminated);
        let seen = agent_side.join().unwrap();
        assert_eq!(seen.len(), 2);
        assert!(matches!(seen[1], ServerMessage::Done { reward: 0, terminated: true, truncated: false }));
    }
}
