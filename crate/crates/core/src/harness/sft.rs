//! Supervised fine-tuning export.
//!
//! Successful trajectories become multi-turn chat records, one JSON object
//! per line in `records.jsonl`. Observation images are written as PNG files
//! under `images/` beside it and referenced by relative path.

use std::borrow::Cow;
use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::envs::AssetStore;
use crate::episode::{Episode, EpisodeConfig, HistoryWindow, Observation, Trajectory};
use crate::params::{Difficulty, ParamMap};
use crate::render::encode_png;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const IMAGES_DIR: &str = "images";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Part {
    Text { text: String },
    Image { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: Vec<Part>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub env_id: String,
    pub difficulty: Difficulty,
    pub params: ParamMap,
    pub seed: u64,
    pub strategy: Option<String>,
    pub initial_state_hash: String,
    pub max_steps: u32,
    pub text_mode: bool,
    pub feedback_enabled: bool,
    pub goal_observation: bool,
    pub reward: u8,
    pub steps: usize,
}

/// One exported trajectory: a system instruction followed by alternating
/// observation (user) and action (assistant) messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftRecord {
    pub id: String,
    pub messages: Vec<Message>,
    pub metadata: RecordMeta,
}

impl SftRecord {
    /// The assistant replies in order.
    pub fn actions(&self) -> impl Iterator<Item = &str> {
        self.messages.iter().filter(|m| m.role == "assistant").filter_map(|m| match m.content.first() {
            Some(Part::Text { text }) => Some(text.as_str()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportStats {
    pub written: usize,
    pub dropped_failed: usize,
    pub dropped_overlap: usize,
}

/// Reads a test manifest: one initial-state hash per line; blank lines and
/// `#` comments are skipped.
pub fn load_manifest(path: &Path) -> std::io::Result<HashSet<String>> {
    Ok(fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Manifest text listing the initial-state hashes of `trajectories`.
pub fn manifest_text<'a>(trajectories: impl IntoIterator<Item = &'a Trajectory>) -> String {
    let mut hashes: Vec<&str> = trajectories.into_iter().map(|t| t.initial_state_hash.as_str()).collect();
    hashes.sort_unstable();
    hashes.dedup();
    hashes.iter().map(|h| format!("{h}\n")).collect()
}

fn replay_config(meta: &RecordMeta) -> EpisodeConfig {
    EpisodeConfig {
        env_id: meta.env_id.clone(),
        difficulty: meta.difficulty,
        seed: meta.seed,
        max_steps: Some(meta.max_steps),
        feedback_enabled: meta.feedback_enabled,
        text_mode: meta.text_mode,
        goal_observation: meta.goal_observation,
        history_window: HistoryWindow::Unbounded,
        params: meta.params.clone(),
    }
}

fn meta_of(t: &Trajectory) -> RecordMeta {
    RecordMeta {
        env_id: t.env_id.clone(),
        difficulty: t.difficulty,
        params: t.params.clone(),
        seed: t.seed,
        strategy: t.strategy.clone(),
        initial_state_hash: t.initial_state_hash.clone(),
        max_steps: t.max_steps,
        text_mode: t.text_mode,
        feedback_enabled: t.feedback_enabled,
        goal_observation: t.goal.is_some(),
        reward: t.reward,
        steps: t.turns.len(),
    }
}

/// Trajectories loaded from JSON have no pixels; regenerate them by replay.
fn with_images<'a>(t: &'a Trajectory, assets: &AssetStore) -> Result<Cow<'a, Trajectory>, HarnessError> {
    let missing = |o: &Observation| o.image.is_none() && o.text_view.is_none();
    if !t.turns.iter().any(|turn| missing(&turn.observation)) && !t.goal.as_ref().is_some_and(missing) {
        return Ok(Cow::Borrowed(t));
    }
    let mut episode = Episode::reset(&replay_config(&meta_of(t)), assets)?;
    for turn in &t.turns {
        if episode.is_finished() {
            break;
        }
        episode.step(&turn.raw_action).expect("unfinished");
    }
    let mut replayed = episode.into_trajectory();
    replayed.strategy = t.strategy.clone();
    if replayed.initial_state_hash != t.initial_state_hash || replayed.turns.len() != t.turns.len() {
        return Err(HarnessError::BadRecord {
            id: format!("{}-{}", t.env_id, t.seed),
            reason: "trajectory does not replay".into(),
        });
    }
    Ok(Cow::Owned(replayed))
}

fn observation_parts(obs: &Observation, image_name: &str, dir: &Path) -> Result<Vec<Part>, HarnessError> {
    let mut parts = Vec::new();
    if let Some(img) = &obs.image {
        let rel = format!("{IMAGES_DIR}/{image_name}.png");
        fs::write(dir.join(&rel), encode_png(img))?;
        parts.push(Part::Image { path: rel });
    }
    if let Some(text) = &obs.text_view {
        parts.push(Part::Text { text: text.clone() });
    }
    parts.push(Part::Text { text: obs.feedback.clone() });
    Ok(parts)
}

fn build_record(t: &Trajectory, id: &str, dir: &Path) -> Result<SftRecord, HarnessError> {
    let mut messages =
        vec![Message { role: "system".into(), content: vec![Part::Text { text: t.instruction.clone() }] }];
    for (k, turn) in t.turns.iter().enumerate() {
        let mut content = Vec::new();
        if k == 0 {
            if let Some(goal) = &t.goal {
                content.push(Part::Text { text: "Goal:".into() });
                let mut parts = observation_parts(goal, &format!("{id}_goal"), dir)?;
                parts.pop(); // the goal's feedback line carries nothing
                content.extend(parts);
            }
        }
        content.extend(observation_parts(&turn.observation, &format!("{id}_t{k:02}"), dir)?);
        messages.push(Message { role: "user".into(), content });
        messages
            .push(Message { role: "assistant".into(), content: vec![Part::Text { text: turn.raw_action.clone() }] });
    }
    Ok(SftRecord { id: id.to_string(), messages, metadata: meta_of(t) })
}

/// Writes successful trajectories whose initial state is not in
/// `test_manifest` to `dir`. Existing export files there are replaced.
pub fn export_sft(
    trajectories: &[Trajectory],
    test_manifest: &HashSet<String>,
    dir: &Path,
    assets: &AssetStore,
) -> Result<ExportStats, HarnessError> {
    fs::create_dir_all(dir.join(IMAGES_DIR))?;
    let mut out = BufWriter::new(File::create(dir.join(RECORDS_FILE))?);
    let mut stats = ExportStats::default();
    for t in trajectories {
        if t.reward != 1 {
            stats.dropped_failed += 1;
            continue;
        }
        if test_manifest.contains(&t.initial_state_hash) {
            stats.dropped_overlap += 1;
            continue;
        }
        let t = with_images(t, assets)?;
        let id = format!("{:05}_{}_{}", stats.written, t.env_id, t.seed);
        let record = build_record(&t, &id, dir)?;
        serde_json::to_writer(&mut out, &record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        stats.written += 1;
    }
    out.flush()?;
    Ok(stats)
}

/// Reads every record from an export directory.
pub fn read_records(dir: &Path) -> Result<Vec<SftRecord>, HarnessError> {
    let text = fs::read_to_string(dir.join(RECORDS_FILE))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| HarnessError::Sink(e.into())))
        .collect()
}

/// Replays a record's actions through the step engine from its seed and
/// returns the reward earned.
pub fn replay_record(record: &SftRecord, assets: &AssetStore) -> Result<u8, HarnessError> {
    let bad = |reason: &str| HarnessError::BadRecord { id: record.id.clone(), reason: reason.into() };
    let mut episode = Episode::reset(&replay_config(&record.metadata), assets)?;
    if episode.trajectory().initial_state_hash != record.metadata.initial_state_hash {
        return Err(bad("initial state differs"));
    }
    for action in record.actions() {
        if episode.is_finished() {
            return Err(bad("actions continue after the episode ended"));
        }
        episode.step(action).expect("unfinished");
    }
    Ok(episode.trajectory().reward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvKind;
    use crate::harness::{batch_configs, run_batch, AgentSpec, RunOptions};

    fn solved(kind: EnvKind, n: usize, text: bool) -> Vec<Trajectory> {
        let base = EpisodeConfig { text_mode: text, ..EpisodeConfig::new(kind, 100) };
        run_batch(&batch_configs(&base, n), &AgentSpec::Solver(None), &RunOptions::default()).unwrap().trajectories
    }

    #[test]
    fn failures_are_dropped() {
        let base = EpisodeConfig::new(EnvKind::Maze2d, 0);
        let failed = run_batch(&batch_configs(&base, 2), &AgentSpec::scripted("stop"), &RunOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stats = export_sft(&failed.trajectories, &HashSet::new(), dir.path(), &AssetStore::synthetic()).unwrap();
        assert_eq!(stats, ExportStats { written: 0, dropped_failed: 2, dropped_overlap: 0 });
        assert!(read_records(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn records_reference_images_and_replay() {
        let ts = solved(EnvKind::Jigsaw, 3, false);
        let manifest: HashSet<String> = [ts[1].initial_state_hash.clone()].into();
        let dir = tempfile::tempdir().unwrap();
        let stats = export_sft(&ts, &manifest, dir.path(), &AssetStore::synthetic()).unwrap();
        assert_eq!(stats, ExportStats { written: 2, dropped_failed: 0, dropped_overlap: 1 });
        let records = read_records(dir.path()).unwrap();
        for r in &records {
            assert_eq!(r.messages[0].role, "system");
            for m in &r.messages {
                for p in &m.content {
                    if let Part::Image { path } = p {
                        assert!(!Path::new(path).is_absolute());
                        assert!(dir.path().join(path).is_file());
                    }
                }
            }
            assert_eq!(replay_record(r, &AssetStore::synthetic()).unwrap(), 1);
        }
    }

    #[test]
    fn deserialized_trajectories_get_images_back() {
        let ts = solved(EnvKind::MentalRotation2d, 1, false);
        let json = serde_json::to_string(&ts[0]).unwrap();
        let back: Trajectory = serde_json::from_str(&json).unwrap();
        assert!(back.turns[0].observation.image.is_none());
        let dir = tempfile::tempdir().unwrap();
        let stats = export_sft(&[back], &HashSet::new(), dir.path(), &AssetStore::synthetic()).unwrap();
        assert_eq!(stats.written, 1);
        let r = &read_records(dir.path()).unwrap()[0];
        assert!(matches!(r.messages[1].content[0], Part::Image { .. }));
    }

    #[test]
    fn text_mode_records_inline_ascii() {
        let ts = solved(EnvKind::SlidingBlock, 1, true);
        let dir = tempfile::tempdir().unwrap();
        export_sft(&ts, &HashSet::new(), dir.path(), &AssetStore::synthetic()).unwrap();
        let r = &read_records(dir.path()).unwrap()[0];
        assert!(r.messages.iter().flat_map(|m| &m.content).all(|p| matches!(p, Part::Text { .. })));
        assert_eq!(replay_record(r, &AssetStore::synthetic()).unwrap(), 1);
    }

    #[test]
    fn manifest_round_trip() {
        let ts = solved(EnvKind::Maze2d, 3, false);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.txt");
        fs::write(&path, format!("# test split\n\n{}", manifest_text(&ts))).unwrap();
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.len(), 3);
        assert!(ts.iter().all(|t| m.contains(&t.initial_state_hash)));
    }

    #[test]
    fn unwritable_sink() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "x").unwrap();
        let ts = solved(EnvKind::Maze2d, 1, false);
        assert!(matches!(
            export_sft(&ts, &HashSet::new(), &file, &AssetStore::synthetic()),
            Err(HarnessError::Sink(_))
        ));
    }
}
