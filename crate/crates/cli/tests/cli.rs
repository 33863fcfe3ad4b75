use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn stepgym() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stepgym"));
    c.env_remove("VISGYM_ASSETS");
    c
}

fn run(args: &[&str]) -> Output {
    stepgym().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn eval_solver_on_maze_is_perfect() {
    let o = run(&["eval", "--env", "maze2d", "--difficulty", "easy", "--episodes", "70", "--agent", "solver"]);
    assert!(o.status.success());
    let table = stdout(&o);
    let row = table.lines().find(|l| l.starts_with("maze2d/easy")).unwrap();
    let cols: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(&cols[1..4], ["70", "70", "1.00"]);
}

#[test]
fn eval_summaries_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut summaries = Vec::new();
    for (i, par) in ["1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let o = run(&[
            "eval",
            "--env",
            "sliding_block",
            "--episodes",
            "12",
            "--agent",
            "random",
            "--parallelism",
            par,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        summaries.push(std::fs::read(out.join("summary.json")).unwrap());
        assert_eq!(std::fs::read_to_string(out.join("manifest.txt")).unwrap().lines().count(), 12);
    }
    assert_eq!(summaries[0], summaries[1]);
}

#[test]
fn solve_with_verification() {
    let o = run(&["solve", "--env", "sliding_block", "--seed", "3", "--verify"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("plan verified: reward 1"));
    let padded =
        run(&["solve", "--env", "matchstick_rotation", "--strategy", "3_moves", "--target-steps", "6", "--verify"]);
    assert!(padded.status.success());
    let lines = stdout(&padded);
    assert_eq!(lines.lines().filter(|l| l.starts_with("('move'")).count(), 6);
}

#[test]
fn text_rollout_writes_ascii_frames() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "rollout",
        "--env",
        "maze2d",
        "--text-mode",
        "--agent",
        "scripted:stop",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let frame = std::fs::read_to_string(dir.path().join("frame_000.txt")).unwrap();
    assert!(frame.contains('A') && frame.contains('T'));
    let t: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("trajectory.json")).unwrap()).unwrap();
    assert_eq!(t["turns"].as_array().unwrap().len(), 1);
    assert_eq!(t["terminated"], true);
}

#[test]
fn usage_errors_exit_1() {
    let o = run(&["eval", "--env", "maze2d", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(run(&["render", "--env", "no_such_env"]).status.code(), Some(1));
    assert_eq!(run(&["eval", "--env", "maze2d", "--difficulty", "hard", "--param", "mw=9"]).status.code(), Some(1));
    assert_eq!(run(&["rollout", "--env", "jigsaw", "--text-mode"]).status.code(), Some(1));
    assert_eq!(run(&["eval", "--env", "maze2d", "--history-window", "3"]).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_2() {
    let o = stepgym().args(["render", "--env", "jigsaw"]).env("VISGYM_ASSETS", "/nonexistent/assets").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("asset"));
}

#[test]
fn assets_directory_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let card = dir.path().join("card.png");
    let o = run(&["render", "--env", "maze2d", "--out", card.to_str().unwrap()]);
    assert!(o.status.success());
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    let with_env = stepgym()
        .args(["render", "--env", "colorization", "--out", a.to_str().unwrap()])
        .env("VISGYM_ASSETS", dir.path())
        .output()
        .unwrap();
    assert!(with_env.status.success());
    let synthetic = run(&["render", "--env", "colorization", "--out", b.to_str().unwrap()]);
    assert!(synthetic.status.success());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn export_sft_filters_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let test_run = dir.path().join("test");
    let o = run(&["eval", "--env", "patch_reassembly", "--episodes", "3", "--out", test_run.to_str().unwrap()]);
    assert!(o.status.success());
    let out = dir.path().join("sft");
    let manifest = test_run.join("manifest.txt");
    let o = run(&[
        "export-sft",
        "--env",
        "patch_reassembly",
        "--episodes",
        "8",
        "--text-mode",
        "--test-manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("wrote 5 records"));
    let records = std::fs::read_to_string(out.join("records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 5);
}

#[test]
fn list_reports_all_envs() {
    let o = run(&["list", "--json"]);
    assert!(o.status.success());
    let rows: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 12);
    assert_eq!(rows[0]["env"], "maze2d");
    assert_eq!(rows[0]["hard"]["mw"], 11);
}

fn read_msg(reader: &mut impl BufRead) -> Value {
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    serde_json::from_str(&line).unwrap()
}

#[test]
fn serve_speaks_the_wire_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = stepgym()
        .args([
            "serve",
            "--env",
            "maze2d",
            "--text-mode",
            "--history-window",
            "1",
            "--listen",
            "127.0.0.1:0",
            "--episodes",
            "1",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut err = BufReader::new(child.stderr.take().unwrap());
    let mut line = String::new();
    err.read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").expect("announces address").to_string();

    let stream = TcpStream::connect(&addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    let first = read_msg(&mut reader);
    assert_eq!(first["type"], "turn");
    assert!(first["instruction"].is_string());
    assert!(first["text_view"].as_str().unwrap().contains('A'));
    assert_eq!(first["history"].as_array().unwrap().len(), 0);
    writer.write_all(b"{\"type\":\"action\",\"raw\":\"move(9)\"}\n").unwrap();
    let second = read_msg(&mut reader);
    assert!(second.get("instruction").is_none());
    assert_eq!(second["history"].as_array().unwrap().len(), 1);
    writer.write_all(b"not json at all\n").unwrap();
    let third = read_msg(&mut reader);
    assert_eq!(third["history"].as_array().unwrap().len(), 1);
    assert!(third["feedback"].as_str().unwrap().starts_with("invalid format"));
    writer.write_all(b"{\"type\":\"action\",\"raw\":\"('stop',)\"}\n").unwrap();
    let done = read_msg(&mut reader);
    assert_eq!(done["type"], "done");
    assert_eq!(done["terminated"], true);
    assert!(child.wait().unwrap().success());
    assert!(Path::new(&dir.path().join("trajectories.jsonl")).is_file());
}
