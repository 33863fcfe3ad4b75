//! Shortest-path solvers for both mazes.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{padding_needed, pick_strategy, SolveError, SolverOptions, SolverPlan};
use crate::actions::{ActionCall, Value};
use crate::envs::maze::{Heading, MazeEnv, MazeState};
use crate::envs::Environment;

fn mv(d: usize) -> ActionCall {
    ActionCall::known("move", vec![Value::Int(d as i64)])
}

fn turn(d: usize) -> ActionCall {
    ActionCall::known("turn", vec![Value::Int(d as i64)])
}

/// Directions of a shortest top-down path from agent to target.
pub fn shortest_moves_2d(state: &MazeState) -> Option<Vec<usize>> {
    let g = &state.grid;
    let w = g.width();
    let mut parent: Vec<Option<(usize, usize, usize)>> = vec![None; w * g.height()];
    let mut seen = vec![false; w * g.height()];
    seen[state.agent.0 * w + state.agent.1] = true;
    let mut queue = VecDeque::from([state.agent]);
    while let Some(cell) = queue.pop_front() {
        if cell == state.target {
            let mut dirs = Vec::new();
            let mut cur = cell;
            while let Some((r, c, d)) = parent[cur.0 * w + cur.1] {
                dirs.push(d);
                cur = (r, c);
            }
            dirs.reverse();
            return Some(dirs);
        }
        for d in 0..4 {
            if let Some(n) = g.open(cell, d) {
                if !seen[n.0 * w + n.1] {
                    seen[n.0 * w + n.1] = true;
                    parent[n.0 * w + n.1] = Some((cell.0, cell.1, d));
                    queue.push_back(n);
                }
            }
        }
    }
    None
}

type Pose = ((usize, usize), Heading);

/// A shortest move/turn sequence for the first-person maze.
pub fn shortest_actions_3d(state: &MazeState) -> Option<Vec<ActionCall>> {
    let g = &state.grid;
    let idx = |((r, c), h): Pose| (r * g.width() + c) * 4 + h.index();
    let mut parent: Vec<Option<(Pose, ActionCall)>> = vec![None; g.width() * g.height() * 4];
    let mut seen = vec![false; parent.len()];
    let start = (state.agent, state.heading);
    seen[idx(start)] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(pose) = queue.pop_front() {
        if pose.0 == state.target {
            let mut out = Vec::new();
            let mut cur = pose;
            while let Some((prev, action)) = parent[idx(cur)].clone() {
                out.push(action);
                cur = prev;
            }
            out.reverse();
            return Some(out);
        }
        let (cell, h) = pose;
        let mut next = Vec::with_capacity(4);
        if let Some(n) = g.open(cell, h.index()) {
            next.push(((n, h), mv(0)));
        }
        for t in 0..3 {
            next.push(((cell, h.turned(t)), turn(t)));
        }
        for (p, a) in next {
            if !seen[idx(p)] {
                seen[idx(p)] = true;
                parent[idx(p)] = Some((pose, a));
                queue.push_back(p);
            }
        }
    }
    None
}

/// Walks top-down `moves` from the initial state and returns the pose before each
/// action plus the final pose.
fn poses(state: &MazeState, moves: &[ActionCall]) -> Vec<Pose> {
    let mut s = state.clone();
    let mut out = vec![(s.agent, s.heading)];
    for a in moves {
        let arg = a.payload.first().and_then(Value::as_i64).unwrap_or(0) as usize;
        let _ = s.move_dir(arg);
        out.push((s.agent, s.heading));
    }
    out
}

/// Interleaves `inserts[i]` before `moves[i]`; the last group goes at the end.
fn splice(moves: Vec<ActionCall>, inserts: Vec<Vec<ActionCall>>) -> Vec<ActionCall> {
    let mut out = Vec::new();
    for (i, group) in inserts.into_iter().enumerate() {
        out.extend(group);
        if let Some(m) = moves.get(i) {
            out.push(m.clone());
        }
    }
    out
}

fn pad_2d(
    state: &MazeState,
    moves: Vec<ActionCall>,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<ActionCall>, SolveError> {
    let path = poses(state, &moves);
    let mut inserts: Vec<Vec<ActionCall>> = vec![Vec::new(); path.len()];
    let mut remaining = n;
    if remaining % 2 == 1 {
        let slots: Vec<usize> =
            (0..path.len()).filter(|&i| (0..4).any(|d| state.grid.open(path[i].0, d).is_none())).collect();
        let &slot = slots.choose(rng).ok_or_else(|| SolveError::PaddingImpossible("no wall to bump".into()))?;
        let walls: Vec<usize> = (0..4).filter(|&d| state.grid.open(path[slot].0, d).is_none()).collect();
        inserts[slot].push(mv(*walls.choose(rng).expect("slot has a wall")));
        remaining -= 1;
    }
    while remaining > 0 {
        let slot = rng.gen_range(0..path.len());
        let open: Vec<usize> = (0..4).filter(|&d| state.grid.open(path[slot].0, d).is_some()).collect();
        let Some(&d) = open.choose(rng) else { continue };
        inserts[slot].push(mv(d));
        inserts[slot].push(mv((d + 2) % 4));
        remaining -= 2;
    }
    Ok(splice(moves, inserts))
}

fn pad_3d(
    state: &MazeState,
    moves: Vec<ActionCall>,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<ActionCall>, SolveError> {
    let path = poses3(state, &moves);
    let mut inserts: Vec<Vec<ActionCall>> = vec![Vec::new(); path.len()];
    let mut remaining = n;
    if remaining % 2 == 1 {
        let facing_wall: Vec<usize> =
            (0..path.len()).filter(|&i| state.grid.open(path[i].0, path[i].1.index()).is_none()).collect();
        if let Some(&slot) = facing_wall.choose(rng) {
            inserts[slot].push(mv(0));
            remaining -= 1;
        } else if remaining >= 3 {
            let slot = rng.gen_range(0..path.len());
            inserts[slot].extend([turn(2), turn(1), turn(1)]);
            remaining -= 3;
        } else {
            return Err(SolveError::PaddingImpossible("no single neutral action available".into()));
        }
    }
    while remaining > 0 {
        let slot = rng.gen_range(0..path.len());
        let pair = match rng.gen_range(0..3) {
            0 => [turn(0), turn(1)],
            1 => [turn(1), turn(0)],
            _ => [turn(2), turn(2)],
        };
        inserts[slot].extend(pair);
        remaining -= 2;
    }
    Ok(splice(moves, inserts))
}

fn poses3(state: &MazeState, moves: &[ActionCall]) -> Vec<Pose> {
    let mut s = state.clone();
    let mut out = vec![(s.agent, s.heading)];
    for a in moves {
        let arg = a.payload.first().and_then(Value::as_i64).unwrap_or(0) as usize;
        if a.name == "turn" {
            s.heading = s.heading.turned(arg);
        } else {
            let _ = s.move_dir(s.heading.index());
        }
        out.push((s.agent, s.heading));
    }
    out
}

pub(crate) fn solve(env: &MazeEnv, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
    let strategy = pick_strategy(env.kind(), opts)?;
    let state = env.state();
    let mut rng = opts.rng("maze");
    let moves = if env.is_3d() {
        let base = shortest_actions_3d(state).ok_or_else(|| SolveError::NoSolution("target unreachable".into()))?;
        let n = padding_needed(base.len(), opts.target_steps)?;
        if n == 0 {
            base
        } else {
            pad_3d(state, base, n, &mut rng)?
        }
    } else {
        let base: Vec<ActionCall> = shortest_moves_2d(state)
            .ok_or_else(|| SolveError::NoSolution("target unreachable".into()))?
            .into_iter()
            .map(mv)
            .collect();
        let n = padding_needed(base.len(), opts.target_steps)?;
        if n == 0 {
            base
        } else {
            pad_2d(state, base, n, &mut rng)?
        }
    };
    Ok(SolverPlan::new(moves, strategy, opts.seed))
}
