//! Matchstick Equation: shortest relocation sequences by iterative
//! deepening, a depth-first trace with explicit undo, and detour padding.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{padding_needed, pick_strategy, SolveError, SolverOptions, SolverPlan};
use crate::actions::{ActionCall, Value};
use crate::envs::equation::{EquationEnv, EquationState, StickMove};
use crate::envs::Environment;

/// Deepest search the solver attempts.
pub const MAX_DEPTH: usize = 4;
/// Longest exploratory prefix the dfs strategy emits before falling back to
/// the shortest plan.
const DFS_TRACE_CAP: usize = 12;

fn search(state: &mut EquationState, depth: usize, path: &mut Vec<StickMove>) -> bool {
    if depth == 0 {
        return state.is_valid();
    }
    // One move repairs at most two glyphs.
    if state.invalid_glyphs() > 2 * depth {
        return false;
    }
    for m in state.moves() {
        state.try_move(m).expect("enumerated move is legal");
        path.push(m);
        if search(state, depth - 1, path) {
            state.undo().expect("just moved");
            return true;
        }
        path.pop();
        state.undo().expect("just moved");
    }
    false
}

/// A shortest relocation list of at most `max_depth` moves.
pub fn shortest(state: &EquationState, max_depth: usize) -> Option<Vec<StickMove>> {
    let mut work = state.clone();
    work.history.clear();
    (0..=max_depth).find_map(|d| {
        let mut path = Vec::new();
        search(&mut work, d, &mut path).then_some(path)
    })
}

fn mv(m: StickMove) -> ActionCall {
    ActionCall::known("move", vec![Value::ints(&m.map(|x| x as i64))])
}

fn undo() -> ActionCall {
    ActionCall::known("undo", vec![])
}

/// Orders candidate moves by repaired glyphs, then arithmetic error.
fn ranked_moves(state: &mut EquationState, rng: &mut impl Rng) -> Vec<StickMove> {
    let mut moves = state.moves();
    moves.shuffle(rng);
    let mut scored: Vec<((usize, i64), StickMove)> = moves
        .into_iter()
        .map(|m| {
            state.try_move(m).expect("legal");
            let score = (state.invalid_glyphs(), state.arithmetic_error().unwrap_or(i64::MAX));
            state.undo().expect("just moved");
            (score, m)
        })
        .collect();
    scored.sort_by_key(|(s, _)| *s);
    scored.into_iter().map(|(_, m)| m).collect()
}

struct Dfs<'a, R> {
    rng: &'a mut R,
    trace: Vec<ActionCall>,
    backtracks: usize,
}

impl<R: Rng> Dfs<'_, R> {
    fn run(&mut self, state: &mut EquationState, depth: usize) -> Option<bool> {
        if state.is_valid() {
            return Some(true);
        }
        if depth == 0 || state.invalid_glyphs() > 2 * depth {
            return Some(false);
        }
        for m in ranked_moves(state, self.rng) {
            if self.trace.len() + 2 > DFS_TRACE_CAP {
                return None;
            }
            state.try_move(m).expect("legal");
            self.trace.push(mv(m));
            match self.run(state, depth - 1) {
                Some(true) => return Some(true),
                outcome => {
                    state.undo().expect("just moved");
                    self.trace.push(undo());
                    self.backtracks += 1;
                    outcome?;
                }
            }
        }
        Some(false)
    }
}

/// Random detours (a legal move and its undo) before optimal steps, plus one
/// rejected move for odd counts.
fn with_detours(state: &EquationState, base: &[StickMove], n: usize, rng: &mut impl Rng) -> Vec<ActionCall> {
    let mut states = vec![state.clone()];
    for &m in base {
        let mut next = states.last().expect("nonempty").clone();
        next.try_move(m).expect("plan move is legal");
        states.push(next);
    }
    // Detours go before an optimal step; with an empty base they go first.
    let slots = base.len().max(1);
    let mut inserts: Vec<Vec<ActionCall>> = vec![Vec::new(); slots];
    let mut remaining = n;
    if remaining % 2 == 1 {
        let slot = rng.gen_range(0..slots);
        // Moving onto an occupied segment is rejected and changes nothing.
        let s = &states[slot];
        let occupied: Vec<(usize, usize)> = (0..s.masks.len())
            .flat_map(|i| (0..s.layout[i].segments()).map(move |k| (i, k)))
            .filter(|&(i, k)| s.has(i, k))
            .collect();
        let &(i, k) = occupied.choose(rng).expect("sticks exist");
        let &(j, t) = occupied.choose(rng).expect("sticks exist");
        inserts[slot].push(mv([i, k, j, t]));
        remaining -= 1;
    }
    while remaining > 0 {
        let slot = rng.gen_range(0..slots);
        let &m = states[slot].moves().choose(rng).expect("a move exists");
        inserts[slot].extend([mv(m), undo()]);
        remaining -= 2;
    }
    let mut out = Vec::with_capacity(base.len() + n);
    for (i, group) in inserts.into_iter().enumerate() {
        out.extend(group);
        if let Some(&m) = base.get(i) {
            out.push(mv(m));
        }
    }
    out
}

pub(crate) fn solve(env: &EquationEnv, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
    let strategy = pick_strategy(env.kind(), opts)?;
    let state = env.state();
    let base = shortest(state, MAX_DEPTH)
        .ok_or_else(|| SolveError::NoSolution(format!("no correction within {MAX_DEPTH} moves")))?;
    let mut rng = opts.rng("equation");
    let moves = match strategy {
        "dfs" => {
            let mut work = state.clone();
            work.history.clear();
            let mut dfs = Dfs { rng: &mut rng, trace: Vec::new(), backtracks: 0 };
            let found = dfs.run(&mut work, base.len());
            let mut trace = dfs.trace;
            if found != Some(true) {
                // Exploration budget exhausted: every probe has been undone.
                trace.extend(base.iter().copied().map(mv));
            }
            let n = padding_needed(trace.len(), opts.target_steps)?;
            if n > 0 {
                let mut prefix = with_detours(state, &[], n, &mut rng);
                prefix.extend(trace);
                prefix
            } else {
                trace
            }
        }
        _ => {
            let default_pad = if strategy == "sos" { 2 } else { 0 };
            let n = match opts.target_steps {
                Some(_) => padding_needed(base.len(), opts.target_steps)?,
                None => default_pad,
            };
            with_detours(state, &base, n, &mut rng)
        }
    };
    Ok(SolverPlan::new(moves, strategy, opts.seed))
}
