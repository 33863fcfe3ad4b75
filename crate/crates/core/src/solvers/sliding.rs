//! Sliding Block: bidirectional breadth-first search over whole boards.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{padding_needed, pick_strategy, SolveError, SolverOptions, SolverPlan};
use crate::actions::{ActionCall, Value};
use crate::envs::sliding::{legal_moves, slide, Board, SlidingEnv, SlidingState};
use crate::envs::Environment;

/// Maximum number of boards held in the search maps.
pub const NODE_BUDGET: usize = 500_000;

type Parents = HashMap<Board, (u32, Option<(Board, u8, usize)>)>;

fn expand(
    frontier: &[Board],
    own: &mut Parents,
    other: &Parents,
    blocks: u8,
    depth: u32,
) -> (Vec<Board>, Option<(u32, Board)>) {
    let mut next = Vec::new();
    let mut best: Option<(u32, Board)> = None;
    for board in frontier {
        for (b, d) in legal_moves(board, blocks) {
            let child = slide(board, b, d).expect("legal");
            if own.contains_key(&child) {
                continue;
            }
            own.insert(child, (depth + 1, Some((*board, b, d))));
            if let Some(&(od, _)) = other.get(&child) {
                let total = depth + 1 + od;
                if best.is_none_or(|(t, _)| total < t) {
                    best = Some((total, child));
                }
            }
            next.push(child);
        }
    }
    (next, best)
}

/// A shortest move list from `state.board` to `state.target`, if one of at
/// most `max_depth` moves exists within the node budget.
pub fn shortest_solution(state: &SlidingState, max_depth: usize) -> Option<Vec<(u8, usize)>> {
    if state.board == state.target {
        return Some(Vec::new());
    }
    let mut fwd: Parents = HashMap::from([(state.board, (0, None))]);
    let mut bwd: Parents = HashMap::from([(state.target, (0, None))]);
    let (mut ff, mut bf) = (vec![state.board], vec![state.target]);
    let (mut df, mut db) = (0u32, 0u32);
    let meet = loop {
        if ff.is_empty() || bf.is_empty() || (df + db) as usize >= max_depth || fwd.len() + bwd.len() > NODE_BUDGET {
            return None;
        }
        if ff.len() <= bf.len() {
            let (next, best) = expand(&ff, &mut fwd, &bwd, state.blocks, df);
            ff = next;
            df += 1;
            if let Some((_, m)) = best {
                break m;
            }
        } else {
            let (next, best) = expand(&bf, &mut bwd, &fwd, state.blocks, db);
            bf = next;
            db += 1;
            if let Some((_, m)) = best {
                break m;
            }
        }
    };
    let mut moves = Vec::new();
    let mut cur = meet;
    while let Some((_, Some((parent, b, d)))) = fwd.get(&cur) {
        moves.push((*b, *d));
        cur = *parent;
    }
    moves.reverse();
    let mut cur = meet;
    while let Some((_, Some((parent, b, d)))) = bwd.get(&cur) {
        moves.push((*b, (*d + 2) % 4));
        cur = *parent;
    }
    (moves.len() <= max_depth).then_some(moves)
}

fn mv((b, d): (u8, usize)) -> ActionCall {
    ActionCall::known("move", vec![Value::Int(i64::from(b)), Value::Int(d as i64)])
}

fn pad(state: &SlidingState, base: &[(u8, usize)], n: usize, rng: &mut impl Rng) -> Vec<ActionCall> {
    let mut boards = vec![state.board];
    for &(b, d) in base {
        let next = slide(boards.last().expect("nonempty"), b, d).expect("plan move is legal");
        boards.push(next);
    }
    let mut inserts: Vec<Vec<(u8, usize)>> = vec![Vec::new(); boards.len()];
    let mut remaining = n;
    if remaining % 2 == 1 {
        let slot = rng.gen_range(0..boards.len());
        let blocked: Vec<(u8, usize)> = (0..state.blocks)
            .flat_map(|b| (0..4).map(move |d| (b, d)))
            .filter(|&(b, d)| slide(&boards[slot], b, d).is_err())
            .collect();
        // Some block always touches an edge, so a blocked move exists.
        inserts[slot].push(*blocked.choose(rng).expect("a blocked move exists"));
        remaining -= 1;
    }
    while remaining > 0 {
        let slot = rng.gen_range(0..boards.len());
        let legal = legal_moves(&boards[slot], state.blocks);
        let Some(&(b, d)) = legal.choose(rng) else { continue };
        inserts[slot].extend([(b, d), (b, (d + 2) % 4)]);
        remaining -= 2;
    }
    let mut out = Vec::with_capacity(base.len() + n);
    for (i, group) in inserts.into_iter().enumerate() {
        out.extend(group.into_iter().map(mv));
        if let Some(&m) = base.get(i) {
            out.push(mv(m));
        }
    }
    out
}

pub(crate) fn solve(env: &SlidingEnv, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
    let strategy = pick_strategy(env.kind(), opts)?;
    let state = env.state();
    let base = shortest_solution(state, usize::MAX).unwrap_or_else(|| env.witness().to_vec());
    let n = padding_needed(base.len(), opts.target_steps)?;
    let moves =
        if n == 0 { base.iter().copied().map(mv).collect() } else { pad(state, &base, n, &mut opts.rng("sliding")) };
    Ok(SolverPlan::new(moves, strategy, opts.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::sliding::{SlidingParams, EMPTY};
    use crate::solvers::verify_plan;
    use std::collections::VecDeque;

    /// Plain one-sided BFS distance.
    fn oracle(state: &SlidingState) -> usize {
        let mut seen = HashMap::from([(state.board, 0usize)]);
        let mut q = VecDeque::from([state.board]);
        while let Some(b) = q.pop_front() {
            let d = seen[&b];
            if b == state.target {
                return d;
            }
            for (k, dir) in legal_moves(&b, state.blocks) {
                let n = slide(&b, k, dir).unwrap();
                seen.entry(n).or_insert_with(|| {
                    q.push_back(n);
                    d + 1
                });
            }
        }
        unreachable!()
    }

    #[test]
    fn one_move_scramble() {
        let mut target = [EMPTY; 20];
        target[0] = 0;
        target[1] = 1;
        let mut board = target;
        board[1] = EMPTY;
        board[2] = 1;
        let state = SlidingState { board, target, blocks: 2 };
        assert_eq!(shortest_solution(&state, 10), Some(vec![(1, 3)]));
    }

    #[test]
    fn matches_plain_bfs() {
        for seed in 0..15 {
            let env = SlidingEnv::generate(SlidingParams { sm: 8, max_solution: 19 }, seed).unwrap();
            let plan = shortest_solution(env.state(), usize::MAX).unwrap();
            assert_eq!(plan.len(), oracle(env.state()), "seed {seed}");
            assert!(plan.len() <= env.witness().len());
        }
    }

    #[test]
    fn padded_plans_replay() {
        let env = SlidingEnv::generate(SlidingParams { sm: 12, max_solution: 19 }, 4).unwrap();
        let minimal = env.solve(&SolverOptions::default()).unwrap().moves().len();
        for extra in [1, 2, 3, 6] {
            let plan =
                env.solve(&SolverOptions::default().with_target(minimal + extra).with_seed(extra as u64)).unwrap();
            assert_eq!(plan.moves().len(), minimal + extra);
            assert!(verify_plan(&env, &plan));
        }
    }
}
