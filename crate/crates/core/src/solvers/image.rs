//! Image tasks: permutation sorting, split rotations and incremental
//! colour correction.

use rand::Rng;

use super::{padding_needed, pick_strategy, SolveError, SolverOptions, SolverPlan};
use crate::actions::{ActionCall, Value};
use crate::envs::image::color::ColorEnv;
use crate::envs::image::mr2d::Mr2dEnv;
use crate::envs::image::permutation::{PermEnv, PermState};
use crate::envs::Environment;

/// Largest single hue step of the incremental colour plan, in degrees.
pub const HUE_STEP: f64 = 60.0;
/// Largest single saturation step, in percentage points.
pub const SAT_STEP: f64 = 25.0;

fn swap_call(state: &PermState, i: usize, j: usize) -> ActionCall {
    match state.grid {
        Some((_, nc)) => ActionCall::known(
            "swap",
            vec![Value::ints(&[(i / nc) as i64, (i % nc) as i64]), Value::ints(&[(j / nc) as i64, (j % nc) as i64])],
        ),
        None => ActionCall::known("swap", vec![Value::Int(i as i64), Value::Int(j as i64)]),
    }
}

fn reorder_call(p: &[usize]) -> ActionCall {
    let v: Vec<i64> = p.iter().map(|&x| x as i64).collect();
    ActionCall::known("reorder", vec![Value::ints(&v)])
}

/// Swaps that sort `perm` into `goal`, fixing one slot at a time.
pub fn selection_swaps(perm: &[usize], goal: &[usize]) -> Vec<(usize, usize)> {
    let mut cur = perm.to_vec();
    let mut out = Vec::new();
    for i in 0..cur.len() {
        if cur[i] != goal[i] {
            let j = (i + 1..cur.len()).find(|&j| cur[j] == goal[i]).expect("goal is a permutation of perm");
            cur.swap(i, j);
            out.push((i, j));
        }
    }
    out
}

/// The reorder payload taking `perm` to `goal`.
pub fn reorder_payload(perm: &[usize], goal: &[usize]) -> Vec<usize> {
    goal.iter().map(|g| perm.iter().position(|x| x == g).expect("same items")).collect()
}

pub(crate) fn solve_permutation(env: &PermEnv, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
    let strategy = pick_strategy(env.kind(), opts)?;
    let s = env.state();
    let mut moves: Vec<ActionCall> = if strategy == "reorder" {
        if s.is_solved() {
            Vec::new()
        } else {
            vec![reorder_call(&reorder_payload(&s.perm, &s.goal))]
        }
    } else {
        selection_swaps(&s.perm, &s.goal).into_iter().map(|(i, j)| swap_call(s, i, j)).collect()
    };
    let n = padding_needed(moves.len(), opts.target_steps)?;
    if n > 0 {
        // Swap pairs that cancel; an odd count adds an identity reorder.
        let mut rng = opts.rng("permutation");
        let len = s.len();
        let mut extra = Vec::with_capacity(n);
        if n % 2 == 1 {
            extra.push(vec![reorder_call(&(0..len).collect::<Vec<_>>())]);
        }
        for _ in 0..n / 2 {
            let i = rng.gen_range(0..len);
            let j = (i + rng.gen_range(1..len)) % len;
            extra.push(vec![swap_call(s, i, j), swap_call(s, i, j)]);
        }
        for group in extra {
            let at = rng.gen_range(0..=moves.len());
            moves.splice(at..at, group);
        }
    }
    Ok(SolverPlan::new(moves, strategy, opts.seed))
}

/// `k` angles of the same sign summing exactly to `total`.
pub fn split_angle(total: f64, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    if k <= 1 {
        return vec![total];
    }
    let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..1.5)).collect();
    let sum: f64 = weights.iter().sum();
    let mut parts: Vec<f64> = weights[..k - 1].iter().map(|w| total * w / sum).collect();
    let used: f64 = parts.iter().sum();
    parts.push(total - used);
    parts
}

pub(crate) fn solve_mr2d(env: &Mr2dEnv, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
    let strategy = pick_strategy(env.kind(), opts)?;
    let steps = opts.target_steps.unwrap_or(1);
    if steps == 0 {
        return Err(SolveError::TargetTooShort { minimal: 1, target: 0 });
    }
    let parts = split_angle(-env.state().residual, steps, &mut opts.rng("mr2d"));
    let moves = parts.into_iter().map(|a| ActionCall::known("rotate", vec![Value::Real(a)])).collect();
    Ok(SolverPlan::new(moves, strategy, opts.seed))
}

fn rotate(a: f64) -> ActionCall {
    ActionCall::known("rotate", vec![Value::Real(a)])
}

fn saturate(d: f64) -> ActionCall {
    ActionCall::known("saturate", vec![Value::Real(d)])
}

pub(crate) fn solve_colorize(env: &ColorEnv, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
    let strategy = pick_strategy(env.kind(), opts)?;
    let s = env.state();
    let (dh, ds) = (-s.hue_offset, -s.sat_offset);
    let needs = |d: f64| if d == 0.0 { 0 } else { 1 };
    let minimal = needs(dh) + needs(ds);
    let default_h = (dh.abs() / HUE_STEP).ceil() as usize;
    let default_s = (ds.abs() / SAT_STEP).ceil() as usize;
    let (kh, ks, pad) = match opts.target_steps {
        None => (default_h, default_s, 0),
        Some(t) if t < minimal => return Err(SolveError::TargetTooShort { minimal, target: t }),
        Some(t) if t >= default_h + default_s => (default_h, default_s, t - default_h - default_s),
        // Fewer, larger steps: share the budget between the channels.
        Some(t) => {
            let kh = needs(dh).max((t * default_h).div_ceil(default_h + default_s).min(t - needs(ds)));
            (kh, t - kh, 0)
        }
    };
    let mut rng = opts.rng("colorize");
    let mut moves: Vec<ActionCall> = Vec::new();
    moves.extend(split_angle(dh, kh, &mut rng).into_iter().filter(|_| kh > 0).map(rotate));
    moves.extend(split_angle(ds, ks, &mut rng).into_iter().filter(|_| ks > 0).map(saturate));
    let mut remaining = pad;
    if remaining % 2 == 1 {
        // Full hue turn: a single neutral action.
        moves.push(rotate(360.0));
        remaining -= 1;
    }
    while remaining > 0 {
        let at = rng.gen_range(0..=moves.len());
        let pair = if rng.gen_bool(0.5) {
            let a = rng.gen_range(5.0..30.0);
            [rotate(a), rotate(-a)]
        } else {
            // Small enough to never touch the clamp from a state within 60 points.
            let d = rng.gen_range(2.0..10.0);
            [saturate(d), saturate(-d)]
        };
        moves.splice(at..at, pair);
        remaining -= 2;
    }
    Ok(SolverPlan::new(moves, strategy, opts.seed))
}
