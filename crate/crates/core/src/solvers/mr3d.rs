//! Mental Rotation 3D: yaw, pitch and roll corrections, optionally each
//! preceded by a full turn about the same axis.

use rand::Rng;

use super::{pick_strategy, SolveError, SolverOptions, SolverPlan};
use crate::actions::{ActionCall, Value};
use crate::envs::mr3d::Mr3dEnv;
use crate::envs::Environment;

fn rotate(axis: usize, deg: f64) -> ActionCall {
    let mut v = [0.0; 3];
    v[axis] = deg;
    ActionCall::known("rotate", vec![Value::reals(&v)])
}

pub(crate) fn solve(env: &Mr3dEnv, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
    let strategy = pick_strategy(env.kind(), opts)?;
    let s = env.state();
    let (yaw, pitch, roll) = s.current.transpose().mul(&s.target).to_ypr();
    let mut moves = Vec::new();
    for (axis, deg) in [yaw, pitch, roll].into_iter().enumerate() {
        if strategy == "rotate_then_solve" {
            moves.extend((0..4).map(|_| rotate(axis, 90.0)));
        }
        moves.push(rotate(axis, deg));
    }
    let minimal = moves.len();
    let Some(target) = opts.target_steps else {
        return Ok(SolverPlan::new(moves, strategy, opts.seed));
    };
    let n = super::padding_needed(minimal, Some(target))?;
    // Pairs of opposite turns about one axis, inserted before a correction;
    // an odd count splits the roll correction in two.
    let mut rng = opts.rng("mr3d");
    if n % 2 == 1 {
        moves.pop();
        let half = roll / 2.0;
        moves.extend([rotate(2, half), rotate(2, roll - half)]);
    }
    for _ in 0..n / 2 {
        let at = rng.gen_range(0..=moves.len() - 1);
        let axis = rng.gen_range(0..3);
        let deg = rng.gen_range(10.0..90.0);
        moves.splice(at..at, [rotate(axis, deg), rotate(axis, -deg)]);
    }
    Ok(SolverPlan::new(moves, strategy, opts.seed))
}
