//! Matchstick Rotation: translation-only moves toward the target, then one
//! move carrying the whole rotation and the remaining translation.

use rand::Rng;

use super::{pick_strategy, SolveError, SolverOptions, SolverPlan};
use crate::actions::{ActionCall, Value};
use crate::envs::rotation::{signed_delta, RotationEnv, RotationState};
use crate::envs::Environment;

fn mv(d: [f64; 3]) -> ActionCall {
    ActionCall::known("move", vec![Value::reals(&d)])
}

/// The exact command finishing from `s`, using the true scale.
fn final_move(s: &RotationState) -> [f64; 3] {
    let k = s.hidden_scale;
    [(s.target.x - s.current.x) / k, (s.target.y - s.current.y) / k, signed_delta(s.current.theta, s.target.theta)]
}

pub(crate) fn solve(env: &RotationEnv, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
    let strategy = pick_strategy(env.kind(), opts)?;
    let mut s = env.state().clone();
    let mut rng = opts.rng("rotation");
    let total = opts.target_steps.unwrap_or(3);
    let mut moves = Vec::new();
    if strategy == "probe_then_solve" {
        if total < 3 {
            return Err(SolveError::TargetTooShort { minimal: 3, target: total });
        }
        // Unit probes alternate +x and +y; extra probes keep alternating.
        for i in 0..total - 1 {
            let d = if i % 2 == 0 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            s.apply_move(d[0], d[1], d[2]);
            moves.push(mv(d));
        }
    } else {
        if total < 1 {
            return Err(SolveError::TargetTooShort { minimal: 1, target: total });
        }
        // Stochastic splits: each covers part of what remains.
        for _ in 0..total - 1 {
            let f = rng.gen_range(0.2..0.6);
            let [dx, dy, _] = final_move(&s);
            let d = [dx * f, dy * f, 0.0];
            s.apply_move(d[0], d[1], d[2]);
            moves.push(mv(d));
        }
    }
    moves.push(mv(final_move(&s)));
    Ok(SolverPlan::new(moves, strategy, opts.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::rotation::RotationParams;
    use crate::params::{Difficulty, ParamMap};
    use crate::solvers::verify_plan;

    fn env(seed: u64) -> RotationEnv {
        RotationEnv::generate(RotationParams::resolve(Difficulty::Hard, &ParamMap::new()).unwrap(), seed).unwrap()
    }

    #[test]
    fn probe_plan_structure() {
        for seed in 0..30 {
            let e = env(seed);
            let plan = e.solve(&SolverOptions::with_strategy("probe_then_solve")).unwrap();
            let lines = plan.lines();
            assert_eq!(lines.len(), 4);
            assert_eq!(lines[0], "('move', ([1.0, 0.0, 0.0],))");
            assert_eq!(lines[1], "('move', ([0.0, 1.0, 0.0],))");
            assert!(verify_plan(&e, &plan), "seed {seed}");
        }
    }

    #[test]
    fn three_moves_plan() {
        for seed in 0..30 {
            let e = env(seed);
            let plan = e.solve(&SolverOptions::with_strategy("3_moves").with_seed(seed)).unwrap();
            assert_eq!(plan.moves().len(), 3);
            // only the last move rotates
            for a in &plan.moves()[..2] {
                assert_eq!(a.payload[0].as_list().unwrap()[2].as_f64(), Some(0.0));
            }
            assert!(verify_plan(&e, &plan), "seed {seed}");
        }
    }

    #[test]
    fn target_lengths() {
        let e = env(3);
        for t in [1, 2, 5] {
            let plan = e.solve(&SolverOptions::with_strategy("3_moves").with_target(t)).unwrap();
            assert_eq!(plan.moves().len(), t);
            assert!(verify_plan(&e, &plan));
        }
        assert!(e.solve(&SolverOptions::with_strategy("probe_then_solve").with_target(2)).is_err());
    }
}
