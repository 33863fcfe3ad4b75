//! Property tests for the cross-cutting invariants.

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stepgym::actions::{validate, ArgKind};
use stepgym::envs::equation::{EquationEnv, EquationParams};
use stepgym::envs::image::permutation::PermState;
use stepgym::envs::mr3d::{geodesic_deg, Mat3};
use stepgym::envs::patch::PatchEnv;
use stepgym::envs::rotation::angular_distance;
use stepgym::envs::sliding::{SlidingEnv, CELLS};
use stepgym::{
    build_history, canonical_repr, extract_action, make_env, ActionCall, AssetStore, Canvas, Difficulty, EnvKind,
    Environment, Episode, EpisodeConfig, HistoryWindow, ParamMap, Rgb, SolverOptions, Value,
};

fn assets() -> AssetStore {
    AssetStore::synthetic()
}

fn env_kind() -> impl Strategy<Value = EnvKind> {
    prop::sample::select(EnvKind::ALL.to_vec())
}

fn scalar() -> impl Strategy<Value = Value> {
    prop_oneof![
        any::<i64>().prop_map(Value::Int),
        (-1e6f64..1e6).prop_map(Value::Real),
        any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(Value::Real),
    ]
}

fn value() -> impl Strategy<Value = Value> {
    prop_oneof![scalar(), prop::collection::vec(scalar(), 0..5).prop_map(Value::List)]
}

fn call() -> impl Strategy<Value = ActionCall> {
    ("[a-z_][a-z0-9_]{0,10}", prop::collection::vec(value(), 0..4))
        .prop_map(|(name, payload)| ActionCall::new(name, payload).unwrap())
}

/// A schema-valid action for `env`, as text.
fn valid_action(env: &dyn Environment, rng: &mut impl Rng) -> String {
    let schemas: Vec<_> = env.schemas().iter().collect();
    let s = schemas[rng.gen_range(0..schemas.len())];
    let payload = s
        .args
        .iter()
        .map(|a| match &a.kind {
            ArgKind::Int { min, max } => Value::Int(rng.gen_range(*min..=*max)),
            ArgKind::Real { min, max } => Value::Real(rng.gen_range(*min..=*max)),
            ArgKind::IntList { bounds } => {
                Value::ints(&bounds.iter().map(|&(l, h)| rng.gen_range(l..=h)).collect::<Vec<_>>())
            }
            ArgKind::RealList { bounds } => {
                Value::reals(&bounds.iter().map(|&(l, h)| rng.gen_range(l..=h)).collect::<Vec<_>>())
            }
        })
        .collect();
    canonical_repr(&ActionCall::new(s.name.clone(), payload).unwrap())
}

/// Applies a text action directly to an environment; stop and invalid text
/// are ignored.
fn apply_text(env: &mut dyn Environment, raw: &str) -> bool {
    let Ok(call) = extract_action(raw) else { return false };
    let Ok(args) = validate(&call, env.schemas()) else { return false };
    if call.is_stop() {
        return false;
    }
    env.apply(&call.name, &args);
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonical_form_round_trips(c in call()) {
        prop_assert_eq!(extract_action(&canonical_repr(&c)).unwrap(), c);
    }

    #[test]
    fn last_literal_wins(prefix in ".{0,60}", c in call()) {
        let text = format!("{prefix} {}", canonical_repr(&c));
        prop_assert_eq!(extract_action(&text).unwrap(), c);
    }

    #[test]
    fn parser_is_total(bytes in prop::collection::vec(any::<u8>(), 0..200), s in "\\PC{0,80}") {
        let _ = extract_action(&String::from_utf8_lossy(&bytes));
        let _ = extract_action(&s);
    }

    #[test]
    fn angular_distance_is_symmetric(a in -1e4f64..1e4, b in -1e4f64..1e4) {
        let d = angular_distance(a, b);
        prop_assert_eq!(d, angular_distance(b, a));
        prop_assert!((0.0..=180.0).contains(&d));
    }
}

fn perm_state(n: usize) -> PermState {
    let items = (0..n).map(|_| Arc::new(Canvas::new(1, 1, Rgb::new(0, 0, 0)))).collect();
    PermState { items, perm: (0..n).collect(), goal: (0..n).collect(), grid: None, content: String::new() }
}

fn permutation(max: usize) -> impl Strategy<Value = Vec<usize>> {
    (2..=max).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())
}

proptest! {
    #[test]
    fn swap_is_an_involution(p in permutation(9), i in 0usize..9, j in 0usize..9) {
        let mut s = perm_state(p.len());
        s.perm = p.clone();
        let (i, j) = (i % p.len(), j % p.len());
        s.swap(i, j);
        s.swap(i, j);
        prop_assert_eq!(s.perm, p);
    }

    #[test]
    fn reorder_laws(p in permutation(9), seed in any::<u64>()) {
        let n = p.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut q: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            q.swap(i, rng.gen_range(0..=i));
        }
        let mut inverse = vec![0; n];
        for (i, &v) in p.iter().enumerate() {
            inverse[v] = i;
        }

        let mut s = perm_state(n);
        s.perm = q.clone();
        s.reorder(&p).unwrap();
        // slot i receives what slot p[i] held
        prop_assert_eq!(&s.perm, &p.iter().map(|&k| q[k]).collect::<Vec<_>>());
        s.reorder(&inverse).unwrap();
        prop_assert_eq!(&s.perm, &q);

        // reorder(p) then reorder(r) equals reorder(i -> p[r[i]])
        let r: Vec<usize> = q.clone();
        let mut a = perm_state(n);
        a.reorder(&p).unwrap();
        a.reorder(&r).unwrap();
        let mut b = perm_state(n);
        b.reorder(&r.iter().map(|&i| p[i]).collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(a.perm, b.perm);
    }

    #[test]
    fn non_permutations_are_rejected(v in prop::collection::vec(0usize..6, 1..7)) {
        let mut s = perm_state(v.len());
        let mut sorted = v.clone();
        sorted.sort_unstable();
        let is_perm = sorted == (0..v.len()).collect::<Vec<_>>();
        prop_assert_eq!(s.reorder(&v).is_ok(), is_perm);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sticks_are_conserved_and_undo_restores(seed in 0u64..500, hard in any::<bool>(), ops in prop::collection::vec((any::<u8>(), any::<u8>(), any::<u8>(), any::<u8>(), any::<bool>()), 1..60)) {
        let params = EquationParams { bm: if hard { 2 } else { 1 } };
        let env = EquationEnv::generate(params, seed).unwrap();
        let mut state = env.state().clone();
        let sticks = state.stick_count();
        let n = state.masks.len();
        let mut snapshots = Vec::new();
        for (i, s, j, t, undo) in ops {
            if undo {
                let before = snapshots.pop();
                let ok = state.undo().is_ok();
                prop_assert_eq!(ok, before.is_some());
                if let Some(masks) = before {
                    prop_assert_eq!(&state.masks, &masks);
                }
            } else {
                let mv = [i as usize % (n + 1), s as usize % 5, j as usize % (n + 1), t as usize % 5];
                let masks = state.masks.clone();
                if state.try_move(mv).is_ok() {
                    snapshots.push(masks);
                } else {
                    prop_assert_eq!(&state.masks, &masks);
                }
            }
            prop_assert_eq!(state.stick_count(), sticks);
        }
    }

    #[test]
    fn geodesic_is_a_metric(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let m = |s: u64| Mat3::random(&mut ChaCha8Rng::seed_from_u64(s));
        let (a, b, c) = (m(a), m(b), m(c));
        let (ab, ba) = (geodesic_deg(&a, &b), geodesic_deg(&b, &a));
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(geodesic_deg(&a, &a) < 1e-6);
        prop_assert!((0.0..=180.0 + 1e-9).contains(&ab));
        prop_assert!(ab <= geodesic_deg(&a, &c) + geodesic_deg(&c, &b) + 1e-6);
    }

    #[test]
    fn history_windows_are_nested_suffixes(kind in env_kind(), seed in 0u64..1000, n in 0usize..12) {
        let config = EpisodeConfig { max_steps: Some(40), ..EpisodeConfig::new(kind, seed) };
        let mut episode = Episode::reset(&config, &assets()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n {
            let raw = valid_action(episode.env(), &mut rng);
            if episode.is_finished() { break; }
            episode.step(&raw).unwrap();
        }
        let t = episode.trajectory();
        let windows = [HistoryWindow::last(1).unwrap(), HistoryWindow::last(2).unwrap(), HistoryWindow::last(4).unwrap(), HistoryWindow::Unbounded];
        for (i, small) in windows.iter().enumerate() {
            let h = build_history(t, *small);
            if let HistoryWindow::Last(k) = small {
                prop_assert!(h.len() <= k.get());
            }
            for large in &windows[i..] {
                let l = build_history(t, *large);
                prop_assert!(l.len() >= h.len());
                prop_assert!(l[l.len() - h.len()..] == *h);
            }
        }
    }

    #[test]
    fn budget_accounting(kind in env_kind(), seed in 0u64..1000, max_steps in 1u32..12, script in prop::collection::vec(0u8..4, 0..20)) {
        let config = EpisodeConfig { max_steps: Some(max_steps), ..EpisodeConfig::new(kind, seed) };
        let mut episode = Episode::reset(&config, &assets()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut issued = 0;
        let mut last = String::new();
        for op in &script {
            let raw = match op {
                0 => "???".to_string(),
                1 => "frobnicate(1)".to_string(),
                2 if rng.gen_bool(0.2) => "stop()".to_string(),
                _ => valid_action(episode.env(), &mut rng),
            };
            if episode.is_finished() {
                prop_assert!(episode.step(&raw).is_err());
                continue;
            }
            episode.step(&raw).unwrap();
            issued += 1;
            last = raw;
        }
        let t = episode.trajectory();
        prop_assert_eq!(t.turns.len(), issued.min(max_steps as usize));
        prop_assert!(t.turns.len() <= max_steps as usize);
        if t.truncated {
            prop_assert_eq!(t.turns.len(), max_steps as usize);
            prop_assert!(!extract_action(&last).is_ok_and(|c| c.is_stop()));
            prop_assert!(!t.terminated);
        }
        prop_assert!(t.reward == 0 || t.terminated);
    }

    #[test]
    fn same_seed_same_evolution(kind in env_kind(), seed in 0u64..1000, n in 0usize..8) {
        let config = EpisodeConfig::new(kind, seed).with_difficulty(Difficulty::Hard);
        let mut a = Episode::reset(&config, &assets()).unwrap();
        let mut b = Episode::reset(&config, &assets()).unwrap();
        prop_assert_eq!(a.instruction(), b.instruction());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n {
            if a.is_finished() { break; }
            let raw = valid_action(a.env(), &mut rng);
            a.step(&raw).unwrap();
            b.step(&raw).unwrap();
            prop_assert_eq!(a.env().canonical_state(), b.env().canonical_state());
            prop_assert!(a.observation().image == b.observation().image);
        }
    }

    #[test]
    fn padding_keeps_the_terminal_state(kind in env_kind(), seed in 0u64..1000, extra in 0usize..6, pick in any::<prop::sample::Index>()) {
        let env = make_env(kind, Difficulty::Easy, &ParamMap::new(), seed, &assets()).unwrap();
        let strategy = *pick.get(kind.strategies());
        let opts = SolverOptions::with_strategy(strategy);
        let base = env.solve(&opts).unwrap();
        prop_assert_eq!(&env.solve(&opts).unwrap().actions, &base.actions);
        let padded = env.solve(&opts.clone().with_target(base.moves().len() + extra)).unwrap();
        prop_assert_eq!(padded.moves().len(), base.moves().len() + extra);
        let end = |plan: &stepgym::SolverPlan| {
            let mut e = env.clone_box();
            for m in plan.moves() {
                assert!(apply_text(e.as_mut(), &canonical_repr(m)));
            }
            (e.is_solved(), e.canonical_state())
        };
        let (a, b) = (end(&base), end(&padded));
        prop_assert!(a.0 && b.0);
        // continuous poses may differ by rounding when moves are split
        if !matches!(kind, EnvKind::MatchstickRotation | EnvKind::MentalRotation2d | EnvKind::MentalRotation3d | EnvKind::Colorization) {
            prop_assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn sliding_moves_touch_one_block(seed in 0u64..1000, steps in prop::collection::vec(any::<u64>(), 1..10)) {
        let mut env: Box<dyn Environment> = make_env(EnvKind::SlidingBlock, Difficulty::Easy, &ParamMap::new(), seed, &assets()).unwrap();
        for s in steps {
            let before = env.as_any().downcast_ref::<SlidingEnv>().unwrap().state().board;
            let raw = valid_action(env.as_ref(), &mut ChaCha8Rng::seed_from_u64(s));
            apply_text(env.as_mut(), &raw);
            let after = env.as_any().downcast_ref::<SlidingEnv>().unwrap().state().board;
            let mut touched: Vec<u8> = (0..CELLS).filter(|&i| before[i] != after[i]).flat_map(|i| [before[i], after[i]]).collect();
            touched.sort_unstable();
            touched.dedup();
            touched.retain(|&b| b != stepgym::envs::sliding::EMPTY);
            prop_assert!(touched.len() <= 1);
        }
    }

    #[test]
    fn patch_moves_touch_one_patch(seed in 0u64..1000, steps in prop::collection::vec(any::<u64>(), 1..10)) {
        let mut env: Box<dyn Environment> = make_env(EnvKind::PatchReassembly, Difficulty::Hard, &ParamMap::new(), seed, &assets()).unwrap();
        for s in steps {
            let before = env.as_any().downcast_ref::<PatchEnv>().unwrap().state().placed.clone();
            let raw = valid_action(env.as_ref(), &mut ChaCha8Rng::seed_from_u64(s));
            apply_text(env.as_mut(), &raw);
            let after = &env.as_any().downcast_ref::<PatchEnv>().unwrap().state().placed;
            prop_assert!(before.iter().zip(after).filter(|(a, b)| a != b).count() <= 1);
        }
    }
}

#[test]
fn orientation_stays_orthonormal() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let env = make_env(EnvKind::MentalRotation3d, Difficulty::Hard, &ParamMap::new(), 3, &assets()).unwrap();
    let mut state = env.as_any().downcast_ref::<stepgym::envs::mr3d::Mr3dEnv>().unwrap().state().clone();
    for _ in 0..10_000 {
        state.rotate(rng.gen_range(-180.0..180.0), rng.gen_range(-180.0..180.0), rng.gen_range(-180.0..180.0));
    }
    let m = state.current.0;
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
            worst = worst.max((dot - f64::from(u8::from(i == j))).abs());
        }
    }
    assert!(worst < 1e-6, "|R^T R - I| = {worst}");
}
