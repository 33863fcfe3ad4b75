//! Matchstick Rotation: align a stick with a target pose when translations
//! pass through an unobserved scale factor.

use std::any::Any;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{fill_template, EnvKind, Environment, EXECUTED};
use crate::actions::{ArgSpec, PayloadSchema, SchemaSet, Value};
use crate::params::{out_of_range, ConfigError, Difficulty, ParamMap, ParamReader};
use crate::render::{exact_sin_cos, Canvas, Rgb, BACKGROUND, IMAGE_PX};
use crate::solvers::{SolveError, SolverOptions, SolverPlan};

pub const FRAME: f64 = IMAGE_PX as f64;
pub const STICK_LEN: f64 = 96.0;
/// Poses are sampled at least this far from the frame edge.
pub const MARGIN: f64 = 64.0;
/// Bound on a commanded translation component.
pub const MAX_SHIFT: f64 = 1000.0;

const STICK_HALF_W: f64 = 4.0;
const WOOD: Rgb = Rgb::new(196, 140, 70);
const HEAD: Rgb = Rgb::new(200, 30, 30);
const GHOST: Rgb = Rgb::new(40, 110, 220);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StickPose {
    pub x: f64,
    pub y: f64,
    /// Degrees in [0, 360), counterclockwise from +x; the head is at the
    /// leading end.
    pub theta: f64,
}

impl StickPose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: normalize_deg(theta) }
    }

    /// Head and tail end points in image coordinates.
    pub fn ends(&self) -> ((f64, f64), (f64, f64)) {
        self.ends_at(STICK_LEN / 2.0)
    }

    fn ends_at(&self, half_len: f64) -> ((f64, f64), (f64, f64)) {
        let (s, c) = exact_sin_cos(self.theta);
        let (hx, hy) = (c * half_len, -s * half_len);
        ((self.x + hx, self.y + hy), (self.x - hx, self.y - hy))
    }

    fn outline(&self, half_len: f64, half_w: f64) -> [(f64, f64); 4] {
        let ((hx, hy), (tx, ty)) = self.ends_at(half_len);
        let (s, c) = exact_sin_cos(self.theta);
        let (nx, ny) = (s * half_w, c * half_w);
        [(hx + nx, hy + ny), (tx + nx, ty + ny), (tx - nx, ty - ny), (hx - nx, hy - ny)]
    }
}

pub fn normalize_deg(theta: f64) -> f64 {
    let t = theta.rem_euclid(360.0);
    if t >= 360.0 {
        0.0
    } else {
        t
    }
}

/// Circular distance in degrees, in [0, 180].
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Signed rotation in (-180, 180] taking `from` to `to`.
pub fn signed_delta(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationState {
    pub current: StickPose,
    pub target: StickPose,
    pub hidden_scale: f64,
    pub pt: f64,
    pub at: f64,
}

impl RotationState {
    pub fn position_error(&self) -> f64 {
        (self.current.x - self.target.x).hypot(self.current.y - self.target.y)
    }

    pub fn is_solved(&self) -> bool {
        self.position_error() <= self.pt && angular_distance(self.current.theta, self.target.theta) <= self.at
    }

    pub fn apply_move(&mut self, dx: f64, dy: f64, dtheta: f64) {
        let x = (self.current.x + self.hidden_scale * dx).clamp(0.0, FRAME);
        let y = (self.current.y + self.hidden_scale * dy).clamp(0.0, FRAME);
        self.current = StickPose::new(x, y, self.current.theta + dtheta);
    }

    fn draw(&self, pose: &StickPose) -> Canvas {
        let mut canvas = Canvas::new(IMAGE_PX, IMAGE_PX, BACKGROUND);
        // Ghost ring: the stick's own footprint with a hollow centre, so an
        // aligned stick hides it completely.
        let t = &self.target;
        canvas.fill_convex(&t.outline(STICK_LEN / 2.0, STICK_HALF_W), GHOST);
        canvas.fill_convex(&t.outline(STICK_LEN / 2.0 - 2.0, STICK_HALF_W - 2.0), BACKGROUND);
        let ((hx, hy), _) = t.ends();
        canvas.fill_circle(hx, hy, 6.0, GHOST);
        canvas.fill_circle(hx, hy, 3.5, BACKGROUND);

        canvas.fill_convex(&pose.outline(STICK_LEN / 2.0, STICK_HALF_W), WOOD);
        let ((hx, hy), _) = pose.ends();
        canvas.fill_circle(hx, hy, 6.0, HEAD);
        canvas
    }

    pub fn raster(&self) -> Canvas {
        self.draw(&self.current)
    }

    pub fn canonical(&self) -> String {
        let p = |s: &StickPose| format!("{:.6},{:.6},{:.6}", s.x, s.y, s.theta);
        format!(
            "rotation;current={};target={};scale={:.9};pt={};at={}",
            p(&self.current),
            p(&self.target),
            self.hidden_scale,
            self.pt,
            self.at
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationParams {
    pub sr: (f64, f64),
    pub pt: f64,
    pub at: f64,
}

impl RotationParams {
    pub fn resolve(difficulty: Difficulty, overrides: &ParamMap) -> Result<Self, ConfigError> {
        let r = ParamReader::new("matchstick_rotation", overrides, &["sr", "pt", "at"])?;
        let sr = r.float_pair("sr", (0.5, 2.0))?;
        let pt = r.float("pt", difficulty.pick(10.0, 5.0))?;
        let at = r.float("at", difficulty.pick(15.0, 10.0))?;
        if !(sr.0 > 0.0 && sr.0 <= sr.1 && sr.1.is_finite()) {
            return Err(out_of_range("sr", format!("[{}, {}]", sr.0, sr.1), "a positive interval lo <= hi"));
        }
        if !(pt > 0.0 && pt < 100.0) {
            return Err(out_of_range("pt", pt, "0 < pt < 100"));
        }
        if !(at > 0.0 && at < 90.0) {
            return Err(out_of_range("at", at, "0 < at < 90"));
        }
        Ok(Self { sr, pt, at })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("sr".into(), serde_json::json!([self.sr.0, self.sr.1]));
        m.insert("pt".into(), self.pt.into());
        m.insert("at".into(), self.at.into());
        m
    }
}

#[derive(Debug, Clone)]
pub struct RotationEnv {
    params: RotationParams,
    state: RotationState,
    schemas: SchemaSet,
}

impl RotationEnv {
    pub fn generate(params: RotationParams, seed: u64) -> Result<Self, ConfigError> {
        let mut rng = crate::rng::stream(seed, "matchstick_rotation/generate");
        let pose = |rng: &mut crate::rng::StreamRng| {
            StickPose::new(
                rng.gen_range(MARGIN..=FRAME - MARGIN),
                rng.gen_range(MARGIN..=FRAME - MARGIN),
                rng.gen_range(0.0..360.0),
            )
        };
        let hidden_scale =
            if params.sr.0 == params.sr.1 { params.sr.0 } else { rng.gen_range(params.sr.0..=params.sr.1) };
        let target = pose(&mut rng);
        let current = loop {
            let c = pose(&mut rng);
            let far = (c.x - target.x).hypot(c.y - target.y) > params.pt;
            if far && angular_distance(c.theta, target.theta) > params.at {
                break c;
            }
        };
        let state = RotationState { current, target, hidden_scale, pt: params.pt, at: params.at };
        Ok(Self::from_state(params, state))
    }

    pub fn from_state(params: RotationParams, state: RotationState) -> Self {
        let schemas = SchemaSet::new(vec![PayloadSchema::new(
            "move",
            vec![ArgSpec::real_list(
                "translation and rotation",
                vec![(-MAX_SHIFT, MAX_SHIFT), (-MAX_SHIFT, MAX_SHIFT), (-360.0, 360.0)],
            )],
            "move([dx, dy, dtheta])",
            "translate by (dx, dy) in scaled units and rotate by dtheta degrees",
        )]);
        Self { params, state, schemas }
    }

    pub fn state(&self) -> &RotationState {
        &self.state
    }
}

impl Environment for RotationEnv {
    fn kind(&self) -> EnvKind {
        EnvKind::MatchstickRotation
    }

    fn params(&self) -> ParamMap {
        self.params.to_map()
    }

    fn task_text(&self) -> String {
        fill_template(
            include_str!("../../resources/instructions/matchstick_rotation.txt"),
            &[("frame", IMAGE_PX.to_string()), ("pt", self.params.pt.to_string()), ("at", self.params.at.to_string())],
        )
    }

    fn schemas(&self) -> &SchemaSet {
        &self.schemas
    }

    fn apply(&mut self, _name: &str, args: &[Value]) -> String {
        let v: Vec<f64> = args
            .first()
            .and_then(Value::as_list)
            .map(|l| l.iter().filter_map(Value::as_f64).collect())
            .unwrap_or_default();
        if let &[dx, dy, dt] = v.as_slice() {
            self.state.apply_move(dx, dy, dt);
        }
        EXECUTED.to_string()
    }

    fn is_solved(&self) -> bool {
        self.state.is_solved()
    }

    fn render(&self) -> Canvas {
        self.state.raster()
    }

    fn goal_render(&self) -> Option<Canvas> {
        Some(self.state.draw(&self.state.target))
    }

    fn canonical_state(&self) -> String {
        self.state.canonical()
    }

    fn solve(&self, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
        crate::solvers::rotation::solve(self, opts)
    }

    fn clone_box(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(current: StickPose, target: StickPose) -> RotationState {
        RotationState { current, target, hidden_scale: 1.5, pt: 10.0, at: 15.0 }
    }

    #[test]
    fn unit_moves_scale_linearly() {
        let mut s = state(StickPose::new(200.0, 200.0, 0.0), StickPose::new(100.0, 100.0, 90.0));
        s.apply_move(1.0, 0.0, 0.0);
        s.apply_move(1.0, 0.0, 0.0);
        assert!((s.current.x - 203.0).abs() < 1e-12);
        s.apply_move(0.0, 0.0, 360.0);
        assert_eq!(s.current.theta, 0.0);
    }

    #[test]
    fn angles_wrap() {
        let mut s = state(StickPose::new(200.0, 200.0, 10.0), StickPose::new(100.0, 100.0, 90.0));
        s.apply_move(0.0, 0.0, -15.0);
        assert!((s.current.theta - 355.0).abs() < 1e-12);
        assert_eq!(angular_distance(350.0, 10.0), 20.0);
        assert_eq!(angular_distance(10.0, 350.0), 20.0);
        assert_eq!(signed_delta(350.0, 10.0), 20.0);
        assert_eq!(signed_delta(10.0, 350.0), -20.0);
    }

    #[test]
    fn tolerances_are_closed() {
        let t = StickPose::new(100.0, 100.0, 0.0);
        assert!(state(t, t).is_solved());
        assert!(state(StickPose::new(110.0, 100.0, 0.0), t).is_solved());
        assert!(!state(StickPose::new(111.0, 100.0, 0.0), t).is_solved());
        assert!(state(StickPose::new(100.0, 100.0, 15.0), t).is_solved());
        assert!(!state(StickPose::new(100.0, 100.0, 16.0), t).is_solved());
    }

    #[test]
    fn translation_clamps_to_frame() {
        let mut s = state(StickPose::new(440.0, 5.0, 0.0), StickPose::new(100.0, 100.0, 0.0));
        s.apply_move(100.0, -100.0, 0.0);
        assert_eq!((s.current.x, s.current.y), (FRAME, 0.0));
    }

    #[test]
    fn aligned_stick_hides_the_ghost() {
        let t = StickPose::new(220.0, 200.0, 33.0);
        let aligned = state(t, t).raster();
        assert_eq!(aligned.count_color(GHOST), 0);
        let apart = state(StickPose::new(100.0, 300.0, 120.0), t).raster();
        assert!(apart.count_color(GHOST) > 50);
    }

    #[test]
    fn head_marks_orientation() {
        let t = StickPose::new(100.0, 100.0, 0.0);
        let a = state(StickPose::new(250.0, 250.0, 40.0), t).raster();
        let b = state(StickPose::new(250.0, 250.0, 220.0), t).raster();
        assert!(a.mean_abs_diff(&b).unwrap() > 0.0);
    }

    #[test]
    fn generated_instances_start_unsolved() {
        for seed in 0..50 {
            let p = RotationParams::resolve(Difficulty::Hard, &ParamMap::new()).unwrap();
            let env = RotationEnv::generate(p, seed).unwrap();
            assert!(!env.is_solved());
            assert!((0.5..=2.0).contains(&env.state().hidden_scale));
        }
    }

    #[test]
    fn params_check_intervals() {
        let mut m = ParamMap::new();
        m.insert("sr".into(), serde_json::json!([2.0, 1.0]));
        assert!(RotationParams::resolve(Difficulty::Easy, &m).is_err());
        let easy = RotationParams::resolve(Difficulty::Easy, &ParamMap::new()).unwrap();
        assert_eq!((easy.pt, easy.at), (10.0, 15.0));
    }
}
