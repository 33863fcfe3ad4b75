//! Mental Rotation 2D: turn an image back upright.

use std::any::Any;
use std::sync::Arc;

use super::assets::ImageAsset;
use super::color::signed_uniform;
use crate::actions::{ArgSpec, PayloadSchema, SchemaSet, Value};
use crate::envs::{fill_template, EnvKind, Environment, EXECUTED};
use crate::params::{out_of_range, ConfigError, Difficulty, ParamMap, ParamReader};
use crate::render::{compose_side_by_side, Blit, Canvas, BACKGROUND};
use crate::solvers::{SolveError, SolverOptions, SolverPlan};

pub const PANEL_PX: u32 = 224;
pub const PANEL_GAP: u32 = 16;

/// Wraps degrees into (-180, 180].
pub fn wrap_residual(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mr2dState {
    /// Counter-clockwise rotation of the shown image relative to upright.
    pub residual: f64,
    pub at: f64,
}

impl Mr2dState {
    pub fn rotate(&mut self, theta: f64) {
        self.residual = wrap_residual(self.residual + theta);
    }

    pub fn is_solved(&self) -> bool {
        self.residual.abs() <= self.at
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mr2dParams {
    pub at: f64,
}

impl Mr2dParams {
    pub fn resolve(difficulty: Difficulty, overrides: &ParamMap) -> Result<Self, ConfigError> {
        let r = ParamReader::new("mental_rotation_2d", overrides, &["at"])?;
        let at = r.float("at", difficulty.pick(10.0, 5.0))?;
        if !(at > 0.0 && at < 90.0) {
            return Err(out_of_range("at", at, "0 < at < 90"));
        }
        Ok(Self { at })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("at".into(), self.at.into());
        m
    }
}

#[derive(Debug, Clone)]
pub struct Mr2dEnv {
    params: Mr2dParams,
    source: String,
    image: Arc<Canvas>,
    state: Mr2dState,
    schemas: SchemaSet,
}

impl Mr2dEnv {
    pub fn generate(params: Mr2dParams, asset: ImageAsset, seed: u64) -> Self {
        let mut rng = crate::rng::stream(seed, "mental_rotation_2d/generate");
        let residual = wrap_residual(signed_uniform(&mut rng, params.at + 10.0, 180.0));
        let state = Mr2dState { residual, at: params.at };
        Self::from_state(params, asset, state)
    }

    pub fn from_state(params: Mr2dParams, asset: ImageAsset, state: Mr2dState) -> Self {
        let schemas = SchemaSet::new(vec![PayloadSchema::new(
            "rotate",
            vec![ArgSpec::real("degrees", -360.0, 360.0)],
            "rotate(theta)",
            "turn the left image counterclockwise by theta degrees (negative turns clockwise)",
        )]);
        Self { params, source: asset.source, image: asset.pixels, state, schemas }
    }

    pub fn state(&self) -> &Mr2dState {
        &self.state
    }

    fn panel(&self, angle: f64) -> Canvas {
        let mut c = Canvas::new(PANEL_PX, PANEL_PX, BACKGROUND);
        let opts = Blit { size: Some((PANEL_PX, PANEL_PX)), rotation_deg: angle, circular_mask: true };
        c.blit(&self.image, 0, 0, opts);
        c
    }

    fn composite(&self, angle: f64) -> Canvas {
        compose_side_by_side(&[&self.panel(angle), &self.panel(0.0)], &["Current", "Target"], PANEL_GAP)
            .expect("equal panel heights")
    }
}

impl Environment for Mr2dEnv {
    fn kind(&self) -> EnvKind {
        EnvKind::MentalRotation2d
    }

    fn params(&self) -> ParamMap {
        self.params.to_map()
    }

    fn task_text(&self) -> String {
        fill_template(
            include_str!("../../../resources/instructions/mental_rotation_2d.txt"),
            &[("at", self.params.at.to_string())],
        )
    }

    fn schemas(&self) -> &SchemaSet {
        &self.schemas
    }

    fn apply(&mut self, _name: &str, args: &[Value]) -> String {
        self.state.rotate(args.first().and_then(Value::as_f64).unwrap_or(0.0));
        EXECUTED.to_string()
    }

    fn is_solved(&self) -> bool {
        self.state.is_solved()
    }

    fn render(&self) -> Canvas {
        self.composite(self.state.residual)
    }

    fn goal_render(&self) -> Option<Canvas> {
        Some(self.composite(0.0))
    }

    fn canonical_state(&self) -> String {
        format!("mental_rotation_2d;source={};residual={:.6};at={}", self.source, self.state.residual, self.state.at)
    }

    fn solve(&self, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
        crate::solvers::image::solve_mr2d(self, opts)
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
    use crate::envs::image::assets::synth_test_card;

    fn env(seed: u64) -> Mr2dEnv {
        let asset = ImageAsset { source: "t".into(), pixels: Arc::new(synth_test_card(seed)) };
        Mr2dEnv::generate(Mr2dParams { at: 10.0 }, asset, seed)
    }

    #[test]
    fn residual_range_and_inversion() {
        for seed in 0..30 {
            let mut e = env(seed);
            let r = e.state().residual;
            assert!(r > -180.0 && r <= 180.0 && r.abs() >= 20.0);
            e.apply("rotate", &[Value::Real(-r)]);
            assert!(e.is_solved());
        }
    }

    #[test]
    fn two_rotations_add() {
        let mut s = Mr2dState { residual: 170.0, at: 5.0 };
        s.rotate(20.0);
        assert!((s.residual + 170.0).abs() < 1e-9);
        s.rotate(100.0);
        s.rotate(70.0);
        assert!(s.is_solved());
    }

    #[test]
    fn upright_panels_match() {
        let mut e = env(1);
        e.state.residual = 0.0;
        let img = e.render();
        let w = PANEL_PX;
        let y = crate::render::HEADER_PX;
        assert_eq!(img.crop(0, y, w, w), img.crop(w + PANEL_GAP, y, w, w));
    }
}
