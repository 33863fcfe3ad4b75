//! Colorization: undo an unknown hue rotation and saturation shift.

use std::any::Any;
use std::sync::Arc;

use rand::Rng;

use super::assets::ImageAsset;
use crate::actions::{ArgSpec, PayloadSchema, SchemaSet, Value};
use crate::envs::{fill_template, EnvKind, Environment, EXECUTED};
use crate::params::{out_of_range, ConfigError, Difficulty, ParamMap, ParamReader};
use crate::render::{Canvas, Rgb};
use crate::solvers::{SolveError, SolverOptions, SolverPlan};

/// Saturation offsets are clamped to this many percentage points.
pub const SAT_LIMIT: f64 = 100.0;
/// Largest initial saturation offset magnitude.
pub const SAT_INIT_MAX: f64 = 60.0;

/// Wraps degrees into [-180, 180).
pub fn wrap_hue(h: f64) -> f64 {
    let w = (h + 180.0).rem_euclid(360.0) - 180.0;
    if w >= 180.0 {
        -180.0
    } else {
        w
    }
}

pub fn rgb_to_hsv(c: Rgb) -> (f64, f64, f64) {
    let [r, g, b] = c.0.map(|x| f64::from(x) / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let h = if d == 0.0 {
        0.0
    } else if max == r {
        let t = (g - b) / d;
        60.0 * if t < 0.0 { t + 6.0 } else { t }
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { d / max };
    (h, s, max)
}

pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> Rgb {
    let mut h = h;
    if !(0.0..360.0).contains(&h) {
        h = h.rem_euclid(360.0);
    }
    let h = h / 60.0;
    let sector = h as u32;
    let f = h - f64::from(sector);
    let c = v * s;
    let x = c * if sector.is_multiple_of(2) { f } else { 1.0 - f };
    let (r, g, b) = match sector {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let q = |u: f64| ((u + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    Rgb::new(q(r), q(g), q(b))
}

/// Per-pixel HSV of an image, computed once and reused by every render.
#[derive(Debug, Clone)]
pub struct HsvImage {
    width: u32,
    height: u32,
    hsv: Vec<[f64; 3]>,
}

impl HsvImage {
    pub fn new(src: &Canvas) -> Self {
        let hsv = src
            .pixels()
            .chunks_exact(3)
            .map(|px| {
                let (h, s, v) = rgb_to_hsv(Rgb::new(px[0], px[1], px[2]));
                [h, s, v]
            })
            .collect();
        Self { width: src.width(), height: src.height(), hsv }
    }

    /// Hue rotated by `hue` degrees, saturation shifted by `sat` percentage
    /// points and clamped per pixel to [0, 100].
    pub fn shifted(&self, hue: f64, sat: f64) -> Canvas {
        let mut out = Vec::with_capacity(self.hsv.len() * 3);
        for &[h, s, v] in &self.hsv {
            let s2 = (s + sat / 100.0).clamp(0.0, 1.0);
            out.extend_from_slice(&hsv_to_rgb(h + hue, s2, v).0);
        }
        Canvas::from_raw(self.width, self.height, out).expect("same size")
    }
}

/// One-off form of [`HsvImage::shifted`].
pub fn recolor(src: &Canvas, hue: f64, sat: f64) -> Canvas {
    if hue.rem_euclid(360.0) == 0.0 && sat == 0.0 {
        return src.clone();
    }
    HsvImage::new(src).shifted(hue, sat)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorState {
    /// Degrees in [-180, 180).
    pub hue_offset: f64,
    /// Percentage points in [-100, 100].
    pub sat_offset: f64,
    pub ar: f64,
}

impl ColorState {
    pub fn rotate(&mut self, theta: f64) {
        self.hue_offset = wrap_hue(self.hue_offset + theta);
    }

    pub fn saturate(&mut self, delta: f64) {
        self.sat_offset = (self.sat_offset + delta).clamp(-SAT_LIMIT, SAT_LIMIT);
    }

    pub fn is_solved(&self) -> bool {
        self.hue_offset.abs() <= self.ar && self.sat_offset.abs() <= self.ar
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorParams {
    pub ar: f64,
}

impl ColorParams {
    pub fn resolve(difficulty: Difficulty, overrides: &ParamMap) -> Result<Self, ConfigError> {
        let r = ParamReader::new("colorization", overrides, &["ar"])?;
        let ar = r.float("ar", difficulty.pick(11.0, 16.0))?;
        if !(ar > 0.0 && ar <= 40.0) {
            return Err(out_of_range("ar", ar, "0 < ar <= 40"));
        }
        Ok(Self { ar })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("ar".into(), self.ar.into());
        m
    }
}

/// Magnitude uniform in `[lo, hi]` with a random sign.
pub(crate) fn signed_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let m = if lo < hi { rng.gen_range(lo..=hi) } else { hi };
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

#[derive(Debug, Clone)]
pub struct ColorEnv {
    params: ColorParams,
    source: String,
    image: Arc<Canvas>,
    hsv: Arc<HsvImage>,
    state: ColorState,
    schemas: SchemaSet,
}

impl ColorEnv {
    pub fn generate(params: ColorParams, asset: ImageAsset, seed: u64) -> Self {
        let mut rng = crate::rng::stream(seed, "colorization/generate");
        let mut h0 = signed_uniform(&mut rng, params.ar + 10.0, 180.0);
        if h0 == 180.0 {
            h0 = -180.0;
        }
        let s0 = signed_uniform(&mut rng, params.ar + 10.0, SAT_INIT_MAX);
        let state = ColorState { hue_offset: h0, sat_offset: s0, ar: params.ar };
        Self::from_state(params, asset, state)
    }

    pub fn from_state(params: ColorParams, asset: ImageAsset, state: ColorState) -> Self {
        let schemas = SchemaSet::new(vec![
            PayloadSchema::new(
                "rotate",
                vec![ArgSpec::real("hue degrees", -360.0, 360.0)],
                "rotate(theta)",
                "rotate every pixel's hue by theta degrees",
            ),
            PayloadSchema::new(
                "saturate",
                vec![ArgSpec::real("saturation points", -100.0, 100.0)],
                "saturate(delta)",
                "add delta percentage points of saturation",
            ),
        ]);
        let hsv = Arc::new(HsvImage::new(&asset.pixels));
        Self { params, source: asset.source, image: asset.pixels, hsv, state, schemas }
    }

    pub fn state(&self) -> &ColorState {
        &self.state
    }
}

impl Environment for ColorEnv {
    fn kind(&self) -> EnvKind {
        EnvKind::Colorization
    }

    fn params(&self) -> ParamMap {
        self.params.to_map()
    }

    fn task_text(&self) -> String {
        fill_template(
            include_str!("../../../resources/instructions/colorization.txt"),
            &[("ar", self.params.ar.to_string())],
        )
    }

    fn schemas(&self) -> &SchemaSet {
        &self.schemas
    }

    fn apply(&mut self, name: &str, args: &[Value]) -> String {
        let x = args.first().and_then(Value::as_f64).unwrap_or(0.0);
        match name {
            "rotate" => self.state.rotate(x),
            "saturate" => self.state.saturate(x),
            _ => return "unsupported action".to_string(),
        }
        EXECUTED.to_string()
    }

    fn is_solved(&self) -> bool {
        self.state.is_solved()
    }

    fn render(&self) -> Canvas {
        if self.state.hue_offset == 0.0 && self.state.sat_offset == 0.0 {
            return self.image.as_ref().clone();
        }
        self.hsv.shifted(self.state.hue_offset, self.state.sat_offset)
    }

    fn goal_render(&self) -> Option<Canvas> {
        Some(self.image.as_ref().clone())
    }

    fn canonical_state(&self) -> String {
        format!(
            "colorization;source={};hue={:.6};sat={:.6};ar={}",
            self.source, self.state.hue_offset, self.state.sat_offset, self.state.ar
        )
    }

    fn solve(&self, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
        crate::solvers::image::solve_colorize(self, opts)
    }

    fn clone_box(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}
