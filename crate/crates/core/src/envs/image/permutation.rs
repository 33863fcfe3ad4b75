//! Permutation puzzles over image tiles: Jigsaw, Zoom-In and Video
//! Unshuffle share state, actions and rendering.

use std::any::Any;
use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::assets::ImageAsset;
use crate::actions::{ArgSpec, PayloadSchema, SchemaSet, Value};
use crate::envs::{fill_template, EnvKind, Environment, EXECUTED};
use crate::params::{out_of_range, ConfigError, Difficulty, ParamMap, ParamReader};
use crate::render::{compose_side_by_side, Blit, Canvas, IMAGE_PX};
use crate::solvers::{SolveError, SolverOptions, SolverPlan};

pub const NOT_A_PERMUTATION: &str = "payload is not a permutation";
/// Side of a Zoom-In or Video tile.
pub const TILE_PX: u32 = 128;
pub const ROW_GAP: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PermState {
    pub items: Vec<Arc<Canvas>>,
    /// `perm[i]` is the item shown in slot `i`.
    pub perm: Vec<usize>,
    pub goal: Vec<usize>,
    /// Jigsaw grid shape; `None` for a labelled row.
    pub grid: Option<(usize, usize)>,
    /// Digest of the item pixels, for state hashing.
    pub content: String,
}

impl PermState {
    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn is_solved(&self) -> bool {
        self.perm == self.goal
    }

    pub fn swap(&mut self, i: usize, j: usize) {
        self.perm.swap(i, j);
    }

    /// Slot `i` receives what slot `p[i]` held.
    pub fn reorder(&mut self, p: &[usize]) -> Result<(), &'static str> {
        if !is_permutation(p, self.len()) {
            return Err(NOT_A_PERMUTATION);
        }
        self.perm = p.iter().map(|&k| self.perm[k]).collect();
        Ok(())
    }

    pub fn render_with(&self, perm: &[usize]) -> Canvas {
        match self.grid {
            Some((nr, nc)) => {
                let mut out = Canvas::new(IMAGE_PX, IMAGE_PX, crate::render::BACKGROUND);
                for (slot, &item) in perm.iter().enumerate() {
                    let (x0, y0, w, h) = tile_rect(slot / nc, slot % nc, nr, nc);
                    out.blit(
                        &self.items[item],
                        i64::from(x0),
                        i64::from(y0),
                        Blit { size: Some((w, h)), ..Blit::default() },
                    );
                }
                out
            }
            None => {
                let tiles: Vec<&Canvas> = perm.iter().map(|&k| self.items[k].as_ref()).collect();
                let labels: Vec<String> = (0..perm.len()).map(|i| i.to_string()).collect();
                let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
                compose_side_by_side(&tiles, &labels, ROW_GAP).expect("tiles share a height")
            }
        }
    }

    pub fn canonical(&self, kind: EnvKind) -> String {
        let p: Vec<String> = self.perm.iter().map(|x| x.to_string()).collect();
        format!("{};content={};perm={}", kind.id(), self.content, p.join(","))
    }
}

pub fn is_permutation(p: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    p.len() == n && p.iter().all(|&k| k < n && !std::mem::replace(&mut seen[k], true))
}

/// Pixel rectangle of jigsaw cell `(r, c)`.
pub fn tile_rect(r: usize, c: usize, nr: usize, nc: usize) -> (u32, u32, u32, u32) {
    let edge = |i: usize, n: usize| (i as u32 * IMAGE_PX) / n as u32;
    let (x0, x1) = (edge(c, nc), edge(c + 1, nc));
    let (y0, y1) = (edge(r, nr), edge(r + 1, nr));
    (x0, y0, x1 - x0, y1 - y0)
}

fn digest(items: &[Arc<Canvas>], source: &str) -> String {
    let mut bytes = source.as_bytes().to_vec();
    for it in items {
        bytes.extend_from_slice(it.pixels());
    }
    crate::rng::digest_hex(&bytes)[..16].to_string()
}

fn shuffled(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let identity: Vec<usize> = (0..n).collect();
    loop {
        let mut p = identity.clone();
        p.shuffle(rng);
        if p != identity {
            return p;
        }
    }
}

fn new_state(items: Vec<Arc<Canvas>>, grid: Option<(usize, usize)>, source: &str, rng: &mut impl Rng) -> PermState {
    let n = items.len();
    let content = digest(&items, source);
    PermState { items, perm: shuffled(n, rng), goal: (0..n).collect(), grid, content }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JigsawParams {
    pub nr: usize,
    pub nc: usize,
}

impl JigsawParams {
    pub fn resolve(difficulty: Difficulty, overrides: &ParamMap) -> Result<Self, ConfigError> {
        let r = ParamReader::new("jigsaw", overrides, &["nr", "nc"])?;
        let nr = r.int("nr", difficulty.pick(2, 3))?;
        let nc = r.int("nc", difficulty.pick(2, 3))?;
        for (k, v) in [("nr", nr), ("nc", nc)] {
            if !(1..=8).contains(&v) {
                return Err(out_of_range(k, v, "1..=8"));
            }
        }
        if nr * nc < 2 {
            return Err(out_of_range("nr*nc", nr * nc, "at least 2 tiles"));
        }
        Ok(Self { nr: nr as usize, nc: nc as usize })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("nr".into(), self.nr.into());
        m.insert("nc".into(), self.nc.into());
        m
    }
}

pub fn jigsaw_make(asset: &ImageAsset, p: &JigsawParams, rng: &mut impl Rng) -> PermState {
    let items = (0..p.nr * p.nc)
        .map(|k| {
            let (x, y, w, h) = tile_rect(k / p.nc, k % p.nc, p.nr, p.nc);
            Arc::new(asset.pixels.crop(x, y, w, h))
        })
        .collect();
    new_state(items, Some((p.nr, p.nc)), &asset.source, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoomParams {
    pub zv: usize,
    pub zg: f64,
    pub zs: f64,
    pub mz: f64,
    pub nest: bool,
}

/// Largest zoom factor allowed (crops of 7 px on the working image).
pub const MAX_ZOOM: f64 = 64.0;

impl ZoomParams {
    pub fn resolve(difficulty: Difficulty, overrides: &ParamMap) -> Result<Self, ConfigError> {
        let r = ParamReader::new("zoom_in", overrides, &["zv", "zg", "zs", "mz", "nest"])?;
        let zv = r.int("zv", difficulty.pick(4, 5))?;
        let zg = r.float("zg", 1.5)?;
        let zs = r.float("zs", 0.3)?;
        let mz = r.float("mz", 1.0)?;
        let nest = r.boolean("nest", true)?;
        if !(2..=8).contains(&zv) {
            return Err(out_of_range("zv", zv, "2..=8"));
        }
        if !(zg > 1.0 && zg <= 4.0) {
            return Err(out_of_range("zg", zg, "1 < zg <= 4"));
        }
        if !(0.0..=2.0).contains(&zs) {
            return Err(out_of_range("zs", zs, "0..=2"));
        }
        if !(1.0..=4.0).contains(&mz) {
            return Err(out_of_range("mz", mz, "1..=4"));
        }
        let deepest = mz * (zg + zs).powi(zv as i32 - 1);
        if deepest > MAX_ZOOM {
            return Err(out_of_range("zv", zv, &format!("deepest zoom {deepest:.1} must stay <= {MAX_ZOOM}")));
        }
        Ok(Self { zv: zv as usize, zg, zs, mz, nest })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("zv".into(), self.zv.into());
        m.insert("zg".into(), self.zg.into());
        m.insert("zs".into(), self.zs.into());
        m.insert("mz".into(), self.mz.into());
        m.insert("nest".into(), self.nest.into());
        m
    }
}

/// Crop rectangle `(x, y, side)` of a view.
pub type CropRect = (f64, f64, f64);

/// Zoom factors `1 = z_0 < z_1 < ...`, with `z_k = mz * prod(zg + U(0, zs))`.
pub fn zoom_factors(p: &ZoomParams, rng: &mut impl Rng) -> Vec<f64> {
    let mut z = vec![1.0];
    let mut acc = p.mz;
    for _ in 1..p.zv {
        acc *= p.zg + if p.zs > 0.0 { rng.gen_range(0.0..p.zs) } else { 0.0 };
        z.push(acc);
    }
    z
}

pub fn zoom_rects(p: &ZoomParams, rng: &mut impl Rng) -> Vec<CropRect> {
    let full = f64::from(IMAGE_PX);
    let mut rects: Vec<CropRect> = Vec::new();
    for z in zoom_factors(p, rng) {
        let side = full / z;
        let (bx, by, bs) = match (p.nest, rects.last()) {
            (true, Some(&prev)) => prev,
            _ => (0.0, 0.0, full),
        };
        // Centred in the bounding square, jittered by up to half the slack.
        let slack = bs - side;
        let jx = rng.gen_range(-0.5..=0.5) * slack;
        let jy = rng.gen_range(-0.5..=0.5) * slack;
        rects.push((bx + slack / 2.0 + jx, by + slack / 2.0 + jy, side));
    }
    rects
}

pub fn zoom_make(asset: &ImageAsset, p: &ZoomParams, rng: &mut impl Rng) -> (PermState, Vec<CropRect>) {
    let rects = zoom_rects(p, rng);
    let items = rects.iter().map(|&(x, y, s)| Arc::new(asset.pixels.resample(x, y, s, s, TILE_PX, TILE_PX))).collect();
    (new_state(items, None, &asset.source, rng), rects)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Evenly spaced over a random window covering at least 60% of the clip.
    Uniform,
    /// Sorted random sample.
    Random,
}

impl Sampling {
    pub fn name(self) -> &'static str {
        match self {
            Sampling::Uniform => "uniform",
            Sampling::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoParams {
    pub nf: usize,
    pub ss: Sampling,
    pub mfd: f64,
}

impl VideoParams {
    pub fn resolve(difficulty: Difficulty, overrides: &ParamMap) -> Result<Self, ConfigError> {
        let r = ParamReader::new("video_unshuffle", overrides, &["nf", "ss", "mfd"])?;
        let nf = r.int("nf", difficulty.pick(4, 5))?;
        let ss = match r.string("ss", "uniform")?.as_str() {
            "uniform" => Sampling::Uniform,
            "random" => Sampling::Random,
            other => return Err(out_of_range("ss", other, "uniform or random")),
        };
        let mfd = r.float("mfd", 5.0)?;
        if !(2..=12).contains(&nf) {
            return Err(out_of_range("nf", nf, "2..=12"));
        }
        if !(0.0..=255.0).contains(&mfd) {
            return Err(out_of_range("mfd", mfd, "0..=255"));
        }
        Ok(Self { nf: nf as usize, ss, mfd })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("nf".into(), self.nf.into());
        m.insert("ss".into(), self.ss.name().into());
        m.insert("mfd".into(), self.mfd.into());
        m
    }
}

const VIDEO_TRIES: usize = 200;

/// Chronological frame indices meeting the consecutive-difference floor.
pub fn select_frames(frames: &[Arc<Canvas>], p: &VideoParams, rng: &mut impl Rng) -> Result<Vec<usize>, ConfigError> {
    let total = frames.len();
    if total < p.nf {
        return Err(ConfigError::Generation(format!("need {} frames, found {total}", p.nf)));
    }
    let ok =
        |idx: &[usize]| idx.windows(2).all(|w| frames[w[0]].mean_abs_diff(&frames[w[1]]).is_some_and(|d| d >= p.mfd));
    for _ in 0..VIDEO_TRIES {
        let idx: Vec<usize> = match p.ss {
            Sampling::Uniform => {
                let min_span = ((total as f64 * 0.6).ceil() as usize).max(p.nf).min(total);
                let span = rng.gen_range(min_span..=total);
                let start = rng.gen_range(0..=total - span);
                let mut v: Vec<usize> =
                    (0..p.nf).map(|k| start + (k * (span - 1) + (p.nf - 1) / 2) / (p.nf - 1)).collect();
                v.dedup();
                v
            }
            Sampling::Random => {
                let mut v = index::sample(rng, total, p.nf).into_vec();
                v.sort_unstable();
                v
            }
        };
        if idx.len() == p.nf && ok(&idx) {
            return Ok(idx);
        }
    }
    Err(ConfigError::Generation(format!("no frame selection meets mfd = {}", p.mfd)))
}

pub fn video_make(
    source: &str,
    frames: &[Arc<Canvas>],
    p: &VideoParams,
    rng: &mut impl Rng,
) -> Result<PermState, ConfigError> {
    let idx = select_frames(frames, p, rng)?;
    let items = idx
        .iter()
        .map(|&i| {
            let f = &frames[i];
            Arc::new(f.resample(0.0, 0.0, f64::from(f.width()), f64::from(f.height()), TILE_PX, TILE_PX))
        })
        .collect();
    Ok(new_state(items, None, source, rng))
}

#[derive(Debug, Clone)]
pub struct PermEnv {
    kind: EnvKind,
    params: ParamMap,
    state: PermState,
    schemas: SchemaSet,
}

impl PermEnv {
    pub fn new(kind: EnvKind, params: ParamMap, state: PermState) -> Self {
        let n = state.len() as i64;
        let swap = match state.grid {
            Some((nr, nc)) => {
                let cell = vec![(0, nr as i64 - 1), (0, nc as i64 - 1)];
                PayloadSchema::new(
                    "swap",
                    vec![ArgSpec::int_list("first cell", cell.clone()), ArgSpec::int_list("second cell", cell)],
                    "swap((r1, c1), (r2, c2))",
                    "exchange the tiles at two grid cells",
                )
            }
            None => PayloadSchema::new(
                "swap",
                vec![ArgSpec::int("first slot", 0, n - 1), ArgSpec::int("second slot", 0, n - 1)],
                "swap(i, j)",
                "exchange the images in slots i and j",
            ),
        };
        let reorder = PayloadSchema::new(
            "reorder",
            vec![ArgSpec::int_list("permutation", vec![(0, n - 1); n as usize])],
            "reorder([p0, p1, ...])",
            "rearrange all slots at once: slot i receives what slot p[i] currently holds",
        );
        Self { kind, params, state, schemas: SchemaSet::new(vec![swap, reorder]) }
    }

    pub fn state(&self) -> &PermState {
        &self.state
    }

    fn slot(&self, v: &Value) -> usize {
        match (self.state.grid, v.as_list()) {
            (Some((_, nc)), Some(rc)) => {
                let r = rc.first().and_then(Value::as_i64).unwrap_or(0) as usize;
                let c = rc.get(1).and_then(Value::as_i64).unwrap_or(0) as usize;
                r * nc + c
            }
            _ => v.as_i64().unwrap_or(0) as usize,
        }
    }
}

impl Environment for PermEnv {
    fn kind(&self) -> EnvKind {
        self.kind
    }

    fn params(&self) -> ParamMap {
        self.params.clone()
    }

    fn task_text(&self) -> String {
        let n = self.state.len();
        match self.kind {
            EnvKind::Jigsaw => {
                let (nr, nc) = self.state.grid.expect("jigsaw grid");
                fill_template(
                    include_str!("../../../resources/instructions/jigsaw.txt"),
                    &[
                        ("nr", nr.to_string()),
                        ("nc", nc.to_string()),
                        ("max_r", (nr - 1).to_string()),
                        ("max_c", (nc - 1).to_string()),
                        ("n", n.to_string()),
                    ],
                )
            }
            EnvKind::ZoomIn => fill_template(
                include_str!("../../../resources/instructions/zoom_in.txt"),
                &[("n", n.to_string()), ("max", (n - 1).to_string())],
            ),
            _ => fill_template(
                include_str!("../../../resources/instructions/video_unshuffle.txt"),
                &[("n", n.to_string()), ("max", (n - 1).to_string())],
            ),
        }
    }

    fn schemas(&self) -> &SchemaSet {
        &self.schemas
    }

    fn apply(&mut self, name: &str, args: &[Value]) -> String {
        match name {
            "swap" if args.len() == 2 => {
                let (i, j) = (self.slot(&args[0]), self.slot(&args[1]));
                self.state.swap(i, j);
                EXECUTED.to_string()
            }
            "reorder" => {
                let p: Vec<usize> = args
                    .first()
                    .and_then(Value::as_list)
                    .map(|l| l.iter().map(|v| v.as_i64().unwrap_or(-1).max(0) as usize).collect())
                    .unwrap_or_default();
                match self.state.reorder(&p) {
                    Ok(()) => EXECUTED.to_string(),
                    Err(e) => e.to_string(),
                }
            }
            _ => "unsupported action".to_string(),
        }
    }

    fn is_solved(&self) -> bool {
        self.state.is_solved()
    }

    fn render(&self) -> Canvas {
        self.state.render_with(&self.state.perm)
    }

    fn goal_render(&self) -> Option<Canvas> {
        Some(self.state.render_with(&self.state.goal))
    }

    fn canonical_state(&self) -> String {
        self.state.canonical(self.kind)
    }

    fn solve(&self, opts: &SolverOptions) -> Result<SolverPlan, SolveError> {
        crate::solvers::image::solve_permutation(self, opts)
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
    use crate::envs::image::assets::{synth_test_card, synth_video};

    fn card() -> ImageAsset {
        ImageAsset { source: "synthetic:card:1".into(), pixels: Arc::new(synth_test_card(1)) }
    }

    #[test]
    fn jigsaw_identity_is_original() {
        let mut rng = crate::rng::stream(1, "t");
        let s = jigsaw_make(&card(), &JigsawParams { nr: 3, nc: 3 }, &mut rng);
        assert_eq!(s.len(), 9);
        assert!(!s.is_solved());
        assert_eq!(&s.render_with(&s.goal), card().pixels.as_ref());
    }

    #[test]
    fn reorder_semantics() {
        let mut rng = crate::rng::stream(2, "t");
        let mut s = jigsaw_make(&card(), &JigsawParams { nr: 2, nc: 2 }, &mut rng);
        s.perm = vec![2, 0, 3, 1];
        s.reorder(&[1, 3, 0, 2]).unwrap();
        assert_eq!(s.perm, vec![0, 1, 2, 3]);
        assert_eq!(s.reorder(&[0, 0, 1, 2]), Err(NOT_A_PERMUTATION));
        assert_eq!(s.perm, vec![0, 1, 2, 3]);
    }

    #[test]
    fn zoom_crops_nest_and_grow() {
        let p = ZoomParams { zv: 5, zg: 1.5, zs: 0.3, mz: 1.0, nest: true };
        for seed in 0..20 {
            let mut rng = crate::rng::stream(seed, "t");
            let z = zoom_factors(&p, &mut rng);
            assert_eq!(z[0], 1.0);
            assert!(z.windows(2).all(|w| w[1] > w[0]));
            let rects = zoom_rects(&p, &mut rng);
            for w in rects.windows(2) {
                let ((ax, ay, a), (bx, by, b)) = (w[0], w[1]);
                assert!(bx >= ax - 1e-9 && by >= ay - 1e-9);
                assert!(bx + b <= ax + a + 1e-9 && by + b <= ay + a + 1e-9);
            }
        }
    }

    #[test]
    fn synthetic_video_meets_default_floor() {
        let frames: Vec<Arc<Canvas>> = synth_video(4).into_iter().map(Arc::new).collect();
        for ss in [Sampling::Uniform, Sampling::Random] {
            for nf in [4, 5] {
                let p = VideoParams { nf, ss, mfd: 5.0 };
                let mut rng = crate::rng::stream(nf as u64, "t");
                let idx = select_frames(&frames, &p, &mut rng).unwrap();
                assert!(idx.windows(2).all(|w| w[0] < w[1]));
                for w in idx.windows(2) {
                    assert!(frames[w[0]].mean_abs_diff(&frames[w[1]]).unwrap() >= 5.0);
                }
            }
        }
        let p = VideoParams { nf: 4, ss: Sampling::Uniform, mfd: 200.0 };
        assert!(select_frames(&frames, &p, &mut crate::rng::stream(0, "t")).is_err());
    }

    #[test]
    fn row_labels_follow_slots() {
        let mut rng = crate::rng::stream(3, "t");
        let frames: Vec<Arc<Canvas>> = synth_video(3).into_iter().map(Arc::new).collect();
        let s = video_make("v", &frames, &VideoParams { nf: 4, ss: Sampling::Uniform, mfd: 5.0 }, &mut rng).unwrap();
        let img = s.render_with(&s.perm);
        assert_eq!(img.width(), 4 * TILE_PX + 3 * ROW_GAP);
        // labels are the same whatever the arrangement
        let other = s.render_with(&s.goal);
        assert_eq!(img.crop(0, 0, img.width(), 12), other.crop(0, 0, other.width(), 12));
    }
}
