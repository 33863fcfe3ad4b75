//! Image sources: a user directory of stills and `frame_%04d.png`
//! sequences, or seeded synthetic test cards.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::params::ConfigError;
use crate::render::{decode_image, Canvas, Rgb, IMAGE_PX};

/// Environment variable naming the default asset directory.
pub const ASSETS_ENV: &str = "VISGYM_ASSETS";

/// Length of the synthetic frame sequence.
pub const SYNTH_FRAMES: usize = 24;

/// A decoded still at working resolution.
#[derive(Debug, Clone)]
pub struct ImageAsset {
    /// File path or synthetic descriptor.
    pub source: String,
    pub pixels: Arc<Canvas>,
}

/// Read-only asset catalogue, cheap to clone and share across episodes.
#[derive(Debug, Clone, Default)]
pub struct AssetStore {
    images: Vec<PathBuf>,
    frames: Vec<PathBuf>,
}

fn is_frame_name(name: &str) -> bool {
    name.strip_prefix("frame_")
        .and_then(|rest| rest.strip_suffix(".png"))
        .is_some_and(|digits| digits.len() == 4 && digits.bytes().all(|b| b.is_ascii_digit()))
}

impl AssetStore {
    /// Synthetic sources only.
    pub fn synthetic() -> Self {
        Self::default()
    }

    /// Scans `dir` for `.png`/`.jpg`/`.jpeg` stills and `frame_%04d.png`
    /// frames. Files are decoded when an episode first uses them.
    pub fn from_dir(dir: &Path) -> Result<Self, ConfigError> {
        let entries = fs::read_dir(dir).map_err(|e| ConfigError::Asset(format!("{}: {e}", dir.display())))?;
        let mut store = Self::default();
        for entry in entries {
            let path = entry.map_err(|e| ConfigError::Asset(e.to_string()))?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()).map(str::to_ascii_lowercase) else {
                continue;
            };
            if is_frame_name(&name) {
                store.frames.push(path);
            } else if name.ends_with(".png") || name.ends_with(".jpg") || name.ends_with(".jpeg") {
                store.images.push(path);
            }
        }
        store.images.sort();
        store.frames.sort();
        Ok(store)
    }

    /// `from_dir` on `$VISGYM_ASSETS` when set, otherwise synthetic.
    pub fn from_env() -> Result<Self, ConfigError> {
        match std::env::var_os(ASSETS_ENV) {
            Some(dir) if !dir.is_empty() => Self::from_dir(Path::new(&dir)),
            _ => Ok(Self::synthetic()),
        }
    }

    pub fn image_count(&self) -> usize {
        self.images.len()
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// The still used for an episode: a seeded pick from the directory, or
    /// a synthetic card.
    pub fn image(&self, seed: u64) -> Result<ImageAsset, ConfigError> {
        if self.images.is_empty() {
            return Ok(ImageAsset {
                source: format!("synthetic:card:{seed}"),
                pixels: Arc::new(synth_test_card(seed)),
            });
        }
        let mut rng = crate::rng::stream(seed, "assets/pick");
        let path = self.images.choose(&mut rng).expect("nonempty");
        Ok(ImageAsset { source: path.display().to_string(), pixels: Arc::new(load(path)?) })
    }

    /// Frame sequence for an episode, in chronological order.
    pub fn frames(&self, seed: u64) -> Result<(String, Vec<Arc<Canvas>>), ConfigError> {
        if self.frames.is_empty() {
            let frames = synth_video(seed).into_iter().map(Arc::new).collect();
            return Ok((format!("synthetic:video:{seed}"), frames));
        }
        let frames = self.frames.iter().map(|p| load(p).map(Arc::new)).collect::<Result<Vec<_>, _>>()?;
        let dir = self.frames[0].parent().map(|p| p.display().to_string()).unwrap_or_default();
        Ok((format!("{dir}/frame_*.png"), frames))
    }
}

fn load(path: &Path) -> Result<Canvas, ConfigError> {
    let bytes = fs::read(path).map_err(|e| ConfigError::Asset(format!("{}: {e}", path.display())))?;
    let canvas = decode_image(&bytes).map_err(|e| ConfigError::Asset(format!("{}: {e}", path.display())))?;
    Ok(to_working(&canvas))
}

/// Centre-crop to a square, then scale to the working resolution.
pub fn to_working(canvas: &Canvas) -> Canvas {
    let (w, h) = (f64::from(canvas.width()), f64::from(canvas.height()));
    let side = w.min(h);
    canvas.resample((w - side) / 2.0, (h - side) / 2.0, side, side, IMAGE_PX, IMAGE_PX)
}

fn random_color(rng: &mut impl Rng) -> Rgb {
    Rgb::new(rng.gen_range(20..=235), rng.gen_range(20..=235), rng.gen_range(20..=235))
}

fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    let m = |x: u8, y: u8| (f64::from(x) + (f64::from(y) - f64::from(x)) * t).round() as u8;
    Rgb::new(m(a.0[0], b.0[0]), m(a.0[1], b.0[1]), m(a.0[2], b.0[2]))
}

/// A seeded 448x448 card: diagonal gradient, one digit per ninth of the
/// frame, and 6-10 coloured shapes.
pub fn synth_test_card(seed: u64) -> Canvas {
    let mut rng = crate::rng::stream(seed, "assets/card");
    let n = IMAGE_PX;
    let (c0, c1) = (random_color(&mut rng), random_color(&mut rng));
    let mut card = Canvas::new(n, n, c0);
    for y in 0..n {
        for x in 0..n {
            let t = f64::from(x + 2 * y) / f64::from(3 * n);
            card.put(i64::from(x), i64::from(y), lerp(c0, c1, t));
        }
    }
    let shapes = rng.gen_range(6..=10);
    for _ in 0..shapes {
        let color = random_color(&mut rng);
        let (cx, cy) = (rng.gen_range(0.0..f64::from(n)), rng.gen_range(0.0..f64::from(n)));
        let r = rng.gen_range(20.0..70.0);
        match rng.gen_range(0..3) {
            0 => card.fill_circle(cx, cy, r, color),
            1 => card.fill_rect((cx - r) as i64, (cy - r * 0.6) as i64, (2.0 * r) as i64, (1.2 * r) as i64, color),
            _ => {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let pts: Vec<(f64, f64)> = (0..3)
                    .map(|k| {
                        let t = a + f64::from(k) * 2.1 + if k == 2 { 0.5 } else { 0.0 };
                        (cx + r * t.cos(), cy + r * t.sin())
                    })
                    .collect();
                card.fill_convex(&pts, color);
            }
        }
    }
    let mut digits: Vec<u8> = (1..=9).collect();
    digits.shuffle(&mut rng);
    let cell = n / 3;
    for (i, d) in digits.iter().enumerate() {
        let (r, c) = (i as u32 / 3, i as u32 % 3);
        let x = c * cell + rng.gen_range(10..cell - 50);
        let y = r * cell + rng.gen_range(10..cell - 60);
        let ink = if rng.gen_bool(0.5) { Rgb::BLACK } else { Rgb::WHITE };
        card.text(i64::from(x), i64::from(y), &d.to_string(), 6, ink);
    }
    // Upright marker: an asymmetric flag in the top-left ninth.
    card.fill_rect(14, 14, 8, 60, Rgb::BLACK);
    card.fill_convex(&[(22.0, 14.0), (58.0, 26.0), (22.0, 38.0)], Rgb::new(220, 30, 30));
    card
}

/// A seeded sequence of [`SYNTH_FRAMES`] frames: a static card with a large
/// square sliding across it and a brightening band.
pub fn synth_video(seed: u64) -> Vec<Canvas> {
    let base = synth_test_card(seed);
    let mut rng = crate::rng::stream(seed, "assets/video");
    let color = random_color(&mut rng);
    let (x0, y0) = (rng.gen_range(0.0..80.0), rng.gen_range(0.0..320.0));
    let (x1, y1) = (rng.gen_range(260.0..336.0), rng.gen_range(0.0..320.0));
    (0..SYNTH_FRAMES)
        .map(|k| {
            let t = k as f64 / (SYNTH_FRAMES - 1) as f64;
            let mut f = base.clone();
            let band = (t * f64::from(IMAGE_PX - 40)) as i64;
            f.fill_rect(0, band, i64::from(IMAGE_PX), 40, Rgb::new(250, 250, 210));
            f.fill_rect((x0 + (x1 - x0) * t) as i64, (y0 + (y1 - y0) * t) as i64, 112, 112, color);
            f
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cards_are_deterministic_and_distinct() {
        assert_eq!(synth_test_card(3), synth_test_card(3));
        assert!(synth_test_card(3).mean_abs_diff(&synth_test_card(4)).unwrap() > 5.0);
    }

    #[test]
    fn card_is_not_rotation_symmetric() {
        let card = synth_test_card(11);
        let mut turned = Canvas::new(IMAGE_PX, IMAGE_PX, Rgb::BLACK);
        turned.blit(&card, 0, 0, crate::render::Blit { rotation_deg: 90.0, ..Default::default() });
        assert!(card.mean_abs_diff(&turned).unwrap() > 10.0);
    }

    #[test]
    fn frame_names() {
        assert!(is_frame_name("frame_0001.png"));
        assert!(!is_frame_name("frame_1.png"));
        assert!(!is_frame_name("frame_0001.jpg"));
    }

    #[test]
    fn directory_loading_crops_to_square() {
        let dir = tempfile::tempdir().unwrap();
        let wide = Canvas::new(300, 100, Rgb::new(10, 200, 30));
        fs::write(dir.path().join("a.png"), crate::render::encode_png(&wide)).unwrap();
        fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let store = AssetStore::from_dir(dir.path()).unwrap();
        assert_eq!(store.image_count(), 1);
        let img = store.image(0).unwrap();
        assert_eq!((img.pixels.width(), img.pixels.height()), (IMAGE_PX, IMAGE_PX));
        assert_eq!(img.pixels.get(5, 5), Rgb::new(10, 200, 30));
    }
}
