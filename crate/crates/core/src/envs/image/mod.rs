//! Image-backed environments.

pub mod assets;
pub mod color;
pub mod mr2d;
pub mod permutation;

pub use assets::{AssetStore, ImageAsset, ASSETS_ENV};

use super::{EnvKind, Environment};
use crate::params::{ConfigError, Difficulty, ParamMap};
use permutation::{JigsawParams, PermEnv, VideoParams, ZoomParams};

pub fn resolve_params(kind: EnvKind, difficulty: Difficulty, overrides: &ParamMap) -> Result<ParamMap, ConfigError> {
    Ok(match kind {
        EnvKind::Jigsaw => JigsawParams::resolve(difficulty, overrides)?.to_map(),
        EnvKind::ZoomIn => ZoomParams::resolve(difficulty, overrides)?.to_map(),
        EnvKind::VideoUnshuffle => VideoParams::resolve(difficulty, overrides)?.to_map(),
        EnvKind::Colorization => color::ColorParams::resolve(difficulty, overrides)?.to_map(),
        EnvKind::MentalRotation2d => mr2d::Mr2dParams::resolve(difficulty, overrides)?.to_map(),
        other => return Err(ConfigError::UnknownEnv(format!("{other} is not image-backed"))),
    })
}

pub fn make(
    kind: EnvKind,
    difficulty: Difficulty,
    overrides: &ParamMap,
    seed: u64,
    assets: &AssetStore,
) -> Result<Box<dyn Environment>, ConfigError> {
    let mut rng = crate::rng::stream(seed, &format!("{kind}/generate"));
    Ok(match kind {
        EnvKind::Jigsaw => {
            let p = JigsawParams::resolve(difficulty, overrides)?;
            let state = permutation::jigsaw_make(&assets.image(seed)?, &p, &mut rng);
            Box::new(PermEnv::new(kind, p.to_map(), state))
        }
        EnvKind::ZoomIn => {
            let p = ZoomParams::resolve(difficulty, overrides)?;
            let (state, _) = permutation::zoom_make(&assets.image(seed)?, &p, &mut rng);
            Box::new(PermEnv::new(kind, p.to_map(), state))
        }
        EnvKind::VideoUnshuffle => {
            let p = VideoParams::resolve(difficulty, overrides)?;
            let (source, frames) = assets.frames(seed)?;
            let state = permutation::video_make(&source, &frames, &p, &mut rng)?;
            Box::new(PermEnv::new(kind, p.to_map(), state))
        }
        EnvKind::Colorization => {
            let p = color::ColorParams::resolve(difficulty, overrides)?;
            Box::new(color::ColorEnv::generate(p, assets.image(seed)?, seed))
        }
        EnvKind::MentalRotation2d => {
            let p = mr2d::Mr2dParams::resolve(difficulty, overrides)?;
            Box::new(mr2d::Mr2dEnv::generate(p, assets.image(seed)?, seed))
        }
        other => return Err(ConfigError::UnknownEnv(format!("{other} is not image-backed"))),
    })
}
