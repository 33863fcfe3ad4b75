//! The environments and their registry.
//!
//! Every environment is a value type behind [`Environment`]: it owns its
//! generated state, applies validated actions, renders observations and can
//! hand its privileged state to an oracle solver.

use std::any::Any;
use std::fmt;
use std::str::FromStr;

use crate::actions::{SchemaSet, Value};
use crate::params::{ConfigError, Difficulty, ParamMap};
use crate::render::{Canvas, CharGrid};
use crate::solvers::{SolveError, SolverOptions, SolverPlan};

pub mod equation;
pub mod image;
pub mod maze;
mod maze_view;
pub mod mr3d;
pub mod patch;
pub mod rotation;
pub mod sliding;

pub use self::image::AssetStore;

/// Feedback for an action that changed (or attempted to change) state
/// successfully.
pub const EXECUTED: &str = "executed";

/// The twelve environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvKind {
    Maze2d,
    Maze3d,
    SlidingBlock,
    PatchReassembly,
    MatchstickEquation,
    MatchstickRotation,
    MentalRotation2d,
    MentalRotation3d,
    Jigsaw,
    ZoomIn,
    VideoUnshuffle,
    Colorization,
}

impl EnvKind {
    pub const ALL: [EnvKind; 12] = [
        EnvKind::Maze2d,
        EnvKind::Maze3d,
        EnvKind::SlidingBlock,
        EnvKind::PatchReassembly,
        EnvKind::MatchstickEquation,
        EnvKind::MatchstickRotation,
        EnvKind::MentalRotation2d,
        EnvKind::MentalRotation3d,
        EnvKind::Jigsaw,
        EnvKind::ZoomIn,
        EnvKind::VideoUnshuffle,
        EnvKind::Colorization,
    ];

    pub fn id(self) -> &'static str {
        match self {
            EnvKind::Maze2d => "maze2d",
            EnvKind::Maze3d => "maze3d",
            EnvKind::SlidingBlock => "sliding_block",
            EnvKind::PatchReassembly => "patch_reassembly",
            EnvKind::MatchstickEquation => "matchstick_equation",
            EnvKind::MatchstickRotation => "matchstick_rotation",
            EnvKind::MentalRotation2d => "mental_rotation_2d",
            EnvKind::MentalRotation3d => "mental_rotation_3d",
            EnvKind::Jigsaw => "jigsaw",
            EnvKind::ZoomIn => "zoom_in",
            EnvKind::VideoUnshuffle => "video_unshuffle",
            EnvKind::Colorization => "colorization",
        }
    }

    /// Whether an ASCII observation mode exists.
    pub fn supports_text(self) -> bool {
        matches!(self, EnvKind::Maze2d | EnvKind::SlidingBlock | EnvKind::PatchReassembly | EnvKind::MatchstickEquation)
    }

    /// Solver strategies; the first is the default.
    pub fn strategies(self) -> &'static [&'static str] {
        match self {
            EnvKind::Maze2d | EnvKind::Maze3d | EnvKind::SlidingBlock => &["bfs"],
            EnvKind::PatchReassembly => &["backtrack"],
            EnvKind::MatchstickEquation => &["bfs", "dfs", "sos"],
            EnvKind::MatchstickRotation => &["probe_then_solve", "3_moves"],
            EnvKind::MentalRotation2d => &["split"],
            EnvKind::MentalRotation3d => &["solve_only", "rotate_then_solve"],
            EnvKind::Jigsaw | EnvKind::ZoomIn | EnvKind::VideoUnshuffle => &["reorder", "swap"],
            EnvKind::Colorization => &["incremental"],
        }
    }

    /// Resolved parameters of the preset, with no overrides.
    pub fn preset(self, difficulty: Difficulty) -> ParamMap {
        resolve_params(self, difficulty, &ParamMap::new()).expect("presets are valid")
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for EnvKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnvKind::ALL.into_iter().find(|k| k.id() == s).ok_or_else(|| ConfigError::UnknownEnv(s.to_string()))
    }
}

/// A live environment instance.
pub trait Environment: Send + Sync {
    fn kind(&self) -> EnvKind;

    /// Fully resolved generation parameters.
    fn params(&self) -> ParamMap;

    /// Task description and conventions; action signatures are appended by
    /// the episode engine.
    fn task_text(&self) -> String;

    fn schemas(&self) -> &SchemaSet;

    /// Applies a validated, non-`stop` action and returns feedback text.
    fn apply(&mut self, name: &str, args: &[Value]) -> String;

    fn is_solved(&self) -> bool;

    fn render(&self) -> Canvas;

    fn render_ascii(&self) -> Option<CharGrid> {
        None
    }

    /// The image this environment would show in its solved configuration.
    fn goal_render(&self) -> Option<Canvas>;

    fn goal_ascii(&self) -> Option<CharGrid> {
        None
    }

    /// Stable text serialisation of the logical state; initial-state hashes
    /// are digests of this.
    fn canonical_state(&self) -> String;

    fn solve(&self, opts: &SolverOptions) -> Result<SolverPlan, SolveError>;

    fn clone_box(&self) -> Box<dyn Environment>;

    fn as_any(&self) -> &dyn Any;
}

impl Clone for Box<dyn Environment> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Validates parameters for `kind` and returns the resolved map.
pub fn resolve_params(kind: EnvKind, difficulty: Difficulty, overrides: &ParamMap) -> Result<ParamMap, ConfigError> {
    Ok(match kind {
        EnvKind::Maze2d | EnvKind::Maze3d => {
            maze::MazeParams::resolve(kind == EnvKind::Maze3d, difficulty, overrides)?.to_map()
        }
        EnvKind::SlidingBlock => sliding::SlidingParams::resolve(difficulty, overrides)?.to_map(),
        EnvKind::PatchReassembly => patch::PatchParams::resolve(difficulty, overrides)?.to_map(),
        EnvKind::MatchstickEquation => equation::EquationParams::resolve(difficulty, overrides)?.to_map(),
        EnvKind::MatchstickRotation => rotation::RotationParams::resolve(difficulty, overrides)?.to_map(),
        EnvKind::MentalRotation3d => mr3d::Mr3dParams::resolve(difficulty, overrides)?.to_map(),
        EnvKind::MentalRotation2d
        | EnvKind::Jigsaw
        | EnvKind::ZoomIn
        | EnvKind::VideoUnshuffle
        | EnvKind::Colorization => self::image::resolve_params(kind, difficulty, overrides)?,
    })
}

/// Generates a fresh environment instance from `seed`.
pub fn make_env(
    kind: EnvKind,
    difficulty: Difficulty,
    overrides: &ParamMap,
    seed: u64,
    assets: &AssetStore,
) -> Result<Box<dyn Environment>, ConfigError> {
    Ok(match kind {
        EnvKind::Maze2d | EnvKind::Maze3d => {
            let p = maze::MazeParams::resolve(kind == EnvKind::Maze3d, difficulty, overrides)?;
            Box::new(maze::MazeEnv::generate(p, seed)?)
        }
        EnvKind::SlidingBlock => {
            let p = sliding::SlidingParams::resolve(difficulty, overrides)?;
            Box::new(sliding::SlidingEnv::generate(p, seed)?)
        }
        EnvKind::PatchReassembly => {
            let p = patch::PatchParams::resolve(difficulty, overrides)?;
            Box::new(patch::PatchEnv::generate(p, seed)?)
        }
        EnvKind::MatchstickEquation => {
            let p = equation::EquationParams::resolve(difficulty, overrides)?;
            Box::new(equation::EquationEnv::generate(p, seed)?)
        }
        EnvKind::MatchstickRotation => {
            let p = rotation::RotationParams::resolve(difficulty, overrides)?;
            Box::new(rotation::RotationEnv::generate(p, seed)?)
        }
        EnvKind::MentalRotation3d => {
            let p = mr3d::Mr3dParams::resolve(difficulty, overrides)?;
            Box::new(mr3d::Mr3dEnv::generate(p, seed)?)
        }
        EnvKind::MentalRotation2d
        | EnvKind::Jigsaw
        | EnvKind::ZoomIn
        | EnvKind::VideoUnshuffle
        | EnvKind::Colorization => self::image::make(kind, difficulty, overrides, seed, assets)?,
    })
}

/// Fills `{key}` placeholders in an instruction template.
pub(crate) fn fill_template(template: &str, vars: &[(&str, String)]) -> String {
    let mut out = template.trim_end().to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for k in EnvKind::ALL {
            assert_eq!(k.id().parse::<EnvKind>().unwrap(), k);
        }
        assert!(matches!("counting".parse::<EnvKind>(), Err(ConfigError::UnknownEnv(_))));
    }

    #[test]
    fn text_mode_envs() {
        let text: Vec<_> = EnvKind::ALL.into_iter().filter(|k| k.supports_text()).collect();
        assert_eq!(
            text,
            vec![EnvKind::Maze2d, EnvKind::SlidingBlock, EnvKind::PatchReassembly, EnvKind::MatchstickEquation]
        );
    }
}
