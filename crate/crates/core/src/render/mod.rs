//! Deterministic software rendering: canvas primitives, an embedded bitmap
//! font, PNG encoding, ASCII frames and side-by-side composition.
//!
//! Fixed canvas sizes: grid environments draw 32 px per cell, image-backed
//! environments work at 448x448, and the first-person maze view is 320x240.
//! Everything is nearest-neighbour; there is no antialiasing anywhere.

mod ascii;
mod canvas;
pub mod font;
mod png;

use thiserror::Error;

pub use ascii::{ascii_frame, parse_frame, CharGrid};
pub use canvas::{exact_sin_cos, Blit, Canvas, Rgb};
pub use png::{decode_image, encode_png, PngError};

/// Pixels per cell for grid environments.
pub const CELL_PX: u32 = 32;
/// Working resolution of image assets.
pub const IMAGE_PX: u32 = 448;
/// Height of the label band added by [`compose_side_by_side`].
pub const HEADER_PX: u32 = 12;

pub const BACKGROUND: Rgb = Rgb::new(236, 236, 232);
pub const INK: Rgb = Rgb::new(20, 20, 20);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("character grid is empty")]
    EmptyGrid,
    #[error("character grid row {row} has length {found}, expected {expected}")]
    RaggedGrid { row: usize, expected: usize, found: usize },
    #[error("character grid contains non-printable character {0:?}")]
    NonPrintable(char),
    #[error("canvases to compose have different heights ({0} vs {1})")]
    HeightMismatch(u32, u32),
    #[error("nothing to compose")]
    NothingToCompose,
}

/// Concatenates canvases horizontally with `gap_px` between them and a
/// labelled header band of [`HEADER_PX`] above each.
pub fn compose_side_by_side(canvases: &[&Canvas], labels: &[&str], gap_px: u32) -> Result<Canvas, RenderError> {
    let first = canvases.first().ok_or(RenderError::NothingToCompose)?;
    let height = first.height();
    if let Some(bad) = canvases.iter().find(|c| c.height() != height) {
        return Err(RenderError::HeightMismatch(height, bad.height()));
    }
    let width: u32 = canvases.iter().map(|c| c.width()).sum::<u32>() + gap_px * (canvases.len() as u32 - 1);
    let mut out = Canvas::new(width, height + HEADER_PX, BACKGROUND);
    let mut x = 0i64;
    for (i, c) in canvases.iter().enumerate() {
        if let Some(label) = labels.get(i) {
            let tw = font::text_width(label, 1) as i64;
            out.text(x + (c.width() as i64 - tw) / 2, 3, label, 1, INK);
        }
        out.blit(c, x, HEADER_PX as i64, Blit::default());
        x += c.width() as i64 + gap_px as i64;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_canvases_with_gap() {
        let a = Canvas::new(64, 64, Rgb::WHITE);
        let b = Canvas::new(64, 64, Rgb::BLACK);
        let out = compose_side_by_side(&[&a, &b], &["Target", "Current"], 8).unwrap();
        assert_eq!((out.width(), out.height()), (136, 76));
        assert_eq!(out.get(100, 40), Rgb::BLACK);
        assert_eq!(out.get(66, 40), BACKGROUND);
    }

    #[test]
    fn single_canvas_gets_header() {
        let a = Canvas::new(20, 10, Rgb::WHITE);
        let out = compose_side_by_side(&[&a], &["A"], 8).unwrap();
        assert_eq!((out.width(), out.height()), (20, 22));
    }

    #[test]
    fn mismatched_heights() {
        let a = Canvas::new(4, 4, Rgb::WHITE);
        let b = Canvas::new(4, 5, Rgb::WHITE);
        assert_eq!(compose_side_by_side(&[&a, &b], &[], 1), Err(RenderError::HeightMismatch(4, 5)));
        assert_eq!(compose_side_by_side(&[], &[], 1), Err(RenderError::NothingToCompose));
    }
}
