//! PNG encoding with fixed settings so equal canvases give equal bytes.

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ExtendedColorType, ImageEncoder};

use super::canvas::Canvas;

#[derive(Debug, thiserror::Error)]
#[error("png codec error: {0}")]
pub struct PngError(#[from] image::ImageError);

/// Encodes an RGB8, non-interlaced PNG with the `Sub` filter on every row.
pub fn encode_png(canvas: &Canvas) -> Vec<u8> {
    let mut out = Vec::new();
    let encoder = PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::Sub);
    encoder
        .write_image(canvas.pixels(), canvas.width(), canvas.height(), ExtendedColorType::Rgb8)
        .expect("encoding an in-memory RGB8 buffer of matching size cannot fail");
    out
}

/// Decodes any PNG or JPEG into an RGB8 canvas.
pub fn decode_image(bytes: &[u8]) -> Result<Canvas, PngError> {
    let img = image::load_from_memory(bytes)?.to_rgb8();
    let (w, h) = img.dimensions();
    Ok(Canvas::from_raw(w, h, img.into_raw()).expect("rgb8 buffer has matching length"))
}
