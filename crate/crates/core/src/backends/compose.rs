use image::{imageops, RgbImage};

use crate::error::{Error, Result};

/// Places `before` on the left and `after` on the right.
pub fn compose_feedback_image(before: &RgbImage, after: &RgbImage) -> Result<RgbImage> {
    if before.height() != after.height() {
        return Err(Error::input(format!(
            "feedback views differ in height ({} vs {})",
            before.height(),
            after.height()
        )));
    }
    let mut out = RgbImage::new(before.width() + after.width(), before.height());
    imageops::replace(&mut out, before, 0, 0);
    imageops::replace(&mut out, after, before.width() as i64, 0);
    Ok(out)
}

/// Tiles equally sized views row-major into a grid `cols` wide (12 views
/// with `cols = 4` give a 3x4 sheet).
pub fn compose_panorama_grid(views: &[RgbImage], cols: usize) -> Result<RgbImage> {
    let first = views.first().ok_or_else(|| Error::input("no views to tile"))?;
    let (w, h) = first.dimensions();
    if views.iter().any(|v| v.dimensions() != (w, h)) {
        return Err(Error::input("panorama views must share dimensions"));
    }
    let cols = cols.max(1);
    let rows = views.len().div_ceil(cols);
    let mut out = RgbImage::new(w * cols as u32, h * rows as u32);
    for (i, v) in views.iter().enumerate() {
        let (r, c) = (i / cols, i % cols);
        imageops::replace(&mut out, v, (c as u32 * w) as i64, (r as u32 * h) as i64);
    }
    Ok(out)
}
