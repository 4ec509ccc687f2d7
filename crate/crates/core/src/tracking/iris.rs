use crate::error::{Error, Result};
use crate::features::GrayImage;

/// Centroid of the inverted intensities, so dark pixels pull the estimate.
/// A crop with no dark mass (pure white) returns its geometric centre.
pub fn estimate_iris_center(eye: &GrayImage) -> Result<(f64, f64)> {
    if eye.is_empty() {
        return Err(Error::InvalidParameter("empty eye crop".into()));
    }
    let (w, h) = (eye.width(), eye.height());
    let (mut sx, mut sy, mut mass) = (0.0, 0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            let weight = f64::from(255 - eye.get(x, y));
            sx += weight * x as f64;
            sy += weight * y as f64;
            mass += weight;
        }
    }
    if mass == 0.0 {
        return Ok(((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0));
    }
    Ok((sx / mass, sy / mass))
}
