//! Texture features shared by the emotion and eye-state classifiers.
//!
//! Radius-1, 8-neighbour local binary patterns over a grayscale crop, a
//! per-block 256-bin histogram of the codes, and a PCA projection of the
//! resulting vectors.

mod histogram;
mod image;
mod lbp;
mod pca;

pub use histogram::{block_histogram, FeatureVector, BINS_PER_BLOCK};
pub use image::GrayImage;
pub use lbp::{lbp_code, lbp_map, LbpCodeMap};
pub use pca::{pca_fit, PcaModel};

use crate::error::Result;

/// Default block grid for face crops.
pub const FACE_GRID: (usize, usize) = (7, 7);
/// Default block grid for eye crops.
pub const EYE_GRID: (usize, usize) = (3, 3);
/// Default number of retained principal components.
pub const DEFAULT_COMPONENTS: usize = 32;

/// LBP map, block histogram and per-block L1 normalisation in one step.
///
/// This is the vector handed to PCA and the classifiers.
pub fn extract_features(img: &GrayImage, grid: (usize, usize)) -> Result<FeatureVector> {
    let map = lbp_map(img)?;
    let hist = block_histogram(&map, grid.0, grid.1)?;
    Ok(hist.l1_normalized())
}
