//! Image-to-grid homography estimation and per-module sampling.

mod homography;
mod sample;
pub mod svd;

pub use homography::{
    affine_3pt, estimate_rgt, homography_4pt, Correspondence, Homography, ALIGNMENT_WEIGHT, FINDER_WEIGHT,
};
pub use sample::{
    feature_blocks, module_center, sample_centers, sample_modules, FeatureBlock, BOTTOM, CENTER,
    LEFT, RIGHT, TOP,
};
