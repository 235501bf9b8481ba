//! Symbol localization: local binarization and color-validated pattern
//! detection.

mod binarize;
mod patterns;

pub use binarize::{binarize, block_bounds, block_thresholds, BitImage, GRID};
pub use patterns::{
    estimate_version, find_alignments, find_finders, find_patterns, grid_point, ratio_unit, Alignment, Finder,
    PatternSet, ALIGNMENT_SEARCH, TOLERANCE,
};
