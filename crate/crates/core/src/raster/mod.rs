//! Rendering symbols to images and synthesizing chromatic and geometric
//! distortions.

pub mod corpus;
pub mod distort;
mod image;
mod render;

pub use corpus::{
    distort_symbol, draw_profile, load_corpus, symbol_labels, synth_corpus, synth_item, write_corpus, CorpusItem, CorpusSpec,
    DistortionProfile,
};
pub use distort::{
    add_blur, add_noise, apply_cci, apply_cmi, apply_illumination, apply_warp, cmi_symmetric, occlude_window, CmiWeights,
    Illumination, NO_CMI,
};
pub use image::RasterImage;
pub use render::{render, render_grid, Rendered};
