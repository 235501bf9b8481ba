//! Symbol construction: codebook, module layout, format field, placement
//! and the assembled n-layer symbol.

pub mod codebook;
pub mod container;
pub mod format;
pub mod layout;
pub mod placement;
mod symbol;

pub use codebook::{build_codebook, tuple_bits, tuple_index, ColorCodebook, MAX_LAYERS};
pub use format::{vote_layer_count, FormatInfo};
pub use layout::{dimension, Layout, ModuleRole};
pub use placement::{Placement, SplitMix64};
pub use symbol::*;
