//! Layered high-capacity color 2D symbols.
//!
//! An n-layer symbol stacks n monochrome QR-like bit matrices and paints each
//! module with the codebook color of its n-bit tuple. This crate covers the
//! whole chain: Reed-Solomon protection ([`ecc`]), symbol construction
//! ([`symbology`]), rendering and synthetic distortion ([`raster`]),
//! localization ([`detect`], [`geometry`]), trainable color recovery
//! ([`colorrec`]), and frame/session decoding with metrics ([`pipeline`]).

pub mod color;
pub mod colorrec;
pub mod detect;
pub mod ecc;
pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod raster;
pub mod symbology;

pub use error::{HiqError, Result};
