//! Image forgery detection and localization.
//!
//! Two detection feature pipelines are provided: Error Level Analysis
//! ([`ela`]) and per-coefficient DCT statistics over Local Binary Pattern
//! tiles ([`features`]). Both feed the from-scratch classifiers in
//! [`classify`]. Tampered regions are localized as binary masks by
//! [`localize`], and [`dataset`] handles corpus layout, synthetic forgeries
//! and splitting.

pub mod classify;
pub mod dataset;
pub mod ela;
pub mod error;
pub mod eval;
pub mod features;
pub mod imaging;
pub mod localize;
pub mod pipeline;
pub mod scenes;

pub use error::{Error, Result};
pub use imaging::{JpegQuality, RasterImage};
