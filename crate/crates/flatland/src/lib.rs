//! A two-vertex light transport testbed.
//!
//! Paths consist of a point on a ground square and a point on one of two
//! area lights. Two exactly invertible samplers (next-event estimation and
//! cosine-weighted ray casting) serve as charts for comparing primary-space
//! MLT variants against chart-swapping chains.

pub mod charts;
pub mod quadrature;
pub mod reference;
pub mod scene;
pub mod variants;

pub use charts::{FlatPath, NeeChart, PtChart};
pub use reference::reference_image;
pub use scene::{Emitter, FlatScene};
pub use variants::{run_variant, run_variant_observed, FlatError, FlatProblem, Flatland, Variant, VariantConfig, VariantOutput};

/// Root mean squared per-channel difference between two images.
pub fn rmse(a: &cmlt_core::Image, b: &cmlt_core::Image) -> Result<f64, cmlt_core::ImageError> {
    a.rmse(b)
}
