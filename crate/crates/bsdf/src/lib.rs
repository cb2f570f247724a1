//! Analytic BSDF layers with forward sampling, exact inversion and densities.
//!
//! All functions work in a local shading frame whose `z` axis is the normal.
//! Directions point away from the surface, so `wi` is the direction towards
//! the previous vertex and `wo` the sampled outgoing direction.

pub mod frame;
pub mod ggx;
pub mod lambert;
pub mod layered;

pub use frame::{spherical, Frame};
pub use layered::{Layer, LayeredBsdf, ScatterMode};
