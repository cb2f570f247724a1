//! Metropolis-Hastings over sampling charts.
//!
//! A sampling chart is a primary sample space `[0,1]^d` together with a
//! forward map into a target space, an extended right inverse and the density
//! of the forward image of a uniform variable. This crate provides the
//! domain-agnostic pieces built on top of that notion: Metropolis-Hastings
//! steps in a chart, replica-exchange and serial-tempering chart swaps,
//! inverse primary-space perturbations and independence samplers, plus the
//! small amount of shared plumbing (vectors, colors, images, random streams)
//! used by the light transport crates.

pub mod chart;
pub mod diagnostics;
pub mod image;
pub mod kernel;
pub mod math;
pub mod mh;
pub mod rng;
pub mod swap;
pub mod target;

pub use chart::{ChartPoint, SamplingAtlas, SamplingChart};
pub use diagnostics::{Diagnostics, MoveKind, MoveStats};
pub use image::{Image, ImageAccumulator, ImageError};
pub use kernel::{NullKernel, PrimaryKernel, ProposalKind, TransitionKernel};
pub use math::{Rgb, Vec3};
pub use mh::{independence_step, mh_step, ChainPoint, IndependenceSampler, MhDecision};
pub use swap::{inverse_primary_perturbation, replica_swap, serial_tempering_step, tempering_swap, ChartProposal, SwapOutcome};
pub use target::{AtlasTarget, Integrand, TargetDistribution, TargetMode};
