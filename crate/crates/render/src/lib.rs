//! Multi-chain Metropolis rendering on top of bidirectional path charts.
//!
//! A seeding pass estimates image brightness and resamples chain start
//! points. Chains then run primary-space perturbations against the
//! MIS-weighted target, mixed with technique swaps that keep the path and
//! re-invert only the vertices that move between subpaths. Fixed-coordinate
//! technique changes and per-technique chains are provided as baselines.

pub mod chain;
pub mod error;
pub mod render;
pub mod seed;

pub use chain::{chart_swap_bidir, mmlt_step, primary_perturbation_step, propose_swap, ChainState, SwapProposal};
pub use error::RenderError;
pub use render::{render, render_seeded, Algorithm, Checkpoint, RenderOutput, RenderSettings};
pub use seed::{estimate_and_seed, EnergyTable, Grouping, SeedGroup, SeedPath, Seeding, TechniqueProposal};
