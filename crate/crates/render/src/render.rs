//! Multi-chain rendering with CMLT, MMLT and PSSMLT.

use crate::chain::{chart_swap_bidir, mmlt_step, primary_perturbation_step, ChainState};
use crate::error::RenderError;
use crate::seed::{estimate_and_seed, Grouping, Seeding, TechniqueProposal};
use cmlt_bdpt::{Scene, MAX_K};
use cmlt_core::image::{Image, ImageAccumulator};
use cmlt_core::kernel::PrimaryKernel;
use cmlt_core::rng::{stream, stream_id, Stream};
use cmlt_core::{Diagnostics, MoveKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

const TAG_CHAIN: u32 = 23;
/// Chains per work unit; fixed so results do not depend on thread count.
pub const CHUNK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Primary perturbations plus path-preserving technique swaps.
    Cmlt,
    /// Primary perturbations plus technique changes at fixed coordinates.
    Mmlt,
    /// One chain per technique, no technique changes.
    Pssmlt,
}

impl Algorithm {
    pub fn grouping(self) -> Grouping {
        match self {
            Algorithm::Pssmlt => Grouping::Technique,
            _ => Grouping::Length,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Cmlt => "cmlt",
            Algorithm::Mmlt => "mmlt",
            Algorithm::Pssmlt => "pssmlt",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cmlt" => Ok(Algorithm::Cmlt),
            "mmlt" => Ok(Algorithm::Mmlt),
            "pssmlt" => Ok(Algorithm::Pssmlt),
            _ => Err(format!("unknown algorithm {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderSettings {
    pub algorithm: Algorithm,
    /// Perturbation steps over all chains.
    pub mutations: u64,
    pub chains: usize,
    /// Perturbations between technique swaps or changes; 0 disables them.
    pub swap_period: u64,
    /// Subpath pairs of the seeding pass.
    pub n_init: usize,
    pub seed: u64,
    pub kernel: PrimaryKernel,
    /// Number of checkpoints, spaced by doubling mutation counts.
    pub checkpoints: usize,
}

impl RenderSettings {
    pub fn new(algorithm: Algorithm, mutations: u64, chains: usize, seed: u64) -> Self {
        Self { algorithm, mutations, chains, swap_period: 16, n_init: 1 << 20, seed, kernel: PrimaryKernel::default(), checkpoints: 1 }
    }
}

/// Diagnostics at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Perturbation steps over all chains so far.
    pub mutations: u64,
    pub rmse: Option<f64>,
    pub perturbation_acceptance: f64,
    pub swap_acceptance: f64,
    pub image: Image,
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub image: Image,
    pub b: f64,
    pub chains: usize,
    pub checkpoints: Vec<Checkpoint>,
    pub diagnostics: Diagnostics,
}

struct Chain {
    state: ChainState,
    rng: Stream,
    /// Group brightness over group chain count.
    weight: f64,
    proposal: TechniqueProposal,
}

struct Chunk {
    chains: Vec<Chain>,
    acc: ImageAccumulator,
    diag: Diagnostics,
}

fn run_chunk(chunk: &mut Chunk, scene: &Scene, s: &RenderSettings, from: u64, to: u64) {
    for c in chunk.chains.iter_mut() {
        for m in from..to {
            if s.swap_period > 0 && m > 0 && m % s.swap_period == 0 {
                match s.algorithm {
                    Algorithm::Cmlt => {
                        chart_swap_bidir(&mut c.state, scene, &c.proposal, &mut c.rng, &mut chunk.diag);
                    }
                    Algorithm::Mmlt => {
                        mmlt_step(&mut c.state, scene, &c.proposal, &mut c.rng, &mut chunk.diag);
                    }
                    Algorithm::Pssmlt => {}
                }
            }
            primary_perturbation_step(&mut c.state, &s.kernel, scene, &mut c.rng, &mut chunk.acc, c.weight, &mut chunk.diag);
        }
    }
}

/// Per-chain mutation counts at each checkpoint: doubling, ending at `m`.
pub fn checkpoint_schedule(m: u64, count: usize) -> Vec<u64> {
    let mut out: Vec<u64> = (0..count).rev().map(|i| (m >> i).max(1)).collect();
    out.dedup();
    out
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var("CMLT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool").install(f),
        _ => f(),
    }
}

/// Seeds and runs the chains of `settings.algorithm`. When `reference` is
/// given, every checkpoint records its RMSE against it.
pub fn render(scene: &Scene, settings: &RenderSettings, reference: Option<&Image>) -> Result<RenderOutput, RenderError> {
    with_pool(|| render_inner(scene, settings, reference))
}

/// Same as [`render`] with a seeding pass computed elsewhere; its grouping
/// must match the algorithm.
pub fn render_seeded(
    scene: &Scene,
    settings: &RenderSettings,
    seeding: &Seeding,
    reference: Option<&Image>,
) -> Result<RenderOutput, RenderError> {
    with_pool(|| run_chains(scene, settings, seeding, reference))
}

fn render_inner(scene: &Scene, s: &RenderSettings, reference: Option<&Image>) -> Result<RenderOutput, RenderError> {
    if s.mutations == 0 || s.chains == 0 {
        return Err(RenderError::Invalid("mutations and chains must be positive".into()));
    }
    let seeding = estimate_and_seed(scene, s.n_init, s.chains, s.algorithm.grouping(), s.seed)?;
    run_chains(scene, s, &seeding, reference)
}

fn run_chains(scene: &Scene, s: &RenderSettings, seeding: &Seeding, reference: Option<&Image>) -> Result<RenderOutput, RenderError> {
    let n = seeding.seeds.len();
    if n == 0 {
        return Err(RenderError::Seeding(seeding.n_init));
    }
    let per_chain = s.mutations.div_ceil(n as u64);
    let (w, h) = (scene.camera.desc.width, scene.camera.desc.height);
    let proposals: Vec<TechniqueProposal> = (0..=MAX_K).map(|k| seeding.energy.proposal(k)).collect();
    let group = seeding.group_of_seeds();
    let keep_streams = s.algorithm == Algorithm::Mmlt;
    let chains: Vec<Chain> = seeding
        .seeds
        .iter()
        .enumerate()
        .map(|(i, sd)| {
            let g = &seeding.groups[group[i]];
            Chain {
                state: ChainState::from_seed(scene, sd, keep_streams),
                rng: stream(s.seed, stream_id(TAG_CHAIN, i as u64)),
                weight: g.energy / g.chains as f64,
                proposal: proposals[sd.technique.k()].clone(),
            }
        })
        .collect();
    let mut chunks: Vec<Chunk> = Vec::new();
    let mut it = chains.into_iter().peekable();
    while it.peek().is_some() {
        chunks.push(Chunk { chains: it.by_ref().take(CHUNK).collect(), acc: ImageAccumulator::new(w, h), diag: Diagnostics::default() });
    }

    let mut checkpoints = Vec::new();
    let mut done = 0;
    let mut image = Image::new(w, h);
    let mut diagnostics = Diagnostics::default();
    for target in checkpoint_schedule(per_chain, s.checkpoints.max(1)) {
        chunks.par_iter_mut().for_each(|c| run_chunk(c, scene, s, done, target));
        done = target;
        let mut total = ImageAccumulator::new(w, h);
        diagnostics = Diagnostics::default();
        for c in &chunks {
            total.merge(&c.acc);
            diagnostics.merge(&c.diag);
        }
        // pixel = sum_g (b_g / N_g) * splat sum / steps per chain
        image = total.to_image_scaled(1.0 / done as f64);
        let small = diagnostics.stats(MoveKind::SmallStep);
        let mut pert = small;
        pert.merge(&diagnostics.stats(MoveKind::LargeStep));
        let swap = match s.algorithm {
            Algorithm::Mmlt => diagnostics.stats(MoveKind::TechniqueChange),
            _ => diagnostics.stats(MoveKind::TemperingSwap),
        };
        checkpoints.push(Checkpoint {
            mutations: done * n as u64,
            rmse: reference.map(|r| image.rmse(r)).transpose().map_err(|e| RenderError::Invalid(e.to_string()))?,
            perturbation_acceptance: pert.acceptance_rate(),
            swap_acceptance: swap.acceptance_rate(),
            image: image.clone(),
        });
    }
    Ok(RenderOutput { image, b: seeding.b, chains: n, checkpoints, diagnostics })
}
