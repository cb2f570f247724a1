//! Chain state and the three kinds of moves: primary perturbations,
//! path-preserving technique swaps and fixed-coordinate technique changes.

use crate::seed::{SeedPath, TechniqueProposal};
use cmlt_bdpt::{chart_coordinates, evaluate, forward, invert_slot, relabel, slot_r, Path, Scene, Technique};
use cmlt_core::image::ImageAccumulator;
use cmlt_core::kernel::{PrimaryKernel, ProposalKind, TransitionKernel};
use cmlt_core::mh::acceptance;
use cmlt_core::rng::Stream;
use cmlt_core::{Diagnostics, MoveKind, Rgb, TargetMode};
use rand::Rng;

/// Counter: technique changes proposed with a different technique.
pub const CHANGE_PROPOSED: &str = "technique_change_distinct";
/// Counter: such proposals whose coordinates map to a different path.
pub const CHANGE_MOVED: &str = "technique_change_moved_path";

/// Current sample of one chain with everything derived from it cached.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub tech: Technique,
    /// Chart coordinates of `tech`.
    pub u: Vec<f64>,
    /// Subpath coordinates, kept by chains that change technique at fixed
    /// coordinates. The chart coordinates are derived from them.
    pub streams: Option<(Vec<f64>, Vec<f64>)>,
    pub path: Path,
    /// Weighted target `f* / sum p`.
    pub target: f64,
    /// Splat color `f / f*`.
    pub color: Rgb,
    pub fstar: f64,
    pub film: Option<(f64, f64)>,
}

/// A proposed sample with its derived values.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub tech: Technique,
    pub u: Vec<f64>,
    pub streams: Option<(Vec<f64>, Vec<f64>)>,
    pub path: Option<Path>,
    pub target: f64,
    pub color: Rgb,
    pub fstar: f64,
    pub film: Option<(f64, f64)>,
}

impl Candidate {
    pub fn build(scene: &Scene, tech: Technique, u: Vec<f64>, streams: Option<(Vec<f64>, Vec<f64>)>) -> Self {
        let mut c = Self { tech, u, streams, path: None, target: 0.0, color: Rgb::BLACK, fstar: 0.0, film: None };
        if let Some(p) = forward(scene, tech, &c.u) {
            let e = evaluate(scene, &p);
            c.target = cmlt_core::mh::sanitize(e.target(TargetMode::Weighted));
            c.fstar = e.f.max_component();
            if c.target > 0.0 {
                c.color = e.f / c.fstar;
                c.film = p.film(scene);
            }
            c.path = Some(p);
        }
        c
    }

    fn into_state(self) -> ChainState {
        ChainState {
            tech: self.tech,
            u: self.u,
            streams: self.streams,
            path: self.path.expect("accepted candidates are alive"),
            target: self.target,
            color: self.color,
            fstar: self.fstar,
            film: self.film,
        }
    }
}

impl ChainState {
    /// Chain started at a seed; `keep_streams` selects subpath coordinates
    /// as the state (fixed-coordinate technique changes).
    pub fn from_seed(scene: &Scene, seed: &SeedPath, keep_streams: bool) -> Self {
        let k = seed.technique.k();
        let streams = keep_streams.then(|| (seed.light_u[..3 * k].to_vec(), seed.eye_u[..3 * (k + 1)].to_vec()));
        let c = Candidate::build(scene, seed.technique, seed.u.clone(), streams);
        assert!(c.target > 0.0, "seed with zero target");
        c.into_state()
    }

    pub fn k(&self) -> usize {
        self.tech.k()
    }

    /// Re-derives the cached values from the coordinates; `None` if they
    /// disagree beyond `tol` (vertex distance and relative target).
    pub fn check(&self, scene: &Scene, tol: f64) -> Option<()> {
        let c = Candidate::build(scene, self.tech, self.u.clone(), None);
        let p = c.path?;
        (p.distance(&self.path) <= tol && (c.target - self.target).abs() <= tol * self.target).then_some(())
    }

    fn splat(&self, acc: &mut ImageAccumulator, w: f64) {
        if let Some((fx, fy)) = self.film {
            acc.splat_film(fx, fy, self.color * w);
        }
    }
}

fn splat_candidate(c: &Candidate, acc: &mut ImageAccumulator, w: f64) {
    if let (Some((fx, fy)), true) = (c.film, w > 0.0) {
        acc.splat_film(fx, fy, c.color * w);
    }
}

/// One Metropolis step with a symmetric primary-space kernel against the
/// weighted target. Both the current sample and the proposal are splatted
/// with weights `(1 - a) w` and `a w`. Returns the acceptance probability.
pub fn primary_perturbation_step<K: TransitionKernel>(
    state: &mut ChainState,
    kernel: &K,
    scene: &Scene,
    rng: &mut Stream,
    acc: &mut ImageAccumulator,
    w: f64,
    diag: &mut Diagnostics,
) -> f64 {
    let (kind, cand) = match &state.streams {
        Some((lu, eu)) => {
            let mut z: Vec<f64> = lu.iter().chain(eu).copied().collect();
            let mut out = vec![0.0; z.len()];
            let kind = kernel.propose(&z, &mut out, rng);
            z.copy_from_slice(&out);
            let (nl, ne) = z.split_at(lu.len());
            let u = chart_coordinates(state.tech, nl, ne);
            (kind, Candidate::build(scene, state.tech, u, Some((nl.to_vec(), ne.to_vec()))))
        }
        None => {
            let mut out = vec![0.0; state.u.len()];
            let kind = kernel.propose(&state.u, &mut out, rng);
            (kind, Candidate::build(scene, state.tech, out, None))
        }
    };
    let a = acceptance(cand.target, state.target);
    state.splat(acc, (1.0 - a) * w);
    splat_candidate(&cand, acc, a * w);
    let accepted = rng.gen::<f64>() < a;
    let mk = match kind {
        ProposalKind::Small => MoveKind::SmallStep,
        ProposalKind::Large => MoveKind::LargeStep,
    };
    diag.record(mk, a, accepted);
    if accepted {
        *state = cand.into_state();
    }
    a
}

/// A path-preserving technique swap before the accept decision.
#[derive(Debug, Clone)]
pub struct SwapProposal {
    pub tech: Technique,
    /// Coordinates of the same path in the chart of `tech`.
    pub u: Vec<f64>,
    /// Product of the inverse densities of the re-inverted slots, before
    /// and after the swap.
    pub r_old: f64,
    pub r_new: f64,
    pub acceptance: f64,
}

/// Chart slots whose vertex changes subpath when going from `a` to `b`,
/// in the order they are inverted: from the end of the growing subpath
/// backwards.
pub fn changed_slots(a: Technique, b: Technique) -> Vec<usize> {
    if b.s > a.s {
        (a.s..b.s).rev().collect()
    } else {
        (b.s..a.s).collect()
    }
}

/// Proposes a technique of the same length from `q` and re-inverts only
/// the vertices that switch sides. `None` when an inversion is undefined.
pub fn propose_swap(state: &ChainState, scene: &Scene, q: &TechniqueProposal, rng: &mut Stream) -> Option<SwapProposal> {
    let k = state.k();
    let s_new = q.sample(rng.gen());
    let tech = Technique::new(s_new, k + 1 - s_new);
    let mut u = state.u.clone();
    let mut r_old = 1.0;
    let mut r_new = 1.0;
    for i in changed_slots(state.tech, tech) {
        let v = [rng.gen(), rng.gen(), rng.gen()];
        let c = invert_slot(scene, &state.path, tech, i, v)?;
        r_old *= slot_r(scene, &state.path, state.tech, i, &state.u[3 * i..3 * i + 3]);
        u[3 * i..3 * i + 3].copy_from_slice(&c);
        r_new *= slot_r(scene, &state.path, tech, i, &c);
    }
    let ratio = r_old / r_new * q.prob(state.tech.s) / q.prob(s_new);
    let a = if s_new == state.tech.s { 1.0 } else { acceptance(ratio, 1.0) };
    Some(SwapProposal { tech, u, r_old, r_new, acceptance: a })
}

/// Serial-tempering chart swap: the path is kept and re-expressed in the
/// chart of another technique of the same length. Never evaluates `f`.
pub fn chart_swap_bidir(state: &mut ChainState, scene: &Scene, q: &TechniqueProposal, rng: &mut Stream, diag: &mut Diagnostics) -> bool {
    let Some(p) = propose_swap(state, scene, q, rng) else {
        diag.record_inversion_failure(MoveKind::TemperingSwap);
        return false;
    };
    let accepted = rng.gen::<f64>() < p.acceptance;
    diag.record(MoveKind::TemperingSwap, p.acceptance, accepted);
    if accepted && p.tech != state.tech {
        state.path = relabel(scene, &state.path, p.tech);
        state.tech = p.tech;
        state.u = p.u;
    }
    accepted
}

/// Technique change at fixed subpath coordinates: the new technique maps
/// them to a generally unrelated path, which must be evaluated.
pub fn mmlt_step(state: &mut ChainState, scene: &Scene, q: &TechniqueProposal, rng: &mut Stream, diag: &mut Diagnostics) -> bool {
    let (lu, eu) = state.streams.clone().expect("technique changes need subpath coordinates");
    let k = state.k();
    let s_new = q.sample(rng.gen());
    let tech = Technique::new(s_new, k + 1 - s_new);
    let xi: f64 = rng.gen();
    if tech == state.tech {
        diag.record(MoveKind::TechniqueChange, 1.0, true);
        return true;
    }
    let u = chart_coordinates(tech, &lu, &eu);
    let cand = Candidate::build(scene, tech, u, Some((lu, eu)));
    diag.bump(CHANGE_PROPOSED, 1);
    if cand.path.as_ref().is_none_or(|p| p.distance(&state.path) > 0.0) {
        diag.bump(CHANGE_MOVED, 1);
    }
    let a = acceptance(cand.target * q.prob(state.tech.s), state.target * q.prob(s_new));
    let accepted = xi < a;
    diag.record(MoveKind::TechniqueChange, a, accepted);
    if accepted {
        *state = cand.into_state();
    }
    accepted
}

/// Default primary kernel of the renderer.
pub fn default_kernel() -> PrimaryKernel {
    PrimaryKernel::default()
}
