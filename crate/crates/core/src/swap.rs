//! Chart swaps and inverse primary-space perturbations.

use crate::chart::{ChartPoint, SamplingAtlas, SamplingChart};
use crate::kernel::TransitionKernel;
use crate::mh::{acceptance, sanitize, ChainPoint, MhDecision};
use crate::rng::uniform_vec;
use crate::target::TargetDistribution;
use rand::Rng;

/// Result of a chart swap proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapOutcome<T> {
    /// The updated state(s): the proposal if accepted, else the input.
    pub result: T,
    pub acceptance: f64,
    pub accepted: bool,
    /// A right inverse was undefined, which forces rejection.
    pub inversion_failed: bool,
}

/// Distribution over target charts for serial tempering.
pub trait ChartProposal {
    fn propose<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize
    where
        Self: Sized;

    fn probability(&self, from: usize, to: usize) -> f64;
}

/// Uniform choice among all charts other than the current one.
#[derive(Debug, Clone, Copy)]
pub struct UniformOtherChart {
    pub n: usize,
}

impl ChartProposal for UniformOtherChart {
    fn propose<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        let k = rng.gen_range(0..self.n - 1);
        if k >= from {
            k + 1
        } else {
            k
        }
    }

    fn probability(&self, from: usize, to: usize) -> f64 {
        if from == to || to >= self.n {
            0.0
        } else {
            1.0 / (self.n - 1) as f64
        }
    }
}

fn invert<P>(chart: &dyn SamplingChart<Point = P>, x: &P, rng: &mut (impl Rng + ?Sized)) -> Option<Vec<f64>> {
    let v = uniform_vec(rng, chart.reverse_dim());
    let u = chart.right_inverse(x, &v)?;
    (chart.density(x) > 0.0).then_some(u)
}

/// Four inverse densities of a replica swap between `u1` in chart `i` and
/// `u2` in chart `j`, in the order `r_i(u1), r_j(u2), r_i(u2'), r_j(u1')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapDensities {
    pub ri_u1: f64,
    pub rj_u2: f64,
    pub ri_u2: f64,
    pub rj_u1: f64,
}

/// The r-only replica-swap ratio, valid for chart-invariant targets.
pub fn replica_ratio(r: &SwapDensities) -> f64 {
    (r.ri_u1 * r.rj_u2) / (r.ri_u2 * r.rj_u1)
}

/// The general replica-swap ratio including all four target values.
///
/// `pi` holds `pi_i(u1), pi_j(u2), pi_i(u2'), pi_j(u1')`.
pub fn replica_ratio_general(pi: [f64; 4], r: &SwapDensities) -> f64 {
    (pi[2] * pi[3] * r.ri_u1 * r.rj_u2) / (pi[0] * pi[1] * r.ri_u2 * r.rj_u1)
}

/// Replica-exchange swap between two chains in different charts.
///
/// The ratio uses only inverse densities, so the target is assumed to be
/// chart invariant. On acceptance the two chains exchange target points and
/// cached target values.
pub fn replica_swap<P: Clone, R: Rng + ?Sized>(
    a: &ChainPoint<P>,
    b: &ChainPoint<P>,
    atlas: &SamplingAtlas<P>,
    rng: &mut R,
) -> SwapOutcome<(ChainPoint<P>, ChainPoint<P>)> {
    let proposal = propose_replica(a, b, atlas, rng);
    let (new_a, new_b, r) = match proposal {
        Some(p) => p,
        None => {
            let _ = rng.gen::<f64>();
            return SwapOutcome { result: (a.clone(), b.clone()), acceptance: 0.0, accepted: false, inversion_failed: true };
        }
    };
    let acc = acceptance(r.ri_u1 * r.rj_u2, r.ri_u2 * r.rj_u1);
    let accepted = rng.gen::<f64>() < acc;
    let result = if accepted {
        (ChainPoint { point: new_a, x: b.x.clone(), value: b.value }, ChainPoint { point: new_b, x: a.x.clone(), value: a.value })
    } else {
        (a.clone(), b.clone())
    };
    SwapOutcome { result, acceptance: acc, accepted, inversion_failed: false }
}

/// Replica swap with the general ratio; target values are re-evaluated in
/// the destination charts.
pub fn replica_swap_general<P: Clone, T, R>(
    a: &ChainPoint<P>,
    b: &ChainPoint<P>,
    atlas: &SamplingAtlas<P>,
    target: &T,
    rng: &mut R,
) -> SwapOutcome<(ChainPoint<P>, ChainPoint<P>)>
where
    T: TargetDistribution<P> + ?Sized,
    R: Rng + ?Sized,
{
    let fail = |rng: &mut R| {
        let _ = rng.gen::<f64>();
        SwapOutcome { result: (a.clone(), b.clone()), acceptance: 0.0, accepted: false, inversion_failed: true }
    };
    let Some((new_a, new_b, r)) = propose_replica(a, b, atlas, rng) else {
        return fail(rng);
    };
    let (x1, x2) = (a.x.as_ref().unwrap(), b.x.as_ref().unwrap());
    let pa = sanitize(target.eval(new_a.chart, x2));
    let pb = sanitize(target.eval(new_b.chart, x1));
    let num = pa * pb * r.ri_u1 * r.rj_u2;
    let den = a.value * b.value * r.ri_u2 * r.rj_u1;
    let acc = acceptance(num, den);
    let accepted = rng.gen::<f64>() < acc;
    let result = if accepted {
        (ChainPoint { point: new_a, x: b.x.clone(), value: pa }, ChainPoint { point: new_b, x: a.x.clone(), value: pb })
    } else {
        (a.clone(), b.clone())
    };
    SwapOutcome { result, acceptance: acc, accepted, inversion_failed: false }
}

/// Draws the reverse samples of a replica swap and returns the re-expressed
/// points together with the four inverse densities.
pub fn propose_replica<P, R: Rng + ?Sized>(
    a: &ChainPoint<P>,
    b: &ChainPoint<P>,
    atlas: &SamplingAtlas<P>,
    rng: &mut R,
) -> Option<(ChartPoint, ChartPoint, SwapDensities)> {
    let (i, j) = (a.point.chart, b.point.chart);
    let (ci, cj) = (atlas.chart(i), atlas.chart(j));
    let x1 = a.x.as_ref()?;
    let x2 = b.x.as_ref()?;
    let u1j = invert(cj, x1, rng);
    let u2i = invert(ci, x2, rng);
    let (u1j, u2i) = (u1j?, u2i?);
    let r = SwapDensities {
        ri_u1: ci.inverse_density(&a.point.u, x1),
        rj_u2: cj.inverse_density(&b.point.u, x2),
        ri_u2: ci.inverse_density(&u2i, x2),
        rj_u1: cj.inverse_density(&u1j, x1),
    };
    Some((ChartPoint::new(i, u2i), ChartPoint::new(j, u1j), r))
}

/// Serial-tempering move of `state` to chart `j` with a fixed target point.
///
/// Accepts with `min(1, r_i(u) / r_j(u'))`; the target is assumed chart
/// invariant, so the cached value carries over unchanged.
pub fn tempering_swap<P: Clone, R: Rng + ?Sized>(
    state: &ChainPoint<P>,
    j: usize,
    atlas: &SamplingAtlas<P>,
    rng: &mut R,
) -> SwapOutcome<ChainPoint<P>> {
    tempering_move(state, j, atlas, 1.0, None::<&NoTarget>, rng)
}

struct NoTarget;

impl<P> TargetDistribution<P> for NoTarget {
    fn eval(&self, _chart: usize, _x: &P) -> f64 {
        1.0
    }
}

fn tempering_move<P: Clone, T, R>(
    state: &ChainPoint<P>,
    j: usize,
    atlas: &SamplingAtlas<P>,
    q_ratio: f64,
    target: Option<&T>,
    rng: &mut R,
) -> SwapOutcome<ChainPoint<P>>
where
    T: TargetDistribution<P> + ?Sized,
    R: Rng + ?Sized,
{
    let i = state.point.chart;
    let inverted = state.x.as_ref().and_then(|x| invert(atlas.chart(j), x, rng).map(|u| (x, u)));
    let Some((x, uj)) = inverted else {
        let _ = rng.gen::<f64>();
        return SwapOutcome { result: state.clone(), acceptance: 0.0, accepted: false, inversion_failed: true };
    };
    let ri = atlas.chart(i).inverse_density(&state.point.u, x);
    let rj = atlas.chart(j).inverse_density(&uj, x);
    let (value, pi_ratio_num, pi_ratio_den) = match target {
        Some(t) => {
            let v = sanitize(t.eval(j, x));
            (v, v, state.value)
        }
        None => (state.value, 1.0, 1.0),
    };
    let acc = acceptance(pi_ratio_num * ri * q_ratio, pi_ratio_den * rj);
    let accepted = rng.gen::<f64>() < acc;
    let result = if accepted { ChainPoint { point: ChartPoint::new(j, uj), x: state.x.clone(), value } } else { state.clone() };
    SwapOutcome { result, acceptance: acc, accepted, inversion_failed: false }
}

/// Full serial-tempering step: proposes a chart with `proposal`, inverts and
/// accepts with the target ratio, the inverse-density ratio and the chart
/// proposal ratio `q(j -> i) / q(i -> j)`.
pub fn serial_tempering_step<P: Clone, T, C, R>(
    state: &ChainPoint<P>,
    atlas: &SamplingAtlas<P>,
    target: &T,
    proposal: &C,
    rng: &mut R,
) -> SwapOutcome<ChainPoint<P>>
where
    T: TargetDistribution<P> + ?Sized,
    C: ChartProposal,
    R: Rng + ?Sized,
{
    let i = state.point.chart;
    let j = proposal.propose(i, rng);
    if j == i {
        let _ = rng.gen::<f64>();
        return SwapOutcome { result: state.clone(), acceptance: 1.0, accepted: true, inversion_failed: false };
    }
    let q_ratio = proposal.probability(j, i) / proposal.probability(i, j);
    tempering_move(state, j, atlas, q_ratio, Some(target), rng)
}

/// Move down from the target space into chart `chart`, perturb there and
/// map back up.
///
/// `state` carries the target point and its value under `target`.
pub fn inverse_primary_perturbation<P, K, F, R>(
    state: &(P, f64),
    chart: &dyn SamplingChart<Point = P>,
    kernel: &K,
    target: F,
    rng: &mut R,
) -> MhDecision<Option<(P, f64)>>
where
    K: TransitionKernel,
    F: Fn(&P) -> f64,
    R: Rng + ?Sized,
{
    let reject = |rng: &mut R, kind| {
        let _ = rng.gen::<f64>();
        MhDecision { proposal: None, acceptance: 0.0, accepted: false, kind }
    };
    let Some(u) = invert(chart, &state.0, rng) else {
        return reject(rng, crate::kernel::ProposalKind::Small);
    };
    let mut u2 = vec![0.0; u.len()];
    let kind = kernel.propose(&u, &mut u2, rng);
    let Some(y) = chart.forward(&u2) else {
        return reject(rng, kind);
    };
    let py = sanitize(target(&y));
    let ry = chart.inverse_density(&u2, &y);
    let rx = chart.inverse_density(&u, &state.0);
    let (kf, kb) =
        if kernel.is_symmetric() { (1.0, 1.0) } else { (kernel.transition_density(&u, &u2), kernel.transition_density(&u2, &u)) };
    let acc = if ry.is_finite() { acceptance(py * kb * ry, state.1 * kf * rx) } else { 0.0 };
    let accepted = rng.gen::<f64>() < acc;
    MhDecision { proposal: Some((y, py)), acceptance: acc, accepted, kind }
}
