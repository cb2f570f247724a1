//! Metropolis-Hastings steps inside a chart and independence samplers.

use crate::chart::{ChartPoint, SamplingAtlas};
use crate::kernel::{ProposalKind, TransitionKernel};
use crate::target::TargetDistribution;
use rand::Rng;

/// A chart point with its forward image and cached target value.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPoint<P> {
    pub point: ChartPoint,
    pub x: Option<P>,
    pub value: f64,
}

impl<P> ChainPoint<P> {
    pub fn evaluate<T>(point: ChartPoint, atlas: &SamplingAtlas<P>, target: &T) -> Self
    where
        T: TargetDistribution<P> + ?Sized,
    {
        let x = atlas.forward(&point);
        let value = x.as_ref().map(|x| sanitize(target.eval(point.chart, x))).unwrap_or(0.0);
        Self { point, x, value }
    }
}

/// Outcome of a single MH decision.
#[derive(Debug, Clone, PartialEq)]
pub struct MhDecision<T> {
    pub proposal: T,
    pub acceptance: f64,
    pub accepted: bool,
    pub kind: ProposalKind,
}

impl<T> MhDecision<T> {
    /// Replaces `state` by the proposal if it was accepted.
    pub fn apply(self, state: &mut T) -> bool {
        if self.accepted {
            *state = self.proposal;
        }
        self.accepted
    }
}

/// Target values that are negative, NaN or infinite count as zero density.
#[inline]
pub fn sanitize(v: f64) -> f64 {
    if v.is_finite() && v > 0.0 {
        v
    } else {
        0.0
    }
}

/// `min(1, ratio)` with the conventions used throughout: a zero numerator
/// rejects, a zero or non-finite denominator with positive numerator accepts.
#[inline]
pub fn acceptance(num: f64, den: f64) -> f64 {
    if !(num > 0.0) || !num.is_finite() {
        0.0
    } else if !(den > 0.0) || !den.is_finite() {
        1.0
    } else {
        (num / den).min(1.0)
    }
}

/// One MH step of `state` within its chart.
///
/// The decision random number is always consumed, even for zero-valued
/// proposals, so the stream position does not depend on the target.
pub fn mh_step<P, K, T, R>(
    state: &ChainPoint<P>,
    kernel: &K,
    atlas: &SamplingAtlas<P>,
    target: &T,
    rng: &mut R,
) -> MhDecision<ChainPoint<P>>
where
    K: TransitionKernel,
    T: TargetDistribution<P> + ?Sized,
    R: Rng + ?Sized,
{
    let mut u = vec![0.0; state.point.u.len()];
    let kind = kernel.propose(&state.point.u, &mut u, rng);
    let proposal = ChainPoint::evaluate(ChartPoint::new(state.point.chart, u), atlas, target);
    let (fwd, bwd) = if kernel.is_symmetric() {
        (1.0, 1.0)
    } else {
        (kernel.transition_density(&state.point.u, &proposal.point.u), kernel.transition_density(&proposal.point.u, &state.point.u))
    };
    let a = acceptance(proposal.value * bwd, state.value * fwd);
    let accepted = rng.gen::<f64>() < a;
    MhDecision { proposal, acceptance: a, accepted, kind }
}

/// A proposal distribution that ignores the current state.
pub trait IndependenceSampler<P> {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<P>
    where
        Self: Sized;

    fn density(&self, x: &P) -> f64;
}

/// Independence-sampler step in the target space.
///
/// `state` carries the current point and its target value. When the sampler
/// density at the current point is zero the move is accepted whenever the
/// proposal has positive target value.
pub fn independence_step<P, S, F, R>(state: &(P, f64), sampler: &S, target: F, rng: &mut R) -> MhDecision<Option<(P, f64)>>
where
    S: IndependenceSampler<P>,
    F: Fn(&P) -> f64,
    R: Rng + ?Sized,
{
    let y = sampler.draw(rng);
    let (proposal, a) = match y {
        Some(y) => {
            let py = sanitize(target(&y));
            let qx = sampler.density(&state.0);
            let qy = sampler.density(&y);
            let a = if py == 0.0 || qy <= 0.0 {
                0.0
            } else if qx <= 0.0 {
                1.0
            } else {
                acceptance(py * qx, state.1 * qy)
            };
            (Some((y, py)), a)
        }
        None => (None, 0.0),
    };
    let accepted = rng.gen::<f64>() < a;
    MhDecision { proposal, acceptance: a, accepted, kind: ProposalKind::Large }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::testing::UnitChart;
    use crate::chart::BoxedChart;
    use crate::kernel::{NullKernel, PrimaryKernel};
    use crate::target::{AtlasTarget, TargetMode};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn unit_atlas() -> SamplingAtlas<f64> {
        SamplingAtlas::new(vec![Box::new(UnitChart) as BoxedChart<f64>])
    }

    #[test]
    fn null_perturbation_always_accepts() {
        let atlas = unit_atlas();
        let f = |x: &f64| 1.0 + x;
        let t = AtlasTarget::new(&atlas, &f, TargetMode::ImportanceSampled);
        let s = ChainPoint::evaluate(ChartPoint::new(0, vec![0.3]), &atlas, &t);
        let mut rng = crate::rng::stream(0, 0);
        let d = mh_step(&s, &NullKernel, &atlas, &t, &mut rng);
        assert_eq!(d.acceptance, 1.0);
        assert!(d.accepted);
    }

    #[test]
    fn zero_target_proposal_is_rejected() {
        let atlas = unit_atlas();
        let f = |x: &f64| if *x < 0.5 { 1.0 } else { 0.0 };
        let t = AtlasTarget::new(&atlas, &f, TargetMode::ImportanceSampled);
        let s = ChainPoint::evaluate(ChartPoint::new(0, vec![0.1]), &atlas, &t);
        let k = PrimaryKernel::new(0.1, 1.0);
        let mut rng = crate::rng::stream(0, 1);
        for _ in 0..1000 {
            let d = mh_step(&s, &k, &atlas, &t, &mut rng);
            if d.proposal.value == 0.0 {
                assert_eq!(d.acceptance, 0.0);
                assert!(!d.accepted);
            }
        }
    }

    #[test]
    fn piecewise_constant_target_histogram() {
        // Four-bin step target with quadrature normalization as oracle.
        let heights = [1.0, 3.0, 0.5, 2.5];
        let total: f64 = heights.iter().sum();
        let atlas = unit_atlas();
        let f = move |x: &f64| heights[((x * 4.0) as usize).min(3)];
        let t = AtlasTarget::new(&atlas, &f, TargetMode::ImportanceSampled);
        let k = PrimaryKernel::new(0.05, 0.2);
        let mut rng = crate::rng::stream(11, 0);
        let mut s = ChainPoint::evaluate(ChartPoint::new(0, vec![0.3]), &atlas, &t);
        let bins = 16;
        let mut hist = vec![0u64; bins];
        // Record every 25th state so that the recorded draws are close to independent.
        let stride = 25;
        let n = 40_000;
        for _ in 0..n {
            for _ in 0..stride {
                let d = mh_step(&s, &k, &atlas, &t, &mut rng);
                d.apply(&mut s);
            }
            hist[((s.point.u[0] * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let mut chi2 = 0.0;
        for (i, &h) in hist.iter().enumerate() {
            let expected = n as f64 * heights[i * 4 / bins] / total / 4.0;
            chi2 += (h as f64 - expected).powi(2) / expected;
        }
        let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
        assert!(p > 0.01, "chi2 {chi2} p {p}");
    }

    struct TwoBin;

    impl IndependenceSampler<usize> for TwoBin {
        fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
            Some(if rng.gen::<f64>() < 0.5 { 0 } else { 1 })
        }
        fn density(&self, _x: &usize) -> f64 {
            0.5
        }
    }

    #[test]
    fn independence_two_bin_acceptance() {
        let target = |x: &usize| if *x == 0 { 0.75 } else { 0.25 };
        let mut rng = crate::rng::stream(2, 0);
        let state = (0usize, 0.75);
        let mut seen = false;
        for _ in 0..64 {
            let d = independence_step(&state, &TwoBin, target, &mut rng);
            if let Some((1, _)) = d.proposal {
                assert!((d.acceptance - 1.0 / 3.0).abs() < 1e-15);
                seen = true;
            }
        }
        assert!(seen);
    }

    #[test]
    fn independence_proportional_sampler_always_accepts() {
        struct Prop;
        impl IndependenceSampler<usize> for Prop {
            fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
                Some(if rng.gen::<f64>() < 0.75 { 0 } else { 1 })
            }
            fn density(&self, x: &usize) -> f64 {
                if *x == 0 {
                    0.75
                } else {
                    0.25
                }
            }
        }
        let target = |x: &usize| if *x == 0 { 3.0 } else { 1.0 };
        let mut rng = crate::rng::stream(2, 1);
        let mut state = (1usize, 1.0);
        for _ in 0..100 {
            let d = independence_step(&state, &Prop, target, &mut rng);
            assert!((d.acceptance - 1.0).abs() < 1e-15);
            state = d.proposal.unwrap();
        }
    }

    #[test]
    fn acceptance_is_bounded() {
        for (n, d) in [(1.0, 2.0), (2.0, 1.0), (0.0, 1.0), (1.0, 0.0), (f64::NAN, 1.0)] {
            let a = acceptance(n, d);
            assert!((0.0..=1.0).contains(&a));
        }
    }
}
