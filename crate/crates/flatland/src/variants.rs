//! The six chain variants compared on the flatland testbed.

use crate::charts::{FlatPath, NeeChart, PtChart};
use crate::scene::FlatScene;
use cmlt_core::chart::BoxedChart;
use cmlt_core::rng::{stream, stream_id, uniform_vec, Stream};
use cmlt_core::swap::replica_swap;
use cmlt_core::{
    inverse_primary_perturbation, mh_step, AtlasTarget, ChainPoint, ChartPoint, Diagnostics, Image, ImageAccumulator, MoveKind,
    PrimaryKernel, ProposalKind, Rgb, SamplingAtlas, TargetDistribution, TargetMode,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const NEE: usize = 0;
pub const PT: usize = 1;

const TAG_ESTIMATE: u32 = 1;
const TAG_CHAIN: u32 = 2;
const TAG_SWAP: u32 = 3;

/// Scene plus its two-chart atlas.
pub struct Flatland {
    pub scene: FlatScene,
    atlas: SamplingAtlas<FlatPath>,
}

impl Flatland {
    pub fn new(scene: FlatScene) -> Self {
        let charts: Vec<BoxedChart<FlatPath>> = vec![Box::new(NeeChart { scene }), Box::new(PtChart { scene })];
        Self { scene, atlas: SamplingAtlas::new(charts) }
    }
}

/// What the variants need from a problem: an atlas over its paths, a color
/// contribution and a film position for every path.
pub trait FlatProblem: Sync {
    type Path: Clone + Send + Sync;

    fn atlas(&self) -> &SamplingAtlas<Self::Path>;
    fn contribution(&self, x: &Self::Path) -> Rgb;
    fn film(&self, x: &Self::Path) -> (f64, f64);
    /// Square image side in pixels.
    fn resolution(&self) -> usize;

    fn star(&self, x: &Self::Path) -> f64 {
        self.contribution(x).max_component()
    }
}

impl FlatProblem for Flatland {
    type Path = FlatPath;

    fn atlas(&self) -> &SamplingAtlas<FlatPath> {
        &self.atlas
    }

    fn contribution(&self, x: &FlatPath) -> Rgb {
        x.contribution(&self.scene)
    }

    fn film(&self, x: &FlatPath) -> (f64, f64) {
        self.scene.film(x.x1)
    }

    fn resolution(&self) -> usize {
        self.scene.resolution
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "pssmlt-1")]
    Pssmlt1,
    #[serde(rename = "pssmlt-2")]
    Pssmlt2,
    #[serde(rename = "pssmlt-avg")]
    PssmltAvg,
    #[serde(rename = "pssmlt-mix")]
    PssmltMix,
    #[serde(rename = "cmlt-ipsm")]
    CmltIpsm,
    #[serde(rename = "cmlt")]
    Cmlt,
}

impl Variant {
    pub const ALL: [Variant; 6] =
        [Variant::Pssmlt1, Variant::Pssmlt2, Variant::PssmltAvg, Variant::PssmltMix, Variant::CmltIpsm, Variant::Cmlt];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Pssmlt1 => "pssmlt-1",
            Variant::Pssmlt2 => "pssmlt-2",
            Variant::PssmltAvg => "pssmlt-avg",
            Variant::PssmltMix => "pssmlt-mix",
            Variant::CmltIpsm => "cmlt-ipsm",
            Variant::Cmlt => "cmlt",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Variant::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(s)).ok_or_else(|| format!("unknown variant '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariantConfig {
    pub kernel: PrimaryKernel,
    /// Perturbation iterations between replica swaps.
    pub swap_period: usize,
    /// Plain Monte Carlo draws used to estimate `b` and pick seeds.
    pub b_samples: usize,
}

impl Default for VariantConfig {
    fn default() -> Self {
        Self { kernel: PrimaryKernel::default(), swap_period: 4, b_samples: 1_000_000 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FlatError {
    #[error("seeding failed for {variant}: none of {samples} brightness-estimation draws in chart {chart} contributes")]
    Seeding { variant: Variant, chart: usize, samples: usize },
    #[error("the number of samples must be positive")]
    NoSamples,
}

#[derive(Debug, Clone)]
pub struct VariantOutput {
    pub image: Image,
    /// Normalization constant of each chain.
    pub b: Vec<f64>,
    pub diagnostics: Diagnostics,
}

struct Estimate {
    mean: f64,
    seed: Option<ChartPoint>,
}

/// Mean of `target` over uniform draws in one chart plus one draw picked
/// proportionally to it.
fn estimate<Q: FlatProblem, T: TargetDistribution<Q::Path> + ?Sized>(
    fl: &Q,
    target: &T,
    charts: &[usize],
    n: usize,
    rng: &mut Stream,
) -> Vec<Estimate> {
    let mut total = 0.0;
    let mut seed = None;
    let mut out = Vec::with_capacity(charts.len());
    for &c in charts {
        let mut sum = 0.0;
        for _ in 0..n {
            let u = uniform_vec(rng, fl.atlas().chart(c).dim());
            let w = fl.atlas().chart(c).forward(&u).map_or(0.0, |x| target.eval(c, &x));
            if w > 0.0 && w.is_finite() {
                sum += w;
                total += w;
                if rng.gen::<f64>() * total < w {
                    seed = Some(ChartPoint::new(c, u));
                }
            }
        }
        out.push(Estimate { mean: sum / n.max(1) as f64, seed: seed.clone() });
        // Per-chart seeds for multi-chain variants restart the reservoir.
        if charts.len() > 1 {
            seed = None;
            total = 0.0;
        }
    }
    out
}

fn kind_of(k: ProposalKind) -> MoveKind {
    match k {
        ProposalKind::Small => MoveKind::SmallStep,
        ProposalKind::Large => MoveKind::LargeStep,
    }
}

struct Splatter<'a, Q: FlatProblem> {
    fl: &'a Q,
    acc: ImageAccumulator,
    /// Balance-heuristic weighting for chart `Some(i)`.
    mis: Option<usize>,
}

impl<'a, Q: FlatProblem> Splatter<'a, Q> {
    fn new(fl: &'a Q, mis: Option<usize>) -> Self {
        let r = fl.resolution();
        Self { fl, acc: ImageAccumulator::new(r, r), mis }
    }

    #[inline]
    fn splat(&mut self, x: &Q::Path, w: f64) {
        if w <= 0.0 {
            return;
        }
        let c = self.fl.contribution(x);
        let s = c.max_component();
        if s <= 0.0 {
            return;
        }
        let mut k = w / s;
        if let Some(i) = self.mis {
            let atlas = self.fl.atlas();
            k *= atlas.balance_weight(i, x);
        }
        let (fx, fy) = self.fl.film(x);
        self.acc.splat_film(fx, fy, c * k);
    }
}

struct PssChain<'a, Q: FlatProblem> {
    state: ChainPoint<Q::Path>,
    splat: Splatter<'a, Q>,
    rng: Stream,
    steps: u64,
}

impl<'a, Q: FlatProblem> PssChain<'a, Q> {
    fn step<T: TargetDistribution<Q::Path> + ?Sized>(&mut self, target: &T, kernel: &PrimaryKernel, diag: &mut Diagnostics) {
        let atlas = self.splat.fl.atlas();
        let d = mh_step(&self.state, kernel, atlas, target, &mut self.rng);
        diag.record(kind_of(d.kind), d.acceptance, d.accepted);
        if let Some(x) = &self.state.x {
            self.splat.splat(x, 1.0 - d.acceptance);
        }
        if let Some(x) = &d.proposal.x {
            self.splat.splat(x, d.acceptance);
        }
        d.apply(&mut self.state);
        self.steps += 1;
    }
}

/// Runs `variant` for `n_samples` target evaluations in total.
pub fn run_variant<Q: FlatProblem>(
    fl: &Q,
    variant: Variant,
    n_samples: u64,
    seed: u64,
    cfg: &VariantConfig,
) -> Result<VariantOutput, FlatError> {
    run_variant_observed(fl, variant, n_samples, seed, cfg, &mut |_, _| {})
}

/// As [`run_variant`], calling `observe(iteration, states)` after every
/// iteration with the current target-space state of each chain.
pub fn run_variant_observed<Q: FlatProblem>(
    fl: &Q,
    variant: Variant,
    n_samples: u64,
    seed: u64,
    cfg: &VariantConfig,
    observe: &mut dyn FnMut(u64, &[&Q::Path]),
) -> Result<VariantOutput, FlatError> {
    if n_samples == 0 {
        return Err(FlatError::NoSamples);
    }
    let star = |x: &Q::Path| fl.star(x);
    let atlas = fl.atlas();
    let mode = match variant {
        Variant::Pssmlt1 | Variant::Pssmlt2 | Variant::PssmltAvg => TargetMode::ImportanceSampled,
        _ => TargetMode::Weighted,
    };
    let target = AtlasTarget::new(atlas, &star, mode);
    let mut est_rng = stream(seed, stream_id(TAG_ESTIMATE, 0));
    let mut diag = Diagnostics::default();
    let res = fl.resolution();
    let pixels = (res * res) as f64;

    if variant == Variant::CmltIpsm {
        return run_ipsm(fl, &target, n_samples, seed, cfg, &mut est_rng, observe);
    }

    let charts: &[usize] = match variant {
        Variant::Pssmlt1 => &[NEE],
        Variant::Pssmlt2 => &[PT],
        _ => &[NEE, PT],
    };
    let per_chart = if charts.len() == 1 { cfg.b_samples } else { cfg.b_samples / charts.len() };
    let estimates = estimate(fl, &target, charts, per_chart, &mut est_rng);
    let mut chains = Vec::new();
    for (k, (&c, e)) in charts.iter().zip(&estimates).enumerate() {
        let Some(s) = &e.seed else {
            return Err(FlatError::Seeding { variant, chart: c, samples: per_chart });
        };
        let mis = (variant == Variant::PssmltAvg).then_some(c);
        chains.push(PssChain {
            state: ChainPoint::evaluate(s.clone(), atlas, &target),
            splat: Splatter::new(fl, mis),
            rng: stream(seed, stream_id(TAG_CHAIN, k as u64)),
            steps: 0,
        });
    }
    let n_chains = chains.len() as u64;
    let lengths: Vec<u64> = (0..n_chains).map(|k| n_samples / n_chains + u64::from(k < n_samples % n_chains)).collect();
    let mut swap_rng = stream(seed, stream_id(TAG_SWAP, 0));
    let swaps = variant == Variant::Cmlt && cfg.swap_period > 0;
    let iterations = lengths[0];
    for t in 0..iterations {
        for (k, ch) in chains.iter_mut().enumerate() {
            if t < lengths[k] {
                ch.step(&target, &cfg.kernel, &mut diag);
            }
        }
        if swaps && (t + 1) % cfg.swap_period as u64 == 0 {
            let out = replica_swap(&chains[0].state, &chains[1].state, atlas, &mut swap_rng);
            if out.inversion_failed {
                diag.record_inversion_failure(MoveKind::ReplicaSwap);
            } else {
                diag.record(MoveKind::ReplicaSwap, out.acceptance, out.accepted);
            }
            if out.accepted {
                let (a, b) = out.result;
                chains[0].state = a;
                chains[1].state = b;
            }
        }
        let states: Vec<&Q::Path> = chains.iter().filter_map(|c| c.state.x.as_ref()).collect();
        observe(t, &states);
    }

    let mut total = ImageAccumulator::new(res, res);
    let mut bs = Vec::new();
    for (ch, e) in chains.iter().zip(&estimates) {
        total.add_scaled(&ch.splat.acc, e.mean * pixels / ch.steps as f64);
        bs.push(e.mean);
    }
    Ok(VariantOutput { image: total.to_image_scaled(1.0), b: bs, diagnostics: diag })
}

fn run_ipsm<Q: FlatProblem, T: TargetDistribution<Q::Path> + ?Sized>(
    fl: &Q,
    weighted: &T,
    n_samples: u64,
    seed: u64,
    cfg: &VariantConfig,
    est_rng: &mut Stream,
    observe: &mut dyn FnMut(u64, &[&Q::Path]),
) -> Result<VariantOutput, FlatError> {
    // Draws from both charts weighted by f* / (p1 + p2) estimate int f* and
    // resample a seed proportional to f*.
    let per_chart = cfg.b_samples / 2;
    let mut total_w = 0.0;
    let mut b = 0.0;
    let mut seed_point = None;
    for c in [NEE, PT] {
        let mut sum = 0.0;
        for _ in 0..per_chart {
            let u = uniform_vec(est_rng, fl.atlas().chart(c).dim());
            let Some(x) = fl.atlas().chart(c).forward(&u) else {
                continue;
            };
            let w = weighted.eval(c, &x);
            if w > 0.0 && w.is_finite() {
                sum += w;
                total_w += w;
                if est_rng.gen::<f64>() * total_w < w {
                    seed_point = Some(x);
                }
            }
        }
        b += sum / per_chart.max(1) as f64;
    }
    let Some(x0) = seed_point else {
        return Err(FlatError::Seeding { variant: Variant::CmltIpsm, chart: PT, samples: per_chart });
    };
    let mut diag = Diagnostics::default();
    let mut rng = stream(seed, stream_id(TAG_CHAIN, 0));
    let mut splat = Splatter::new(fl, None);
    let target = |x: &Q::Path| fl.star(x);
    let v0 = fl.star(&x0);
    let mut state = (x0, v0);
    for t in 0..n_samples {
        let chart = fl.atlas().chart((t % 2) as usize);
        let d = inverse_primary_perturbation(&state, chart, &cfg.kernel, target, &mut rng);
        if d.proposal.is_none() {
            diag.record_inversion_failure(MoveKind::InversePerturbation);
        } else {
            diag.record(MoveKind::InversePerturbation, d.acceptance, d.accepted);
        }
        splat.splat(&state.0, 1.0 - d.acceptance);
        if let Some((y, _)) = &d.proposal {
            splat.splat(y, d.acceptance);
        }
        if d.accepted {
            state = d.proposal.unwrap();
        }
        observe(t, &[&state.0]);
    }
    let res = fl.resolution();
    let image = splat.acc.to_image_scaled(b * (res * res) as f64 / n_samples as f64);
    Ok(VariantOutput { image, b: vec![b], diagnostics: diag })
}
