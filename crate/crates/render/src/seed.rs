//! Brightness estimation with a simplified bidirectional pass, and
//! contribution-proportional seed resampling.

use crate::error::RenderError;
use cmlt_bdpt::{chart_coordinates, evaluate, forward, sample_eye_subpath, sample_light_subpath, Path, Scene, Subpath, Technique, MAX_K};
use cmlt_core::rng::{fill_uniform, stream, stream_id};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Subpath pairs per seeding batch. Eye vertices connect to a random light
/// vertex stored by the same batch.
pub const SEED_BATCH: usize = 1024;
/// Light-subpath coordinates stored per seed.
pub const LIGHT_DIM: usize = 3 * MAX_K;
/// Eye-subpath coordinates stored per seed.
pub const EYE_DIM: usize = 3 * (MAX_K + 1);

const TAG_SEED: u32 = 21;
const TAG_RESAMPLE: u32 = 22;
const FLOOR: f64 = 1e-3;

/// How chains are split into independently normalized groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// One group per path length.
    Length,
    /// One group per technique `(s,t)`.
    Technique,
}

/// Brightness per technique, `e[k][s]`, in image units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTable {
    pub e: Vec<Vec<f64>>,
}

impl Default for EnergyTable {
    fn default() -> Self {
        Self { e: (0..=MAX_K).map(|k| vec![0.0; k + 1]).collect() }
    }
}

impl EnergyTable {
    pub fn get(&self, k: usize, s: usize) -> f64 {
        self.e[k][s]
    }

    /// Brightness of paths with `k` edges.
    pub fn length(&self, k: usize) -> f64 {
        self.e[k].iter().sum()
    }

    pub fn total(&self) -> f64 {
        (0..=MAX_K).map(|k| self.length(k)).sum()
    }

    fn add(&mut self, tech: Technique, c: f64) {
        self.e[tech.k()][tech.s] += c;
    }

    fn accumulate(&mut self, o: &EnergyTable) {
        for (a, b) in self.e.iter_mut().zip(&o.e) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    fn scaled(&self, f: f64) -> Self {
        Self { e: self.e.iter().map(|r| r.iter().map(|x| x * f).collect()).collect() }
    }

    /// Technique proposal for length `k`: shares of the length's energy,
    /// floored at `1e-3` and renormalized.
    pub fn proposal(&self, k: usize) -> TechniqueProposal {
        let total = self.length(k);
        let raw: Vec<f64> = if total > 0.0 { self.e[k].iter().map(|e| (e / total).max(FLOOR)).collect() } else { vec![1.0; k + 1] };
        TechniqueProposal::new(raw)
    }
}

/// Independent proposal over `s` for a fixed path length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueProposal {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl TechniqueProposal {
    pub fn new(weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { probs, cdf }
    }

    pub fn prob(&self, s: usize) -> f64 {
        self.probs[s]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample(&self, xi: f64) -> usize {
        let x = xi * self.cdf[self.cdf.len() - 1];
        self.cdf.partition_point(|&c| c <= x).min(self.probs.len() - 1)
    }
}

/// A resampled starting point of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedPath {
    pub path: Path,
    /// Scalar contribution `f*/p` of the seeding estimator, always positive.
    pub contribution: f64,
    pub technique: Technique,
    pub pixel: Option<(usize, usize)>,
    /// Chart coordinates of `technique`.
    pub u: Vec<f64>,
    /// Light- and eye-subpath coordinates the path was traced from.
    pub light_u: Vec<f64>,
    pub eye_u: Vec<f64>,
}

/// A set of chains sharing one normalization constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedGroup {
    pub k: usize,
    /// Set for per-technique groups.
    pub s: Option<usize>,
    /// Brightness of the group.
    pub energy: f64,
    /// Seeds `start..start + chains` belong to the group.
    pub start: usize,
    pub chains: usize,
}

#[derive(Debug, Clone)]
pub struct Seeding {
    /// Total image brightness estimate.
    pub b: f64,
    pub energy: EnergyTable,
    /// Seeds sorted by path length, then `s`.
    pub seeds: Vec<SeedPath>,
    pub groups: Vec<SeedGroup>,
    pub n_init: usize,
    /// Stored nonzero contributions.
    pub records: usize,
}

impl Seeding {
    /// Group index of every seed.
    pub fn group_of_seeds(&self) -> Vec<usize> {
        let mut out = vec![0; self.seeds.len()];
        for (g, grp) in self.groups.iter().enumerate() {
            out[grp.start..grp.start + grp.chains].fill(g);
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Record {
    c: f64,
    tech: Technique,
    light: u32,
    eye: u32,
}

struct Batch {
    light_u: Vec<f64>,
    eye_u: Vec<f64>,
    records: Vec<Record>,
}

fn batch_size(n_init: usize, index: usize) -> usize {
    SEED_BATCH.min(n_init - index * SEED_BATCH)
}

fn run_batch(scene: &Scene, seed: u64, index: usize, size: usize) -> Batch {
    let mut rng = stream(seed, stream_id(TAG_SEED, index as u64));
    let mut light_u = vec![0.0; size * LIGHT_DIM];
    let mut eye_u = vec![0.0; size * EYE_DIM];
    fill_uniform(&mut rng, &mut light_u);
    fill_uniform(&mut rng, &mut eye_u);
    let lights: Vec<Subpath> = light_u.chunks_exact(LIGHT_DIM).map(|u| sample_light_subpath(scene, u, MAX_K)).collect();
    let stored: Vec<(u32, u32)> = lights.iter().enumerate().flat_map(|(l, p)| (0..p.len()).map(move |i| (l as u32, i as u32))).collect();
    let scale = stored.len() as f64 / size as f64;
    let mut records = Vec::new();
    for (e, u) in eye_u.chunks_exact(EYE_DIM).enumerate() {
        let eye = sample_eye_subpath(scene, u, MAX_K + 1);
        for j in 0..eye.len() {
            if j >= 1 {
                let p = Path::join(&[], &eye.vertices[..=j]);
                let c = evaluate(scene, &p).weighted().max_component();
                if c > 0.0 {
                    records.push(Record { c, tech: p.technique, light: u32::MAX, eye: e as u32 });
                }
            }
            if stored.is_empty() {
                continue;
            }
            let (l, i) = stored[rng.gen_range(0..stored.len())];
            let s = i as usize + 1;
            if s + j > MAX_K {
                continue;
            }
            let p = Path::join(&lights[l as usize].vertices[..s], &eye.vertices[..=j]);
            let c = evaluate(scene, &p).weighted().max_component() * scale;
            if c > 0.0 {
                records.push(Record { c, tech: p.technique, light: l, eye: e as u32 });
            }
        }
    }
    Batch { light_u, eye_u, records }
}

fn group_key(g: Grouping, t: Technique) -> (usize, Option<usize>) {
    match g {
        Grouping::Length => (t.k(), None),
        Grouping::Technique => (t.k(), Some(t.s)),
    }
}

fn group_energy(table: &EnergyTable, key: (usize, Option<usize>)) -> f64 {
    match key {
        (k, None) => table.length(k),
        (k, Some(s)) => table.get(k, s),
    }
}

/// Chain counts proportional to `weights` by largest remainder, with at
/// least one chain for every positive weight.
pub fn allocate(weights: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let ideal: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
    let mut rest = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (ideal[b] - ideal[b].floor()).total_cmp(&(ideal[a] - ideal[a].floor())).then(a.cmp(&b)));
    for &i in &order {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    for (c, w) in counts.iter_mut().zip(weights) {
        if *w > 0.0 && *c == 0 {
            *c = 1;
        }
    }
    counts
}

/// Runs the seeding pass over `n_init` subpath pairs and resamples about
/// `n` seeds in proportion to their scalar contribution.
pub fn estimate_and_seed(scene: &Scene, n_init: usize, n: usize, grouping: Grouping, seed: u64) -> Result<Seeding, RenderError> {
    if n == 0 || n_init < n {
        return Err(RenderError::Invalid(format!("need n_init >= n >= 1, got n_init={n_init}, n={n}")));
    }
    let n_batches = n_init.div_ceil(SEED_BATCH);
    let tables: Vec<(EnergyTable, usize)> = (0..n_batches)
        .into_par_iter()
        .map(|i| {
            let b = run_batch(scene, seed, i, batch_size(n_init, i));
            let mut t = EnergyTable::default();
            for r in &b.records {
                t.add(r.tech, r.c);
            }
            (t, b.records.len())
        })
        .collect();
    let mut raw = EnergyTable::default();
    let mut records = 0;
    for (t, n) in &tables {
        raw.accumulate(t);
        records += n;
    }
    if !(raw.total() > 0.0) {
        return Err(RenderError::Seeding(n_init));
    }

    let all: Vec<(usize, Option<usize>)> = match grouping {
        Grouping::Length => (1..=MAX_K).map(|k| (k, None)).collect(),
        Grouping::Technique => (1..=MAX_K).flat_map(|k| (0..=k).map(move |s| (k, Some(s)))).collect(),
    };
    let keys: Vec<(usize, Option<usize>)> = all.into_iter().filter(|&key| group_energy(&raw, key) > 0.0).collect();
    let weights: Vec<f64> = keys.iter().map(|&key| group_energy(&raw, key)).collect();
    let counts = allocate(&weights, n);

    // (group, draw index, batch, residual inside the batch)
    let mut requests: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
    let mut groups = Vec::with_capacity(keys.len());
    let mut start = 0;
    for (g, (&key, &count)) in keys.iter().zip(&counts).enumerate() {
        let mut rng = stream(seed, stream_id(TAG_RESAMPLE, g as u64));
        let mut cum = Vec::with_capacity(n_batches);
        let mut acc = 0.0;
        for (t, _) in &tables {
            acc += group_energy(t, key);
            cum.push(acc);
        }
        let mut draws: Vec<f64> = (0..count).map(|_| rng.gen::<f64>() * acc).collect();
        draws.sort_by(f64::total_cmp);
        for (d, x) in draws.into_iter().enumerate() {
            let bi = cum.partition_point(|&c| c <= x).min(n_batches - 1);
            let before = if bi == 0 { 0.0 } else { cum[bi - 1] };
            requests.entry(bi).or_default().push((g, start + d, x - before));
        }
        groups.push(SeedGroup { k: key.0, s: key.1, energy: weights[g] / n_init as f64, start, chains: count });
        start += count;
    }

    let picked: Vec<Vec<(usize, SeedPath)>> = requests
        .into_par_iter()
        .map(|(bi, reqs)| {
            let batch = run_batch(scene, seed, bi, batch_size(n_init, bi));
            reqs.into_iter()
                .map(|(g, slot, residual)| {
                    let key = keys[g];
                    let mut acc = 0.0;
                    let mut chosen = None;
                    for r in batch.records.iter().filter(|r| group_key(grouping, r.tech) == key) {
                        acc += r.c;
                        chosen = Some(*r);
                        if acc > residual {
                            break;
                        }
                    }
                    let r = chosen.expect("batch holds the group's energy");
                    (slot, make_seed(scene, &batch, r))
                })
                .collect()
        })
        .collect();
    let mut slots: Vec<Option<SeedPath>> = vec![None; start];
    for (slot, s) in picked.into_iter().flatten() {
        slots[slot] = Some(s);
    }
    let mut seeds: Vec<SeedPath> = slots.into_iter().map(|s| s.expect("every slot is drawn")).collect();
    for grp in &groups {
        seeds[grp.start..grp.start + grp.chains].sort_by_key(|s| s.technique.s);
    }
    Ok(Seeding { b: raw.total() / n_init as f64, energy: raw.scaled(1.0 / n_init as f64), seeds, groups, n_init, records })
}

fn make_seed(scene: &Scene, batch: &Batch, r: Record) -> SeedPath {
    let light_u = if r.light == u32::MAX {
        vec![0.0; LIGHT_DIM]
    } else {
        let o = r.light as usize * LIGHT_DIM;
        batch.light_u[o..o + LIGHT_DIM].to_vec()
    };
    let o = r.eye as usize * EYE_DIM;
    let eye_u = batch.eye_u[o..o + EYE_DIM].to_vec();
    let u = chart_coordinates(r.tech, &light_u, &eye_u);
    let path = forward(scene, r.tech, &u).expect("seed coordinates reproduce a live path");
    SeedPath { pixel: path.pixel(scene), path, contribution: r.c, technique: r.tech, u, light_u, eye_u }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cmlt_bdpt::measure::target_eval;
    use cmlt_core::TargetMode;

    const DARK: &str = r#"
[camera]
position = [0.5, 0.5, 2.0]
look_at = [0.5, 0.5, 0.0]
up = [0.0, 1.0, 0.0]
fov = 40.0
width = 8
height = 8
[[material]]
name = "white"
diffuse = [0.7, 0.7, 0.7]
[[quad]]
origin = [0, 0, 0]
edge1 = [1, 0, 0]
edge2 = [0, 1, 0]
material = "white"
[[quad]]
origin = [0, 0, -1]
edge1 = [0, 1, 0]
edge2 = [1, 0, 0]
material = "white"
emission = [1, 1, 1]
"#;

    #[test]
    fn black_scene_fails_to_seed() {
        // the only emitter faces away from everything the camera can reach
        let scene = Scene::from_toml_str(DARK).unwrap();
        let r = estimate_and_seed(&scene, 2048, 16, Grouping::Length, 1);
        assert!(matches!(r, Err(RenderError::Seeding(2048))), "{r:?}");
    }

    #[test]
    fn bad_sizes_are_rejected() {
        let scene = Scene::desk(8, 8);
        assert!(matches!(estimate_and_seed(&scene, 4, 8, Grouping::Length, 1), Err(RenderError::Invalid(_))));
        assert!(matches!(estimate_and_seed(&scene, 4, 0, Grouping::Length, 1), Err(RenderError::Invalid(_))));
    }

    #[test]
    fn allocation_is_proportional_with_a_floor() {
        assert_eq!(allocate(&[1.0, 1.0, 2.0], 8), vec![2, 2, 4]);
        assert_eq!(allocate(&[1000.0, 1.0, 0.0], 10), vec![10, 1, 0]);
        assert_eq!(allocate(&[1.0, 1.0, 1.0], 10).iter().sum::<usize>(), 10);
    }

    #[test]
    fn proposal_floor_keeps_every_technique() {
        let mut t = EnergyTable::default();
        t.e[3] = vec![0.0, 1.0, 3.0, 0.0];
        let q = t.proposal(3);
        assert!((q.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(q.prob(0) > 0.0 && q.prob(0) < 2e-3);
        assert!((q.prob(2) / q.prob(1) - 3.0).abs() < 1e-12);
        assert_eq!(q.sample(0.0), 0);
        assert_eq!(q.sample(0.999_999_9), 3);
        assert_eq!(t.proposal(2).probs(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn seeds_are_sorted_live_and_grouped() {
        let scene = Scene::desk(8, 8);
        let sd = estimate_and_seed(&scene, 4096, 64, Grouping::Length, 3).unwrap();
        assert!(sd.b > 0.0);
        assert!(sd.seeds.windows(2).all(|w| w[0].technique.k() <= w[1].technique.k()));
        for (g, grp) in sd.groups.iter().enumerate() {
            assert!(grp.chains >= 1, "group {g}");
            for s in &sd.seeds[grp.start..grp.start + grp.chains] {
                assert_eq!(s.technique.k(), grp.k);
                assert!(s.contribution > 0.0);
                let w = target_eval(&scene, TargetMode::Weighted, s.technique, &s.u);
                assert!(w > 0.0);
            }
        }
        let again = estimate_and_seed(&scene, 4096, 64, Grouping::Length, 3).unwrap();
        assert_eq!(again.b, sd.b);
        assert_eq!(again.seeds, sd.seeds);
    }
}
