//! Bidirectional techniques as sampling charts of path space.

use crate::measure::{chart_slot, forward, technique_pdf};
use crate::path::{Path, Technique, Vertex};
use crate::sampling::{slot_inverse_density, slot_invert, slot_pdf, Side};
use crate::scene::Scene;
use cmlt_core::SamplingChart;
use std::sync::Arc;

/// Which sampler produces chart slot `i` (= path vertex `x_i`), its index
/// along that subpath and its two predecessors on the subpath.
pub fn slot_context(path: &Path, tech: Technique, i: usize) -> (Side, usize, Option<&Vertex>, Option<&Vertex>) {
    let x = &path.vertices;
    let k = tech.k();
    if i < tech.s {
        (Side::Light, i, i.checked_sub(2).map(|j| &x[j]), i.checked_sub(1).map(|j| &x[j]))
    } else {
        let get = |j: usize| (j <= k).then(|| &x[j]);
        (Side::Eye, k - i, get(i + 2), get(i + 1))
    }
}

/// Inverts chart slot `i` of `path` under technique `tech`.
pub fn invert_slot(scene: &Scene, path: &Path, tech: Technique, i: usize, v: [f64; 3]) -> Option<[f64; 3]> {
    let (side, idx, prev2, prev) = slot_context(path, tech, i);
    slot_invert(scene, side, idx, prev2, prev, &path.vertices[i], v)
}

/// Inverse density factor of chart slot `i` at slot coordinates `u`.
pub fn slot_r(scene: &Scene, path: &Path, tech: Technique, i: usize, u: &[f64]) -> f64 {
    let (side, idx, prev2, prev) = slot_context(path, tech, i);
    slot_inverse_density(scene, side, idx, prev2, prev, &path.vertices[i], u)
}

/// Full right inverse of chart `tech`; `v` holds three numbers per slot.
pub fn invert_path(scene: &Scene, path: &Path, tech: Technique, v: &[f64]) -> Option<Vec<f64>> {
    if tech.k() != path.k() || !tech.is_valid() {
        return None;
    }
    let mut u = vec![0.0; tech.dim()];
    // each subpath is inverted from its end backwards
    let order = (0..tech.s).rev().chain(tech.s..=tech.k());
    for i in order {
        let vi = [v[3 * i], v[3 * i + 1], v[3 * i + 2]];
        let c = invert_slot(scene, path, tech, i, vi)?;
        u[3 * i..3 * i + 3].copy_from_slice(&c);
    }
    Some(u)
}

/// Product of slot inverse densities, `r_{s,t}(u)` for `x = T_{s,t}(u)`.
pub fn inverse_density(scene: &Scene, path: &Path, tech: Technique, u: &[f64]) -> f64 {
    (0..=tech.k()).map(|i| slot_r(scene, path, tech, i, &u[3 * i..3 * i + 3])).product()
}

/// The same vertices re-labelled as a sample of `tech`, with the cached
/// per-vertex densities of that technique.
pub fn relabel(scene: &Scene, path: &Path, tech: Technique) -> Path {
    assert_eq!(tech.k(), path.k());
    let mut out = Path { vertices: path.vertices.clone(), technique: tech };
    for i in 0..=tech.k() {
        let (side, idx, prev2, prev) = slot_context(path, tech, i);
        out.vertices[i].pdf_fwd = slot_pdf(scene, side, idx, prev2, prev, &path.vertices[i]);
    }
    out
}

/// Technique `(s,t)` as a chart over paths with `s + t - 1` edges.
#[derive(Debug, Clone)]
pub struct TechniqueChart {
    pub scene: Arc<Scene>,
    pub tech: Technique,
}

impl TechniqueChart {
    pub fn new(scene: Arc<Scene>, tech: Technique) -> Self {
        assert!(tech.is_valid(), "invalid technique {tech:?}");
        Self { scene, tech }
    }
}

impl SamplingChart for TechniqueChart {
    type Point = Path;

    fn dim(&self) -> usize {
        self.tech.dim()
    }

    fn reverse_dim(&self) -> usize {
        self.tech.dim()
    }

    fn forward(&self, u: &[f64]) -> Option<Path> {
        forward(&self.scene, self.tech, u)
    }

    fn right_inverse(&self, x: &Path, v: &[f64]) -> Option<Vec<f64>> {
        invert_path(&self.scene, x, self.tech, v)
    }

    fn density(&self, x: &Path) -> f64 {
        if x.k() != self.tech.k() {
            return 0.0;
        }
        technique_pdf(&self.scene, &x.vertices, self.tech)
    }

    fn inverse_density(&self, u: &[f64], x: &Path) -> f64 {
        inverse_density(&self.scene, x, self.tech, u)
    }
}

/// Atlas of all techniques for paths with `k` edges, ordered by `s`.
pub fn family_atlas(scene: Arc<Scene>, k: usize) -> cmlt_core::SamplingAtlas<Path> {
    cmlt_core::SamplingAtlas::new(
        Technique::family(k).map(|t| Box::new(TechniqueChart::new(scene.clone(), t)) as cmlt_core::chart::BoxedChart<Path>).collect(),
    )
}

/// Chart index of slot `j` on `side`, re-exported for callers that build
/// chart vectors from subpath coordinates.
pub fn slot_offset(tech: Technique, side: Side, j: usize) -> usize {
    3 * chart_slot(tech, side, j)
}

/// Chart coordinates of technique `(s,t)` from subpath coordinate vectors.
pub fn chart_coordinates(tech: Technique, light_u: &[f64], eye_u: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; tech.dim()];
    u[..3 * tech.s].copy_from_slice(&light_u[..3 * tech.s]);
    for j in 0..tech.t {
        let o = slot_offset(tech, Side::Eye, j);
        u[o..o + 3].copy_from_slice(&eye_u[3 * j..3 * j + 3]);
    }
    u
}
