//! Measurement contribution, technique densities, MIS weights and targets.

use crate::path::{Path, Subpath, Technique, Vertex};
use crate::sampling::{frame_towards, slot_pdf, Side};
use crate::scene::Scene;
use cmlt_core::{Rgb, TargetMode};
use std::cell::Cell;

thread_local! {
    static F_EVALS: Cell<u64> = const { Cell::new(0) };
}

/// Number of measurement-contribution evaluations on this thread.
pub fn evaluation_count() -> u64 {
    F_EVALS.with(|c| c.get())
}

fn count_evaluation() {
    F_EVALS.with(|c| c.set(c.get() + 1));
}

/// Geometry term with unsigned cosines; the camera uses its view axis.
fn geometry(a: &Vertex, b: &Vertex) -> f64 {
    let d = b.p - a.p;
    let d2 = d.length_squared();
    let w = d / d2.sqrt();
    a.n.dot(w).abs() * b.n.dot(w).abs() / d2
}

/// BSDF value at `x_i` between its two neighbours.
fn scattering(scene: &Scene, prev: &Vertex, v: &Vertex, next: &Vertex) -> Rgb {
    let wi = (prev.p - v.p).normalized();
    let wo = (next.p - v.p).normalized();
    let f = frame_towards(scene, v, wi);
    scene.material(v.prim).eval(f.to_local(wi), f.to_local(wo))
}

/// `L_e G prod(f_s G) W_e` without visibility tests.
fn unoccluded_contribution(scene: &Scene, x: &[Vertex]) -> Rgb {
    count_evaluation();
    let k = x.len() - 1;
    if k < 1 || !x[k].is_camera() || x[0].is_camera() {
        return Rgb::BLACK;
    }
    let mut f = scene.emitted(x[0].prim, (x[1].p - x[0].p).normalized());
    if f.is_black() {
        return f;
    }
    f *= geometry(&x[0], &x[1]);
    for i in 1..k {
        if x[i].is_camera() {
            return Rgb::BLACK;
        }
        f *= scattering(scene, &x[i - 1], &x[i], &x[i + 1]) * geometry(&x[i], &x[i + 1]);
        if f.is_black() {
            return f;
        }
    }
    f * scene.camera.importance((x[k - 1].p - x[k].p).normalized())
}

/// Measurement contribution of a path, testing every edge for visibility.
pub fn measurement_contribution(scene: &Scene, x: &[Vertex]) -> Rgb {
    for w in x.windows(2) {
        if !scene.visible(w[0].p, w[0].prim, w[1].p, w[1].prim) {
            return Rgb::BLACK;
        }
    }
    unoccluded_contribution(scene, x)
}

/// `p_{s, k+1-s}(x)` for every `s` in `0..=k`.
pub fn technique_pdfs(scene: &Scene, x: &[Vertex]) -> Vec<f64> {
    let k = x.len() - 1;
    let opt = |i: isize| -> Option<&Vertex> { (i >= 0 && (i as usize) <= k).then(|| &x[i as usize]) };
    let mut suffix = vec![1.0; k + 2];
    for i in (0..=k).rev() {
        let ii = i as isize;
        let pe = slot_pdf(scene, Side::Eye, k - i, opt(ii + 2), opt(ii + 1), &x[i]);
        suffix[i] = suffix[i + 1] * pe;
    }
    let mut out = Vec::with_capacity(k + 1);
    let mut prefix = 1.0;
    for s in 0..=k {
        out.push(prefix * suffix[s]);
        let si = s as isize;
        prefix *= slot_pdf(scene, Side::Light, s, opt(si - 2), opt(si - 1), &x[s]);
    }
    out
}

/// `p_{s,t}(x)`, the product of the light and eye subpath densities.
pub fn technique_pdf(scene: &Scene, x: &[Vertex], tech: Technique) -> f64 {
    assert_eq!(tech.k(), x.len() - 1, "technique does not match path length");
    technique_pdfs(scene, x)[tech.s]
}

/// Balance-heuristic weight of `tech` within the path's length family.
pub fn mis_weight(scene: &Scene, x: &[Vertex], tech: Technique) -> f64 {
    let p = technique_pdfs(scene, x);
    let sum: f64 = p.iter().sum();
    if sum > 0.0 {
        p[tech.s] / sum
    } else {
        0.0
    }
}

/// Contribution and densities of a path built by its own technique.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Measurement contribution `f(x)`.
    pub f: Rgb,
    /// `p_{s,t}(x)` of the path's technique.
    pub pdf: f64,
    /// Sum of the technique densities of the length family.
    pub pdf_sum: f64,
    /// Visibility of the connecting edge (1 for `s = 0`).
    pub connection_visible: bool,
}

impl Evaluation {
    pub fn zero() -> Self {
        Self { f: Rgb::BLACK, pdf: 0.0, pdf_sum: 0.0, connection_visible: false }
    }

    /// `f / sum_j p_j`, the MIS-weighted contribution `C_{s,t}`.
    pub fn weighted(&self) -> Rgb {
        if self.pdf_sum > 0.0 {
            self.f / self.pdf_sum
        } else {
            Rgb::BLACK
        }
    }

    pub fn target(&self, mode: TargetMode) -> f64 {
        let fs = self.f.max_component();
        match mode {
            TargetMode::ImportanceSampled if self.pdf > 0.0 => fs / self.pdf,
            TargetMode::Weighted if self.pdf_sum > 0.0 => fs / self.pdf_sum,
            TargetMode::Auxiliary if self.pdf > 0.0 => f64::from(u8::from(self.connection_visible)),
            _ => 0.0,
        }
    }
}

/// Evaluates a path whose traced edges are known to be unoccluded: only
/// the connecting edge is tested.
pub fn evaluate(scene: &Scene, path: &Path) -> Evaluation {
    let x = &path.vertices;
    let s = path.technique.s;
    let visible = s == 0 || scene.visible(x[s - 1].p, x[s - 1].prim, x[s].p, x[s].prim);
    let pdfs = technique_pdfs(scene, x);
    let f = if visible { unoccluded_contribution(scene, x) } else { Rgb::BLACK };
    Evaluation { f, pdf: pdfs[s], pdf_sum: pdfs.iter().sum(), connection_visible: visible }
}

/// Joins two subpaths and returns the path with its MIS-weighted
/// contribution `f / sum p`. Zero when occluded.
pub fn connect(scene: &Scene, light: &[Vertex], eye: &[Vertex]) -> (Path, Rgb) {
    let path = Path::join(light, eye);
    let c = evaluate(scene, &path).weighted();
    (path, c)
}

/// Target value of chart `tech` at `u`; zero when a subpath dies.
pub fn target_eval(scene: &Scene, mode: TargetMode, tech: Technique, u: &[f64]) -> f64 {
    match forward(scene, tech, u) {
        Some(p) => evaluate(scene, &p).target(mode),
        None => 0.0,
    }
}

/// Coordinates of eye slot `j` inside a chart vector: slot `i` of the chart
/// always produces path vertex `x_i`, so eye slots are stored back to front.
#[inline]
pub fn chart_slot(tech: Technique, side: Side, idx: usize) -> usize {
    match side {
        Side::Light => idx,
        Side::Eye => tech.k() - idx,
    }
}

/// The forward map of chart `tech`. `None` when a subpath escapes.
pub fn forward(scene: &Scene, tech: Technique, u: &[f64]) -> Option<Path> {
    debug_assert_eq!(u.len(), tech.dim());
    let light = crate::sampling::sample_light_subpath(scene, u, tech.s);
    if !light.alive() {
        return None;
    }
    let mut ue = [0.0; 3 * (crate::MAX_K + 1)];
    for j in 0..tech.t {
        let c = 3 * chart_slot(tech, Side::Eye, j);
        ue[3 * j..3 * j + 3].copy_from_slice(&u[c..c + 3]);
    }
    let eye = crate::sampling::sample_eye_subpath(scene, &ue[..3 * tech.t], tech.t);
    if !eye.alive() {
        return None;
    }
    Some(Path::join(&light.vertices, &eye.vertices))
}

/// Joins prefixes of two subpaths, `None` if either is too short.
pub fn join_prefixes(light: &Subpath, s: usize, eye: &Subpath, t: usize) -> Option<Path> {
    (s <= light.len() && t <= eye.len() && t >= 1 && s + t >= 2).then(|| Path::join(&light.vertices[..s], &eye.vertices[..t]))
}
