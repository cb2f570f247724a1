//! Vertices, subpaths and full paths.

use crate::scene::Scene;
use cmlt_core::Vec3;
use serde::{Deserialize, Serialize};

/// Primitive id of the pinhole vertex.
pub const CAMERA: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub p: Vec3,
    /// Geometric normal; the viewing direction for the camera vertex.
    pub n: Vec3,
    pub prim: usize,
    /// Area density of this vertex under the subpath sampler that made it.
    pub pdf_fwd: f64,
}

impl Vertex {
    pub fn camera(scene: &Scene) -> Self {
        Self { p: scene.camera.position, n: scene.camera.forward, prim: CAMERA, pdf_fwd: 1.0 }
    }

    pub fn is_camera(&self) -> bool {
        self.prim == CAMERA
    }
}

/// A bidirectional technique: `s` light vertices, `t` eye vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Technique {
    pub s: usize,
    pub t: usize,
}

impl Technique {
    pub fn new(s: usize, t: usize) -> Self {
        Self { s, t }
    }

    /// Number of edges of the paths it builds.
    pub fn k(&self) -> usize {
        self.s + self.t - 1
    }

    pub fn is_valid(&self) -> bool {
        self.t >= 1 && self.s + self.t >= 2
    }

    /// Primary dimension of the chart: three coordinates per vertex.
    pub fn dim(&self) -> usize {
        3 * (self.s + self.t)
    }

    /// All techniques for paths with `k` edges.
    pub fn family(k: usize) -> impl Iterator<Item = Technique> {
        (0..=k).map(move |s| Technique::new(s, k + 1 - s))
    }
}

/// Vertices produced by one subpath sampler, in sampling order.
#[derive(Debug, Clone, PartialEq)]
pub struct Subpath {
    pub vertices: Vec<Vertex>,
    pub requested: usize,
}

impl Subpath {
    /// False when the walk escaped before producing every vertex.
    pub fn alive(&self) -> bool {
        self.vertices.len() == self.requested
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// A path `x_0 .. x_k` from a light vertex to the camera, with the technique
/// that built it.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub vertices: Vec<Vertex>,
    pub technique: Technique,
}

impl Path {
    /// Joins light vertices `y_0..y_{s-1}` and eye vertices `z_0..z_{t-1}`.
    pub fn join(light: &[Vertex], eye: &[Vertex]) -> Self {
        let mut vertices = Vec::with_capacity(light.len() + eye.len());
        vertices.extend_from_slice(light);
        vertices.extend(eye.iter().rev().copied());
        Self { vertices, technique: Technique::new(light.len(), eye.len()) }
    }

    pub fn k(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Film coordinates of the last edge, if it lands on the film.
    pub fn film(&self, scene: &Scene) -> Option<(f64, f64)> {
        let k = self.k();
        let d = (self.vertices[k - 1].p - self.vertices[k].p).normalized();
        scene.camera.film(d)
    }

    /// Pixel index of the path on the film.
    pub fn pixel(&self, scene: &Scene) -> Option<(usize, usize)> {
        let (fx, fy) = self.film(scene)?;
        let w = scene.camera.desc.width;
        let h = scene.camera.desc.height;
        Some((((fx * w as f64) as usize).min(w - 1), ((fy * h as f64) as usize).min(h - 1)))
    }

    /// Largest vertex displacement to another path of the same length,
    /// infinite otherwise.
    pub fn distance(&self, o: &Path) -> f64 {
        if self.vertices.len() != o.vertices.len() {
            return f64::INFINITY;
        }
        self.vertices.iter().zip(&o.vertices).map(|(a, b)| a.p.distance(b.p)).fold(0.0, f64::max)
    }
}
