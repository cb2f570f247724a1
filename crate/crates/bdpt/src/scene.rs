//! Planar-primitive scenes: quads and triangles with layered materials,
//! one-sided area lights and a pinhole camera.

use crate::error::SceneError;
use crate::path::CAMERA;
use cmlt_bsdf::LayeredBsdf;
use cmlt_core::{Rgb, Vec3};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Parallelogram `origin + a edge1 + b edge2`, `a, b` in `[0,1]`.
    Quad {
        origin: Vec3,
        edge1: Vec3,
        edge2: Vec3,
    },
    Triangle {
        a: Vec3,
        b: Vec3,
        c: Vec3,
    },
}

impl Shape {
    fn raw_normal(&self) -> Vec3 {
        match *self {
            Shape::Quad { edge1, edge2, .. } => edge1.cross(edge2),
            Shape::Triangle { a, b, c } => (b - a).cross(c - a),
        }
    }

    pub fn normal(&self) -> Vec3 {
        self.raw_normal().normalized()
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape::Quad { .. } => self.raw_normal().length(),
            Shape::Triangle { .. } => 0.5 * self.raw_normal().length(),
        }
    }

    /// Uniform-area point from `(a, b)` in the unit square.
    pub fn sample(&self, a: f64, b: f64) -> Vec3 {
        match *self {
            Shape::Quad { origin, edge1, edge2 } => origin + edge1 * a + edge2 * b,
            Shape::Triangle { a: pa, b: pb, c: pc } => {
                let r = a.sqrt();
                pa * (1.0 - r) + pb * (r * (1.0 - b)) + pc * (r * b)
            }
        }
    }

    /// Inverse of [`sample`](Self::sample) for points on the primitive.
    pub fn invert(&self, p: Vec3) -> (f64, f64) {
        match *self {
            Shape::Quad { origin, edge1, edge2 } => {
                let (a, b) = plane_coords(p - origin, edge1, edge2);
                (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0))
            }
            Shape::Triangle { a: pa, b: pb, c: pc } => {
                let (l1, l2) = plane_coords(p - pa, pb - pa, pc - pa);
                let r = (l1 + l2).clamp(0.0, 1.0);
                let b = if r > 0.0 { (l2 / r).clamp(0.0, 1.0) } else { 0.0 };
                (r * r, b)
            }
        }
    }

    fn bounds(&self) -> (Vec3, Vec3) {
        let pts: Vec<Vec3> = match *self {
            Shape::Quad { origin, edge1, edge2 } => {
                vec![origin, origin + edge1, origin + edge2, origin + edge1 + edge2]
            }
            Shape::Triangle { a, b, c } => vec![a, b, c],
        };
        let mut lo = pts[0];
        let mut hi = pts[0];
        for p in pts {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        (lo, hi)
    }
}

/// Coordinates of `d` in the (possibly skew) basis `e1, e2` of their plane.
fn plane_coords(d: Vec3, e1: Vec3, e2: Vec3) -> (f64, f64) {
    let a11 = e1.dot(e1);
    let a12 = e1.dot(e2);
    let a22 = e2.dot(e2);
    let b1 = d.dot(e1);
    let b2 = d.dot(e2);
    let det = a11 * a22 - a12 * a12;
    ((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    pub material: usize,
    /// Radiance leaving the front (normal) side.
    pub emission: Option<Rgb>,
}

/// Precomputed intersection data for one primitive.
#[derive(Debug, Clone, Copy)]
struct Accel {
    n: Vec3,
    d: f64,
    origin: Vec3,
    /// Dual basis: `alpha = (p - origin) . g1`, `beta = (p - origin) . g2`.
    g1: Vec3,
    g2: Vec3,
    triangle: bool,
    lo: Vec3,
    hi: Vec3,
}

impl Accel {
    fn new(s: &Shape) -> Self {
        let (origin, e1, e2, triangle) = match *s {
            Shape::Quad { origin, edge1, edge2 } => (origin, edge1, edge2, false),
            Shape::Triangle { a, b, c } => (a, b - a, c - a, true),
        };
        let n = e1.cross(e2).normalized();
        let a11 = e1.dot(e1);
        let a12 = e1.dot(e2);
        let a22 = e2.dot(e2);
        let det = a11 * a22 - a12 * a12;
        let g1 = (e1 * a22 - e2 * a12) / det;
        let g2 = (e2 * a11 - e1 * a12) / det;
        let (lo, hi) = s.bounds();
        Self { n, d: n.dot(origin), origin, g1, g2, triangle, lo, hi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Light {
    pub prim: usize,
    pub radiance: Rgb,
    pub area: f64,
    /// `max(radiance) * area * pi`, the selection weight.
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraDesc {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    /// Vertical field of view in degrees.
    pub fov: f64,
    pub width: usize,
    pub height: usize,
}

/// Pinhole camera with a box pixel filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub desc: CameraDesc,
    pub position: Vec3,
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    tan_x: f64,
    tan_y: f64,
    /// Film area at unit distance.
    pub film_area: f64,
}

impl Camera {
    pub fn new(desc: CameraDesc) -> Self {
        let forward = (desc.look_at - desc.position).normalized();
        let right = forward.cross(desc.up).normalized();
        let up = right.cross(forward);
        let tan_y = (desc.fov.to_radians() * 0.5).tan();
        let tan_x = tan_y * desc.width as f64 / desc.height as f64;
        Self { desc, position: desc.position, forward, right, up, tan_x, tan_y, film_area: 4.0 * tan_x * tan_y }
    }

    pub fn pixel_count(&self) -> usize {
        self.desc.width * self.desc.height
    }

    /// World direction through film point `(fx, fy)`, row 0 at the top.
    pub fn direction(&self, fx: f64, fy: f64) -> Vec3 {
        let x = (2.0 * fx - 1.0) * self.tan_x;
        let y = (1.0 - 2.0 * fy) * self.tan_y;
        (self.forward + self.right * x + self.up * y).normalized()
    }

    /// Film point hit by direction `d`, if it lands on the film.
    pub fn film(&self, d: Vec3) -> Option<(f64, f64)> {
        let z = d.dot(self.forward);
        if z <= 0.0 {
            return None;
        }
        let fx = 0.5 * (d.dot(self.right) / (z * self.tan_x) + 1.0);
        let fy = 0.5 * (1.0 - d.dot(self.up) / (z * self.tan_y));
        ((0.0..1.0).contains(&fx) && (0.0..1.0).contains(&fy)).then_some((fx, fy))
    }

    /// Importance `N_pix / (A cos^4)` for unit direction `d`, zero off film.
    pub fn importance(&self, d: Vec3) -> f64 {
        match self.film(d) {
            Some(_) => {
                let c = d.dot(self.forward);
                self.pixel_count() as f64 / (self.film_area * c * c * c * c)
            }
            None => 0.0,
        }
    }

    /// Solid-angle density of uniform film sampling, zero off film.
    pub fn direction_pdf(&self, d: Vec3) -> f64 {
        match self.film(d) {
            Some(_) => {
                let c = d.dot(self.forward);
                1.0 / (self.film_area * c * c * c)
            }
            None => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub prim: usize,
    pub p: Vec3,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub camera: Camera,
    pub materials: Vec<LayeredBsdf>,
    pub prims: Vec<Primitive>,
    pub lights: Vec<Light>,
    light_of_prim: Vec<Option<usize>>,
    light_cdf: Vec<f64>,
    accel: Vec<Accel>,
    pub diagonal: f64,
    /// Ray parameter guard relative to the scene size.
    pub eps: f64,
}

impl Scene {
    pub fn new(camera: CameraDesc, materials: Vec<LayeredBsdf>, prims: Vec<Primitive>) -> Result<Self, SceneError> {
        if camera.width == 0 || camera.height == 0 {
            return Err(SceneError::Invalid("camera resolution must be positive".into()));
        }
        let mut lights = Vec::new();
        let mut light_of_prim = vec![None; prims.len()];
        for (i, p) in prims.iter().enumerate() {
            if p.material >= materials.len() {
                return Err(SceneError::Invalid(format!("primitive {i} has no material {}", p.material)));
            }
            let area = p.shape.area();
            if !(area > 0.0) || !area.is_finite() {
                return Err(SceneError::Invalid(format!("primitive {i} is degenerate")));
            }
            if let Some(e) = p.emission {
                let power = e.max_component() * area * PI;
                if power > 0.0 {
                    light_of_prim[i] = Some(lights.len());
                    lights.push(Light { prim: i, radiance: e, area, power });
                }
            }
        }
        if lights.is_empty() {
            return Err(SceneError::NoEmitter);
        }
        let total: f64 = lights.iter().map(|l| l.power).sum();
        let mut acc = 0.0;
        let mut light_cdf = vec![0.0];
        for l in &lights {
            acc += l.power / total;
            light_cdf.push(acc);
        }
        *light_cdf.last_mut().unwrap() = 1.0;
        let accel: Vec<Accel> = prims.iter().map(|p| Accel::new(&p.shape)).collect();
        let mut lo = Vec3::splat_inf();
        let mut hi = -Vec3::splat_inf();
        for a in &accel {
            lo = lo.min(a.lo);
            hi = hi.max(a.hi);
        }
        let diagonal = (hi - lo).length();
        Ok(Self { camera: Camera::new(camera), materials, prims, lights, light_of_prim, light_cdf, accel, diagonal, eps: 1e-9 * diagonal })
    }

    pub fn normal(&self, prim: usize) -> Vec3 {
        self.accel[prim].n
    }

    pub fn material(&self, prim: usize) -> &LayeredBsdf {
        &self.materials[self.prims[prim].material]
    }

    pub fn light_of(&self, prim: usize) -> Option<&Light> {
        self.light_of_prim[prim].map(|i| &self.lights[i])
    }

    pub fn light_index(&self, prim: usize) -> Option<usize> {
        self.light_of_prim[prim]
    }

    /// Probability of choosing light `i`.
    pub fn light_prob(&self, i: usize) -> f64 {
        self.light_cdf[i + 1] - self.light_cdf[i]
    }

    /// `[lo, hi)` selector stratum of light `i`.
    pub fn light_stratum(&self, i: usize) -> (f64, f64) {
        (self.light_cdf[i], self.light_cdf[i + 1])
    }

    /// Light picked by selector `sel` (by power).
    pub fn pick_light(&self, sel: f64) -> usize {
        let n = self.lights.len();
        let i = self.light_cdf.partition_point(|&c| c <= sel);
        i.saturating_sub(1).min(n - 1)
    }

    /// Radiance leaving `prim` at its surface towards direction `w`.
    pub fn emitted(&self, prim: usize, w: Vec3) -> Rgb {
        match self.light_of(prim) {
            Some(l) if self.normal(prim).dot(w) > 0.0 => l.radiance,
            _ => Rgb::BLACK,
        }
    }

    /// Nearest hit along `o + t d` with `t` in `(eps, t_max)`, ignoring the
    /// primitives in `skip` (a ray cannot re-hit the plane it starts on).
    pub fn intersect(&self, o: Vec3, d: Vec3, t_max: f64, skip: [usize; 2]) -> Option<Hit> {
        let mut best_t = t_max;
        let mut best = None;
        for (i, a) in self.accel.iter().enumerate() {
            if i == skip[0] || i == skip[1] {
                continue;
            }
            let denom = a.n.dot(d);
            if denom == 0.0 {
                continue;
            }
            let t = (a.d - a.n.dot(o)) / denom;
            if !(t > self.eps && t < best_t) {
                continue;
            }
            let p = o + d * t;
            let rel = p - a.origin;
            let u = rel.dot(a.g1);
            let v = rel.dot(a.g2);
            let inside =
                if a.triangle { u >= 0.0 && v >= 0.0 && u + v <= 1.0 } else { (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v) };
            if inside {
                best_t = t;
                best = Some(Hit { t, prim: i, p });
            }
        }
        best
    }

    /// Mutual visibility of two surface or camera points; `prim` is
    /// `usize::MAX` for the camera.
    pub fn visible(&self, a: Vec3, pa: usize, b: Vec3, pb: usize) -> bool {
        let d = b - a;
        let len = d.length();
        // two points of one planar primitive never see each other
        if len == 0.0 || (pa == pb && pa != CAMERA) {
            return false;
        }
        self.intersect(a, d / len, len - self.eps, [pa, pb]).is_none()
    }

    pub fn total_light_power(&self) -> f64 {
        self.lights.iter().map(|l| l.power).sum()
    }

    pub fn from_toml_str(s: &str) -> Result<Self, SceneError> {
        let desc: SceneFile = toml::from_str(s).map_err(|e| SceneError::Parse(e.to_string()))?;
        desc.build()
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let s = std::fs::read_to_string(path).map_err(|e| SceneError::Io(path.display().to_string(), e))?;
        Self::from_toml_str(&s)
    }

    /// The built-in desk scene at the given resolution.
    pub fn desk(width: usize, height: usize) -> Self {
        let mut f: SceneFile = toml::from_str(DESK_SCENE).expect("built-in scene parses");
        f.camera.width = width;
        f.camera.height = height;
        f.build().expect("built-in scene is valid")
    }

    pub fn with_resolution(&self, width: usize, height: usize) -> Self {
        let mut desc = self.camera.desc;
        desc.width = width;
        desc.height = height;
        let mut s = self.clone();
        s.camera = Camera::new(desc);
        s
    }
}

trait SplatInf {
    fn splat_inf() -> Self;
}

impl SplatInf for Vec3 {
    fn splat_inf() -> Self {
        Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY)
    }
}

/// Text scene format.
///
/// ```toml
/// [camera]
/// position = [0.5, 0.5, 2.0]
/// look_at = [0.5, 0.5, 0.0]
/// up = [0.0, 1.0, 0.0]
/// fov = 40.0
/// width = 64
/// height = 64
///
/// [[material]]
/// name = "white"
/// diffuse = [0.7, 0.7, 0.7]
/// glossy = [0.0, 0.0, 0.0]   # optional
/// m = 10.0                   # optional GGX parameter (1 / width)
/// eta = 1.5                  # optional
///
/// [[quad]]
/// origin = [0, 0, 0]
/// edge1 = [1, 0, 0]
/// edge2 = [0, 0, 1]          # front side follows edge1 x edge2
/// material = "white"
/// emission = [4, 4, 4]       # optional
///
/// [[triangle]]
/// a = [0, 0, 0]
/// b = [1, 0, 0]
/// c = [0, 1, 0]
/// material = "white"
///
/// [[cuboid]]                 # six outward-facing quads
/// min = [0.2, 0.0, 0.2]
/// max = [0.4, 0.3, 0.4]
/// material = "white"
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub camera: CameraFile,
    #[serde(default, rename = "material")]
    pub materials: Vec<MaterialFile>,
    #[serde(default, rename = "quad")]
    pub quads: Vec<QuadFile>,
    #[serde(default, rename = "triangle")]
    pub triangles: Vec<TriangleFile>,
    #[serde(default, rename = "cuboid")]
    pub cuboids: Vec<CuboidFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraFile {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub up: [f64; 3],
    pub fov: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaterialFile {
    pub name: String,
    pub diffuse: [f64; 3],
    #[serde(default)]
    pub glossy: [f64; 3],
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_m() -> f64 {
    1.0
}

fn default_eta() -> f64 {
    1.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadFile {
    pub origin: [f64; 3],
    pub edge1: [f64; 3],
    pub edge2: [f64; 3],
    pub material: String,
    #[serde(default)]
    pub emission: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangleFile {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    pub material: String,
    #[serde(default)]
    pub emission: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CuboidFile {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub material: String,
}

impl SceneFile {
    pub fn build(&self) -> Result<Scene, SceneError> {
        let mut names = HashMap::new();
        let mut materials = Vec::new();
        for m in &self.materials {
            if !(m.m > 0.0) || !(m.eta > 1.0) {
                return Err(SceneError::Invalid(format!("material {} needs m > 0 and eta > 1", m.name)));
            }
            names.insert(m.name.clone(), materials.len());
            materials.push(LayeredBsdf::new(Rgb::from_array(m.diffuse), Rgb::from_array(m.glossy), m.m, m.eta));
        }
        let lookup = |n: &str| names.get(n).copied().ok_or_else(|| SceneError::Invalid(format!("unknown material {n}")));
        let v = Vec3::from_array;
        let mut prims = Vec::new();
        for q in &self.quads {
            prims.push(Primitive {
                shape: Shape::Quad { origin: v(q.origin), edge1: v(q.edge1), edge2: v(q.edge2) },
                material: lookup(&q.material)?,
                emission: q.emission.map(Rgb::from_array),
            });
        }
        for t in &self.triangles {
            prims.push(Primitive {
                shape: Shape::Triangle { a: v(t.a), b: v(t.b), c: v(t.c) },
                material: lookup(&t.material)?,
                emission: t.emission.map(Rgb::from_array),
            });
        }
        for c in &self.cuboids {
            let material = lookup(&c.material)?;
            for shape in cuboid_faces(v(c.min), v(c.max)) {
                prims.push(Primitive { shape, material, emission: None });
            }
        }
        let c = &self.camera;
        Scene::new(
            CameraDesc { position: v(c.position), look_at: v(c.look_at), up: v(c.up), fov: c.fov, width: c.width, height: c.height },
            materials,
            prims,
        )
    }
}

/// Outward-facing faces of an axis-aligned box.
fn cuboid_faces(lo: Vec3, hi: Vec3) -> Vec<Shape> {
    let d = hi - lo;
    let ex = Vec3::new(d.x, 0.0, 0.0);
    let ey = Vec3::new(0.0, d.y, 0.0);
    let ez = Vec3::new(0.0, 0.0, d.z);
    let q = |origin, edge1, edge2| Shape::Quad { origin, edge1, edge2 };
    vec![
        q(lo, ez, ey),      // -x
        q(lo + ex, ey, ez), // +x
        q(lo, ex, ez),      // -y
        q(lo + ey, ez, ex), // +y
        q(lo, ey, ex),      // -z
        q(lo + ez, ex, ey), // +z
    ]
}

/// Open-front room lit by a small shaded lamp above a glossy desk with a
/// glossy block on it.
pub const DESK_SCENE: &str = r#"
[camera]
position = [0.5, 0.62, 2.0]
look_at = [0.5, 0.4, 0.0]
up = [0.0, 1.0, 0.0]
fov = 37.0
width = 64
height = 64

[[material]]
name = "white"
diffuse = [0.72, 0.72, 0.72]

[[material]]
name = "red"
diffuse = [0.63, 0.07, 0.05]

[[material]]
name = "green"
diffuse = [0.12, 0.45, 0.09]

[[material]]
name = "lamp"
diffuse = [0.0, 0.0, 0.0]

[[material]]
name = "desk"
diffuse = [0.45, 0.27, 0.12]
glossy = [0.9, 0.9, 0.9]
m = 8.0
eta = 1.5

[[material]]
name = "metal"
diffuse = [0.03, 0.03, 0.03]
glossy = [0.95, 0.85, 0.6]
m = 12.0
eta = 3.0

# floor, ceiling, back, left, right; the front is open
[[quad]]
origin = [0.0, 0.0, 0.0]
edge1 = [0.0, 0.0, 1.0]
edge2 = [1.0, 0.0, 0.0]
material = "white"

[[quad]]
origin = [0.0, 1.0, 0.0]
edge1 = [1.0, 0.0, 0.0]
edge2 = [0.0, 0.0, 1.0]
material = "white"

[[quad]]
origin = [0.0, 0.0, 0.0]
edge1 = [1.0, 0.0, 0.0]
edge2 = [0.0, 1.0, 0.0]
material = "white"

[[quad]]
origin = [0.0, 0.0, 0.0]
edge1 = [0.0, 1.0, 0.0]
edge2 = [0.0, 0.0, 1.0]
material = "red"

[[quad]]
origin = [1.0, 0.0, 0.0]
edge1 = [0.0, 0.0, 1.0]
edge2 = [0.0, 1.0, 0.0]
material = "green"

# a small lamp inside a shade that opens downwards
[[material]]
name = "shade"
diffuse = [0.5, 0.5, 0.5]

[[quad]]
origin = [0.32, 0.62, 0.37]
edge1 = [0.06, 0.0, 0.0]
edge2 = [0.0, 0.0, 0.06]
material = "lamp"
emission = [140.0, 128.0, 105.0]

[[quad]]
origin = [0.29, 0.52, 0.34]
edge1 = [0.12, 0.0, 0.0]
edge2 = [0.0, 0.11, 0.0]
material = "shade"

[[quad]]
origin = [0.29, 0.52, 0.46]
edge1 = [0.12, 0.0, 0.0]
edge2 = [0.0, 0.11, 0.0]
material = "shade"

[[quad]]
origin = [0.29, 0.52, 0.34]
edge1 = [0.0, 0.0, 0.12]
edge2 = [0.0, 0.11, 0.0]
material = "shade"

[[quad]]
origin = [0.41, 0.52, 0.34]
edge1 = [0.0, 0.0, 0.12]
edge2 = [0.0, 0.11, 0.0]
material = "shade"

[[quad]]
origin = [0.29, 0.63, 0.34]
edge1 = [0.12, 0.0, 0.0]
edge2 = [0.0, 0.0, 0.12]
material = "shade"

[[cuboid]]
min = [0.12, 0.0, 0.15]
max = [0.88, 0.25, 0.65]
material = "desk"

[[cuboid]]
min = [0.55, 0.25, 0.3]
max = [0.72, 0.45, 0.45]
material = "metal"
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_sampling_round_trips() {
        let shapes = [
            Shape::Quad { origin: Vec3::new(0.1, 0.2, 0.3), edge1: Vec3::new(0.5, 0.1, 0.0), edge2: Vec3::new(0.0, 0.2, 0.7) },
            Shape::Triangle { a: Vec3::new(0.0, 0.0, 0.0), b: Vec3::new(1.0, 0.2, 0.0), c: Vec3::new(0.3, 1.0, 0.5) },
        ];
        for s in shapes {
            for &(a, b) in &[(0.3, 0.7), (0.9, 0.1), (0.5, 0.5)] {
                let (a2, b2) = s.invert(s.sample(a, b));
                assert!((a - a2).abs() < 1e-12 && (b - b2).abs() < 1e-12, "{s:?}");
            }
        }
    }

    #[test]
    fn camera_film_round_trip_and_importance_normalization() {
        let s = Scene::desk(64, 48);
        let c = &s.camera;
        let d = c.direction(0.3, 0.8);
        let (fx, fy) = c.film(d).unwrap();
        assert!((fx - 0.3).abs() < 1e-12 && (fy - 0.8).abs() < 1e-12);
        assert!(c.film(-c.forward).is_none());
        // importance * cos integrated over solid angle equals the pixel count.
        let n = 400;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let fx = (i as f64 + 0.5) / n as f64;
                let fy = (j as f64 + 0.5) / n as f64;
                let d = c.direction(fx, fy);
                let cos = d.dot(c.forward);
                let dw = c.film_area / (n * n) as f64 * cos * cos * cos;
                sum += c.importance(d) * cos * dw;
            }
        }
        assert!((sum / c.pixel_count() as f64 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn desk_scene_loads_and_camera_ray_hits() {
        let s = Scene::desk(32, 32);
        assert_eq!(s.lights.len(), 1);
        let h = s.intersect(s.camera.position, s.camera.forward, f64::INFINITY, [usize::MAX; 2]).unwrap();
        assert!(h.p.z.abs() < 1e-12, "{h:?}");
        assert_eq!(s.pick_light(0.999), 0);
    }

    #[test]
    fn toml_errors_are_reported() {
        assert!(matches!(Scene::from_toml_str("nonsense"), Err(SceneError::Parse(_))));
        let no_light = DESK_SCENE.replace("emission = [140.0, 128.0, 105.0]", "");
        assert!(matches!(Scene::from_toml_str(&no_light), Err(SceneError::NoEmitter)));
        let bad = DESK_SCENE.replace("material = \"metal\"", "material = \"gold\"");
        assert!(matches!(Scene::from_toml_str(&bad), Err(SceneError::Invalid(_))));
    }

    #[test]
    fn cuboid_faces_point_outwards() {
        let lo = Vec3::new(0.0, 0.0, 0.0);
        let hi = Vec3::new(1.0, 2.0, 3.0);
        let c = (lo + hi) * 0.5;
        for f in cuboid_faces(lo, hi) {
            let p = f.sample(0.5, 0.5);
            assert!(f.normal().dot(p - c) > 0.0, "{f:?}");
        }
    }

    #[test]
    fn occluded_segment_is_not_visible() {
        let s = Scene::desk(16, 16);
        // floor under the desk to the ceiling
        let a = Vec3::new(0.5, 0.0, 0.4);
        let b = Vec3::new(0.5, 1.0, 0.4);
        assert!(!s.visible(a, 0, b, 1));
        let a = Vec3::new(0.05, 0.0, 0.9);
        let b = Vec3::new(0.05, 1.0, 0.9);
        assert!(s.visible(a, 0, b, 1));
    }
}
