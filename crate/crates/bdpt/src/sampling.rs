//! Local path sampling with a fixed budget of three coordinates per vertex,
//! its per-vertex inverses and densities.
//!
//! Slot `i` of a subpath produces vertex `i`:
//!
//! | side  | slot | coordinates `[c0, c1, c2]`                     |
//! |-------|------|------------------------------------------------|
//! | light | 0    | light selector, position on the light          |
//! | light | 1    | unused, cosine-weighted emission direction     |
//! | eye   | 0    | unused (pinhole)                               |
//! | eye   | 1    | unused, film point                             |
//! | both  | >= 2 | layer selector, BSDF direction at vertex `i-1` |

use crate::path::{Subpath, Vertex, CAMERA};
use crate::scene::Scene;
use cmlt_bsdf::{lambert, Frame};
use cmlt_core::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Light,
    Eye,
}

/// Shading frame at `v` with the normal flipped to the side of `wi`.
pub fn frame_towards(scene: &Scene, v: &Vertex, wi: Vec3) -> Frame {
    let n = scene.normal(v.prim);
    Frame::from_normal(if n.dot(wi) < 0.0 { -n } else { n })
}

/// Solid angle to area conversion at `cur` for a direction leaving `from`.
#[inline]
fn area_factor(from: Vec3, cur: &Vertex) -> f64 {
    let d = cur.p - from;
    let d2 = d.length_squared();
    (cur.n.dot(d).abs() / d2.sqrt()) / d2
}

fn trace(scene: &Scene, from: &Vertex, wo: Vec3) -> Option<Vertex> {
    let skip = if from.is_camera() { [CAMERA, CAMERA] } else { [from.prim, CAMERA] };
    let h = scene.intersect(from.p, wo, f64::INFINITY, skip)?;
    Some(Vertex { p: h.p, n: scene.normal(h.prim), prim: h.prim, pdf_fwd: 0.0 })
}

/// Area density with which slot `idx` of `side` produces `cur`, given the
/// two preceding subpath vertices. Zero when it cannot.
pub fn slot_pdf(scene: &Scene, side: Side, idx: usize, prev2: Option<&Vertex>, prev: Option<&Vertex>, cur: &Vertex) -> f64 {
    match (side, idx) {
        (Side::Light, 0) => match scene.light_index(cur.prim) {
            Some(i) if !cur.is_camera() => scene.light_prob(i) / scene.lights[i].area,
            _ => 0.0,
        },
        (Side::Eye, 0) => {
            if cur.is_camera() {
                1.0
            } else {
                0.0
            }
        }
        _ if cur.is_camera() => 0.0,
        (Side::Light, 1) => {
            let y0 = prev.expect("slot 1 has a predecessor");
            let d = (cur.p - y0.p).normalized();
            let cos = scene.normal(y0.prim).dot(d);
            if cos <= 0.0 {
                return 0.0;
            }
            cos * std::f64::consts::FRAC_1_PI * area_factor(y0.p, cur)
        }
        (Side::Eye, 1) => {
            let z0 = prev.expect("slot 1 has a predecessor");
            let d = (cur.p - z0.p).normalized();
            scene.camera.direction_pdf(d) * area_factor(z0.p, cur)
        }
        _ => {
            let (a, b) = (prev2.expect("two predecessors"), prev.expect("two predecessors"));
            if b.is_camera() {
                return 0.0;
            }
            let wi = (a.p - b.p).normalized();
            let wo = (cur.p - b.p).normalized();
            let f = frame_towards(scene, b, wi);
            scene.material(b.prim).pdf(f.to_local(wi), f.to_local(wo)) * area_factor(b.p, cur)
        }
    }
}

/// Coordinates with which slot `idx` reproduces `cur`, using `v` for the
/// free coordinates and the layer choice. `None` if `cur` is unreachable.
pub fn slot_invert(
    scene: &Scene,
    side: Side,
    idx: usize,
    prev2: Option<&Vertex>,
    prev: Option<&Vertex>,
    cur: &Vertex,
    v: [f64; 3],
) -> Option<[f64; 3]> {
    match (side, idx) {
        (Side::Light, 0) => {
            let li = scene.light_index(cur.prim)?;
            let (lo, hi) = scene.light_stratum(li);
            let (a, b) = scene.prims[cur.prim].shape.invert(cur.p);
            Some([lo + v[0] * (hi - lo), a, b])
        }
        (Side::Eye, 0) => cur.is_camera().then_some(v),
        _ if cur.is_camera() => None,
        (Side::Light, 1) => {
            let y0 = prev?;
            let f = Frame::from_normal(scene.normal(y0.prim));
            let (a, b) = lambert::invert(f.to_local((cur.p - y0.p).normalized()))?;
            Some([v[0], a, b])
        }
        (Side::Eye, 1) => {
            let z0 = prev?;
            let (fx, fy) = scene.camera.film((cur.p - z0.p).normalized())?;
            Some([v[0], fx, fy])
        }
        _ => {
            let (a, b) = (prev2?, prev?);
            if b.is_camera() {
                return None;
            }
            let wi = (a.p - b.p).normalized();
            let wo = (cur.p - b.p).normalized();
            let f = frame_towards(scene, b, wi);
            let (u, _) = scene.material(b.prim).invert(f.to_local(wo), f.to_local(wi), v[0])?;
            Some(u)
        }
    }
}

/// Inverse density factor of slot `idx` at coordinates `u`: the reciprocal
/// area density for bijective slots, and for BSDF slots the reciprocal of
/// the density of the lobe that `u`'s selector picks.
pub fn slot_inverse_density(
    scene: &Scene,
    side: Side,
    idx: usize,
    prev2: Option<&Vertex>,
    prev: Option<&Vertex>,
    cur: &Vertex,
    u: &[f64],
) -> f64 {
    let r = if idx >= 2 {
        let (a, b) = (prev2.expect("two predecessors"), prev.expect("two predecessors"));
        if b.is_camera() || cur.is_camera() {
            return f64::INFINITY;
        }
        let wi = (a.p - b.p).normalized();
        let wo = (cur.p - b.p).normalized();
        let f = frame_towards(scene, b, wi);
        let inv = scene.material(b.prim).inverse_density([u[0], u[1], u[2]], f.to_local(wi), f.to_local(wo));
        return inv / area_factor(b.p, cur);
    } else {
        slot_pdf(scene, side, idx, prev2, prev, cur)
    };
    if r > 0.0 {
        1.0 / r
    } else {
        f64::INFINITY
    }
}

/// Samples `n` light vertices from `u` (at least `3 n` coordinates).
pub fn sample_light_subpath(scene: &Scene, u: &[f64], n: usize) -> Subpath {
    let mut vs: Vec<Vertex> = Vec::with_capacity(n);
    for i in 0..n {
        let c = &u[3 * i..3 * i + 3];
        let next = match i {
            0 => {
                let li = scene.pick_light(c[0]);
                let prim = scene.lights[li].prim;
                Some(Vertex { p: scene.prims[prim].shape.sample(c[1], c[2]), n: scene.normal(prim), prim, pdf_fwd: 0.0 })
            }
            1 => {
                let y0 = &vs[0];
                let f = Frame::from_normal(scene.normal(y0.prim));
                trace(scene, y0, f.to_world(lambert::sample(c[1], c[2])))
            }
            _ => scatter(scene, &vs[i - 2], &vs[i - 1], c),
        };
        match next {
            Some(mut v) => {
                v.pdf_fwd = slot_pdf(scene, Side::Light, i, i.checked_sub(2).map(|j| &vs[j]), i.checked_sub(1).map(|j| &vs[j]), &v);
                vs.push(v);
            }
            None => break,
        }
    }
    Subpath { vertices: vs, requested: n }
}

/// Samples `n` eye vertices, `z_0` being the pinhole.
pub fn sample_eye_subpath(scene: &Scene, u: &[f64], n: usize) -> Subpath {
    let mut vs: Vec<Vertex> = Vec::with_capacity(n);
    for i in 0..n {
        let c = &u[3 * i..3 * i + 3];
        let next = match i {
            0 => Some(Vertex::camera(scene)),
            1 => trace(scene, &vs[0], scene.camera.direction(c[1], c[2])),
            _ => scatter(scene, &vs[i - 2], &vs[i - 1], c),
        };
        match next {
            Some(mut v) => {
                v.pdf_fwd = slot_pdf(scene, Side::Eye, i, i.checked_sub(2).map(|j| &vs[j]), i.checked_sub(1).map(|j| &vs[j]), &v);
                vs.push(v);
            }
            None => break,
        }
    }
    Subpath { vertices: vs, requested: n }
}

pub fn sample_subpath(scene: &Scene, side: Side, u: &[f64], n: usize) -> Subpath {
    match side {
        Side::Light => sample_light_subpath(scene, u, n),
        Side::Eye => sample_eye_subpath(scene, u, n),
    }
}

fn scatter(scene: &Scene, a: &Vertex, b: &Vertex, c: &[f64]) -> Option<Vertex> {
    let wi = (a.p - b.p).normalized();
    let f = frame_towards(scene, b, wi);
    let (wo, _) = scene.material(b.prim).sample([c[0], c[1], c[2]], f.to_local(wi))?;
    trace(scene, b, f.to_world(wo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cmlt_core::rng::{stream, uniform_vec};

    #[test]
    fn zero_vertices_is_empty_and_alive() {
        let s = Scene::desk(16, 16);
        let p = sample_light_subpath(&s, &[], 0);
        assert!(p.is_empty() && p.alive());
        assert!(sample_eye_subpath(&s, &[], 0).is_empty());
    }

    #[test]
    fn same_coordinates_same_subpath() {
        let s = Scene::desk(16, 16);
        let mut rng = stream(5, 0);
        for _ in 0..100 {
            let u = uniform_vec(&mut rng, 27);
            assert_eq!(sample_light_subpath(&s, &u, 9), sample_light_subpath(&s, &u, 9));
            assert_eq!(sample_eye_subpath(&s, &u, 9), sample_eye_subpath(&s, &u, 9));
        }
    }

    #[test]
    fn slot_inversion_reproduces_coordinates_of_alive_vertices() {
        let s = Scene::desk(16, 16);
        let mut rng = stream(6, 0);
        let mut checked = 0;
        for _ in 0..2000 {
            let u = uniform_vec(&mut rng, 24);
            for side in [Side::Light, Side::Eye] {
                let sp = sample_subpath(&s, side, &u, 8);
                let vs = &sp.vertices;
                for i in 0..vs.len() {
                    let prev2 = i.checked_sub(2).map(|j| &vs[j]);
                    let prev = i.checked_sub(1).map(|j| &vs[j]);
                    let v = [u[3 * i], u[3 * i + 1], u[3 * i + 2]];
                    let Some(w) = slot_invert(&s, side, i, prev2, prev, &vs[i], v) else {
                        continue;
                    };
                    // the inverse must map forward to the same vertex
                    let mut u2 = u.clone();
                    u2[3 * i..3 * i + 3].copy_from_slice(&w);
                    let sp2 = sample_subpath(&s, side, &u2, i + 1);
                    assert!(sp2.alive());
                    assert!(sp2.vertices[i].p.distance(vs[i].p) < 1e-8, "{side:?} {i}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 10_000);
    }
}
