//! Flatland geometry: a ground square lit by two upright area lights.
//!
//! The ground is the unit square in the plane `z = 0` (normal `+z`), seen
//! orthographically from above. Light A is the unit square in the plane
//! `y = 0` facing `+y`, with emission `(1 + 9x) (1, x, x)`; a thin vertical
//! strip in front of it blocks part of its brightest region. Light B is a
//! uniform green unit square just behind the plane `y = 1`, facing `-y`,
//! and hidden behind an opaque wall in that plane pierced by a round hole.

use cmlt_core::{Rgb, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emitter {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlatScene {
    pub resolution: usize,
    /// Emission scale of light A; zero switches it off.
    pub light_a_scale: f64,
    /// Distance of the strip occluder in front of light A.
    pub strip_y: f64,
    pub strip_x: [f64; 2],
    pub light_b_y: f64,
    pub light_b_green: f64,
    pub blocker_y: f64,
    /// Hole center as `(x, z)` on the blocker.
    pub hole_center: [f64; 2],
    pub hole_radius: f64,
}

impl Default for FlatScene {
    fn default() -> Self {
        Self {
            resolution: 512,
            light_a_scale: 1.0,
            strip_y: 0.1,
            strip_x: [0.8, 0.85],
            light_b_y: 1.001,
            light_b_green: 60.0,
            blocker_y: 1.0,
            hole_center: [0.5, 0.5],
            hole_radius: 0.3,
        }
    }
}

/// What a ray hit first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hit {
    Emitter(Emitter, Vec3),
    Occluder,
}

const EPS: f64 = 1e-9;

fn inside(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

impl FlatScene {
    pub fn ground_area(&self) -> f64 {
        1.0
    }

    pub fn ground_normal(&self) -> Vec3 {
        Vec3::Z
    }

    pub fn on_ground(&self, p: Vec3) -> bool {
        inside(p.x, 0.0, 1.0) && inside(p.y, 0.0, 1.0)
    }

    pub fn emission(&self, e: Emitter, x2: Vec3) -> Rgb {
        match e {
            Emitter::A => {
                let x = x2.x;
                Rgb::new(1.0, x, x) * (self.light_a_scale * (1.0 + 9.0 * x))
            }
            Emitter::B => Rgb::new(0.0, self.light_b_green, 0.0),
        }
    }

    /// Scalar emission density used for emitter sampling.
    pub fn emission_scalar(&self, e: Emitter, x2: Vec3) -> f64 {
        match e {
            Emitter::A => self.light_a_scale * (1.0 + 9.0 * x2.x),
            Emitter::B => self.light_b_green,
        }
    }

    /// Integrated scalar emission of each emitter (both have unit area).
    pub fn power(&self, e: Emitter) -> f64 {
        match e {
            Emitter::A => 5.5 * self.light_a_scale,
            Emitter::B => self.light_b_green,
        }
    }

    pub fn total_power(&self) -> f64 {
        self.power(Emitter::A) + self.power(Emitter::B)
    }

    pub fn emitter_normal(&self, e: Emitter) -> Vec3 {
        match e {
            Emitter::A => Vec3::Y,
            Emitter::B => -Vec3::Y,
        }
    }

    /// Point on emitter `e` from its surface coordinates `(x, z)` in `[0,1]^2`.
    pub fn emitter_point(&self, e: Emitter, a: f64, b: f64) -> Vec3 {
        match e {
            Emitter::A => Vec3::new(a, 0.0, b),
            Emitter::B => Vec3::new(a, self.light_b_y, b),
        }
    }

    pub fn emitter_coords(&self, _e: Emitter, p: Vec3) -> (f64, f64) {
        (p.x, p.z)
    }

    pub fn in_hole(&self, x: f64, z: f64) -> bool {
        let dx = x - self.hole_center[0];
        let dz = z - self.hole_center[1];
        dx * dx + dz * dz < self.hole_radius * self.hole_radius
    }

    /// Nearest hit along `o + t d` for `t in (EPS, t_max)`.
    ///
    /// Every surface is a rectangle in a plane of constant `y`; the back
    /// faces of the emitters count as occluders.
    pub fn intersect(&self, o: Vec3, d: Vec3, t_max: f64) -> Option<(f64, Hit)> {
        if d.y == 0.0 {
            return None;
        }
        let mut best: Option<(f64, Hit)> = None;
        let mut consider = |plane: f64, test: &dyn Fn(Vec3) -> Option<Hit>| {
            let t = (plane - o.y) / d.y;
            if t > EPS && t < t_max && best.is_none_or(|(bt, _)| t < bt) {
                let p = o + d * t;
                if let Some(h) = test(p) {
                    best = Some((t, h));
                }
            }
        };
        let unit = |p: Vec3| inside(p.x, 0.0, 1.0) && inside(p.z, 0.0, 1.0);
        consider(0.0, &|p| {
            unit(p).then_some({
                if d.y < 0.0 {
                    Hit::Emitter(Emitter::A, p)
                } else {
                    Hit::Occluder
                }
            })
        });
        consider(self.strip_y, &|p| (inside(p.x, self.strip_x[0], self.strip_x[1]) && inside(p.z, 0.0, 1.0)).then_some(Hit::Occluder));
        consider(self.blocker_y, &|p| (unit(p) && !self.in_hole(p.x, p.z)).then_some(Hit::Occluder));
        consider(self.light_b_y, &|p| {
            unit(p).then_some({
                if d.y > 0.0 {
                    Hit::Emitter(Emitter::B, p)
                } else {
                    Hit::Occluder
                }
            })
        });
        best
    }

    /// True when nothing blocks the open segment between `a` and `b`.
    pub fn visible(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let len = d.length();
        self.intersect(a, d / len, len * (1.0 - 1e-9)).is_none()
    }

    /// Film coordinates of a ground point.
    pub fn film(&self, x1: Vec3) -> (f64, f64) {
        (x1.x, x1.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontal_ray_hits_light_a_opposite() {
        let s = FlatScene::default();
        let o = Vec3::new(0.3, 0.05, 0.0);
        let d = Vec3::new(0.0, -1.0, 1.0).normalized();
        match s.intersect(o, d, f64::INFINITY) {
            Some((_, Hit::Emitter(Emitter::A, p))) => {
                assert!((p - Vec3::new(0.3, 0.0, 0.05)).length() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strip_shadows_and_hole_lets_light_through() {
        let s = FlatScene::default();
        // Straight at the strip from behind it.
        let o = Vec3::new(0.825, 0.3, 0.0);
        let d = (Vec3::new(0.825, 0.1, 0.2) - o).normalized();
        assert!(matches!(s.intersect(o, d, f64::INFINITY), Some((_, Hit::Occluder))));
        let g = Vec3::new(0.3, 0.4, 0.0);
        let hole = Vec3::new(0.5, 1.0, 0.5);
        let d = (hole - g).normalized();
        assert!(matches!(s.intersect(g, d, f64::INFINITY), Some((_, Hit::Emitter(Emitter::B, _)))));
        let x2 = s.emitter_point(Emitter::B, 0.2, 0.2);
        assert!(!s.visible(g, x2));
    }

    #[test]
    fn emitter_powers_are_positive() {
        let s = FlatScene::default();
        assert!(s.power(Emitter::A) > 0.0 && s.power(Emitter::B) > 0.0);
    }
}
