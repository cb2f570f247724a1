//! Orthonormal shading frames and spherical coordinates.

use cmlt_core::Vec3;
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub t: Vec3,
    pub b: Vec3,
    pub n: Vec3,
}

impl Frame {
    /// Right-handed frame around a unit normal (branchless construction of
    /// Duff et al.).
    pub fn from_normal(n: Vec3) -> Self {
        let sign = 1.0f64.copysign(n.z);
        let a = -1.0 / (sign + n.z);
        let k = n.x * n.y * a;
        let t = Vec3::new(1.0 + sign * n.x * n.x * a, sign * k, -sign * n.x);
        let b = Vec3::new(k, sign + n.y * n.y * a, -n.y);
        Self { t, b, n }
    }

    #[inline]
    pub fn to_local(&self, v: Vec3) -> Vec3 {
        Vec3::new(v.dot(self.t), v.dot(self.b), v.dot(self.n))
    }

    #[inline]
    pub fn to_world(&self, v: Vec3) -> Vec3 {
        self.t * v.x + self.b * v.y + self.n * v.z
    }
}

/// `(theta, phi)` of a local unit direction, with `phi` in `[0, 2pi)` and
/// `phi = 0` at the poles.
pub fn spherical(d: Vec3) -> (f64, f64) {
    let theta = d.z.clamp(-1.0, 1.0).acos();
    if d.x == 0.0 && d.y == 0.0 {
        return (theta, 0.0);
    }
    let mut phi = d.y.atan2(d.x);
    if phi < 0.0 {
        phi += TAU;
    }
    if phi >= TAU {
        phi = 0.0;
    }
    (theta, phi)
}

/// Local direction from `cos(theta)`, `sin(theta)` and `phi`.
#[inline]
pub fn from_spherical(cos_t: f64, sin_t: f64, phi: f64) -> Vec3 {
    Vec3::new(sin_t * phi.cos(), sin_t * phi.sin(), cos_t)
}

/// Mirror of `w` about the unit vector `h`.
#[inline]
pub fn reflect(w: Vec3, h: Vec3) -> Vec3 {
    h * (2.0 * w.dot(h)) - w
}
