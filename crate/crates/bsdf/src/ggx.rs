//! GGX reflection parameterized by `m`, where `tan^2(theta_h) = v / ((1 - v) m^2)`.
//!
//! With this parameterization `m` is the reciprocal of the usual GGX width
//! `alpha`: larger `m` means a sharper lobe.

use crate::frame::{from_spherical, reflect, spherical};
use cmlt_core::Vec3;
use std::f64::consts::{PI, TAU};

/// Microfacet normal for `(u, v)`.
pub fn sample_normal(u: f64, v: f64, m: f64) -> Vec3 {
    let a = (1.0 - v) * m * m;
    let den = a + v;
    let (cos_t, sin_t) = if den > 0.0 { ((a / den).sqrt(), (v / den).sqrt()) } else { (1.0, 0.0) };
    from_spherical(cos_t, sin_t, TAU * u)
}

/// Inverse of [`sample_normal`]; `None` for normals at or below the horizon.
pub fn invert_normal(h: Vec3, m: f64) -> Option<(f64, f64)> {
    if h.z <= 0.0 {
        return None;
    }
    let (_, phi) = spherical(h);
    let tan2 = (h.x * h.x + h.y * h.y) / (h.z * h.z);
    let q = m * m * tan2;
    Some((phi / TAU, q / (1.0 + q)))
}

/// Reflects `wi` about a sampled microfacet normal. The result may point
/// below the horizon, in which case it carries no energy.
pub fn sample(u: f64, v: f64, wi: Vec3, m: f64) -> Vec3 {
    reflect(wi, sample_normal(u, v, m))
}

/// Half vector of a reflection pair, oriented into the upper hemisphere.
///
/// Microfacets facing away from `wi` reflect below the horizon; orienting
/// the half vector upwards keeps those samples invertible as well.
pub fn half_vector(wi: Vec3, wo: Vec3) -> Option<Vec3> {
    let s = wi + wo;
    let len = s.length();
    if !(len > 1e-12) {
        return None;
    }
    let h = if s.z < 0.0 { -s / len } else { s / len };
    (h.z > 0.0).then_some(h)
}

pub fn invert(wo: Vec3, wi: Vec3, m: f64) -> Option<(f64, f64)> {
    invert_normal(half_vector(wi, wo)?, m)
}

/// Normal distribution `D(h)`, normalized so that `int D cos(theta_h) = 1`.
pub fn ndf(h: Vec3, m: f64) -> f64 {
    if h.z <= 0.0 {
        return 0.0;
    }
    let c2 = h.z * h.z;
    let s2 = (1.0 - c2).max(0.0);
    let d = c2 + m * m * s2;
    m * m / (PI * d * d)
}

/// Smith masking for one direction.
pub fn g1(w: Vec3, h: Vec3, m: f64) -> f64 {
    if w.dot(h) * w.z <= 0.0 {
        return 0.0;
    }
    let c2 = w.z * w.z;
    let tan2 = (1.0 - c2).max(0.0) / c2;
    2.0 / (1.0 + (1.0 + tan2 / (m * m)).sqrt())
}

/// Solid-angle density of [`sample`] at `wo`.
pub fn pdf(wi: Vec3, wo: Vec3, m: f64) -> f64 {
    let Some(h) = half_vector(wi, wo) else {
        return 0.0;
    };
    let d = wo.dot(h).abs();
    if d <= 0.0 {
        return 0.0;
    }
    ndf(h, m) * h.z / (4.0 * d)
}

/// `D G / (4 cos_i cos_o)` without Fresnel; zero unless both directions are
/// above the horizon.
pub fn eval(wi: Vec3, wo: Vec3, m: f64) -> f64 {
    if wi.z <= 0.0 || wo.z <= 0.0 {
        return 0.0;
    }
    let Some(h) = half_vector(wi, wo) else {
        return 0.0;
    };
    ndf(h, m) * g1(wi, h, m) * g1(wo, h, m) / (4.0 * wi.z * wo.z)
}
