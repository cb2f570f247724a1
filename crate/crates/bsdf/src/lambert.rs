//! Cosine-weighted hemisphere sampling and its inverse.

use crate::frame::{from_spherical, spherical};
use cmlt_core::Vec3;
use std::f64::consts::{FRAC_1_PI, TAU};

/// `(theta, phi) = (acos(sqrt(v)), 2 pi u)`.
pub fn sample(u: f64, v: f64) -> Vec3 {
    let cos_t = v.sqrt();
    let sin_t = (1.0 - v).max(0.0).sqrt();
    from_spherical(cos_t, sin_t, TAU * u)
}

/// `(u, v) = (phi / 2pi, cos^2 theta)`; `None` at or below the horizon.
pub fn invert(wo: Vec3) -> Option<(f64, f64)> {
    if wo.z <= 0.0 {
        return None;
    }
    let (_, phi) = spherical(wo);
    Some((phi / TAU, (wo.z * wo.z).min(1.0)))
}

/// Solid-angle density of [`sample`].
#[inline]
pub fn pdf(wo: Vec3) -> f64 {
    if wo.z > 0.0 {
        wo.z * FRAC_1_PI
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cmlt_core::rng::stream;
    use rand::Rng;
    use std::f64::consts::PI;

    #[test]
    fn known_points() {
        let (t, p) = spherical(sample(0.25, 1.0));
        assert!(t.abs() < 1e-12);
        // The pole has no azimuth; the sampled direction still encodes u.
        assert!(p.abs() < 1e-12);
        let (t, p) = spherical(sample(0.0, 0.25));
        assert!((t - PI / 3.0).abs() < 1e-12 && p.abs() < 1e-12);
        let w = from_spherical((PI / 3.0).cos(), (PI / 3.0).sin(), PI);
        let (u, v) = invert(w).unwrap();
        assert!((u - 0.5).abs() < 1e-12 && (v - 0.25).abs() < 1e-12);
        let (u, v) = invert(Vec3::Z).unwrap();
        assert_eq!((u, v), (0.0, 1.0));
    }

    #[test]
    fn round_trip() {
        let mut rng = stream(21, 0);
        for _ in 0..100_000 {
            let (u, v): (f64, f64) = (rng.gen(), rng.gen());
            if v == 0.0 {
                continue;
            }
            let (u2, v2) = invert(sample(u, v)).unwrap();
            assert!((u - u2).abs() < 1e-9 && (v - v2).abs() < 1e-9, "{u} {v} -> {u2} {v2}");
        }
    }

    #[test]
    fn below_horizon_is_not_invertible() {
        assert!(invert(Vec3::new(0.0, 0.6, -0.8)).is_none());
        assert_eq!(pdf(Vec3::new(0.0, 0.6, -0.8)), 0.0);
    }

    #[test]
    fn pdf_integrates_to_one() {
        // Midpoint rule in (cos theta, phi).
        let n = 2000;
        let mut s = 0.0;
        for i in 0..n {
            let c = (i as f64 + 0.5) / n as f64;
            s += pdf(from_spherical(c, (1.0 - c * c).sqrt(), 0.3)) / n as f64;
        }
        assert!((s * TAU - 1.0).abs() < 1e-3);
    }
}
