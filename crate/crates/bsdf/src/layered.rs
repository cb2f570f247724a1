//! Fresnel-weighted mix of a Lambertian base and a GGX coat.

use crate::{ggx, lambert};
use cmlt_core::{Rgb, Vec3};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Diffuse,
    Glossy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatterMode {
    Diffuse,
    Glossy,
    Specular,
}

impl From<Layer> for ScatterMode {
    fn from(l: Layer) -> Self {
        match l {
            Layer::Diffuse => ScatterMode::Diffuse,
            Layer::Glossy => ScatterMode::Glossy,
        }
    }
}

/// Density guard for inverting a vertex: a request that would change the
/// scattering mode at a specular vertex has density zero.
pub fn mode_preserving_density(current: ScatterMode, proposed: ScatterMode, density: f64) -> f64 {
    let specular = current == ScatterMode::Specular || proposed == ScatterMode::Specular;
    if specular && current != proposed {
        0.0
    } else {
        density
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayeredBsdf {
    pub diffuse: Rgb,
    pub glossy: Rgb,
    /// GGX parameter in the `tan^2 = v / ((1 - v) m^2)` convention.
    pub m: f64,
    pub eta: f64,
}

impl LayeredBsdf {
    pub fn diffuse(albedo: Rgb) -> Self {
        Self { diffuse: albedo, glossy: Rgb::BLACK, m: 1.0, eta: 1.5 }
    }

    pub fn new(diffuse: Rgb, glossy: Rgb, m: f64, eta: f64) -> Self {
        Self { diffuse, glossy, m, eta }
    }

    /// Schlick approximation of dielectric reflectance.
    pub fn fresnel(&self, cos: f64) -> f64 {
        let f0 = ((self.eta - 1.0) / (self.eta + 1.0)).powi(2);
        let c = (1.0 - cos.clamp(0.0, 1.0)).powi(5);
        f0 + (1.0 - f0) * c
    }

    fn coat(&self) -> f64 {
        self.glossy.max_component().clamp(0.0, 1.0)
    }

    /// `[P(diffuse), P(glossy)]` for incident direction `wi`.
    pub fn selection(&self, wi: Vec3) -> [f64; 2] {
        let f = self.fresnel(wi.z);
        let wg = f * self.glossy.max_component().max(0.0);
        let wd = (1.0 - f) * self.diffuse.max_component().max(0.0);
        let s = wg + wd;
        if s > 0.0 {
            let pg = wg / s;
            [1.0 - pg, pg]
        } else {
            [1.0, 0.0]
        }
    }

    /// Layer chosen by selector value `sel`; strata are half-open, so
    /// `sel == P(diffuse)` picks the glossy layer.
    pub fn layer_of(&self, sel: f64, wi: Vec3) -> Layer {
        if sel < self.selection(wi)[0] {
            Layer::Diffuse
        } else {
            Layer::Glossy
        }
    }

    /// Samples an outgoing direction. Returns `None` when `wi` is below the
    /// horizon. Glossy samples may point below the horizon.
    pub fn sample(&self, u: [f64; 3], wi: Vec3) -> Option<(Vec3, Layer)> {
        if wi.z <= 0.0 {
            return None;
        }
        let layer = self.layer_of(u[0], wi);
        let wo = match layer {
            Layer::Diffuse => lambert::sample(u[1], u[2]),
            Layer::Glossy => ggx::sample(u[1], u[2], wi, self.m),
        };
        Some((wo, layer))
    }

    pub fn lobe_pdf(&self, layer: Layer, wi: Vec3, wo: Vec3) -> f64 {
        if wi.z <= 0.0 {
            return 0.0;
        }
        match layer {
            Layer::Diffuse => lambert::pdf(wo),
            Layer::Glossy => ggx::pdf(wi, wo, self.m),
        }
    }

    /// Mixture density of [`sample`](Self::sample).
    pub fn pdf(&self, wi: Vec3, wo: Vec3) -> f64 {
        let [pd, pg] = self.selection(wi);
        let mut p = 0.0;
        if pd > 0.0 {
            p += pd * self.lobe_pdf(Layer::Diffuse, wi, wo);
        }
        if pg > 0.0 {
            p += pg * self.lobe_pdf(Layer::Glossy, wi, wo);
        }
        p
    }

    /// Reciprocal BSDF value; zero unless both directions are above the horizon.
    pub fn eval(&self, wi: Vec3, wo: Vec3) -> Rgb {
        if wi.z <= 0.0 || wo.z <= 0.0 {
            return Rgb::BLACK;
        }
        let c = self.coat();
        let base = (1.0 - self.fresnel(wi.z) * c) * (1.0 - self.fresnel(wo.z) * c);
        let mut out = self.diffuse * (base * FRAC_1_PI);
        if !self.glossy.is_black() {
            if let Some(h) = ggx::half_vector(wi, wo) {
                let spec = self.fresnel(wi.dot(h)) * ggx::eval(wi, wo, self.m);
                out += self.glossy * spec;
            }
        }
        out
    }

    /// Randomized right inverse: `v` picks a layer with the forward
    /// selection probabilities and doubles as the selector coordinate, which
    /// is then uniform within that layer's stratum.
    pub fn invert(&self, wo: Vec3, wi: Vec3, v: f64) -> Option<([f64; 3], Layer)> {
        if wi.z <= 0.0 {
            return None;
        }
        let probs = self.selection(wi);
        let sum = probs[0] + probs[1];
        let sel = v * sum;
        let (layer, ab) =
            if sel < probs[0] { (Layer::Diffuse, lambert::invert(wo)?) } else { (Layer::Glossy, ggx::invert(wo, wi, self.m)?) };
        Some(([sel, ab.0, ab.1], layer))
    }

    /// Density with which [`invert`](Self::invert) produces `u` for the
    /// direction it maps to, relative to the same measure for which
    /// `1 / pdf` is the inverse density of an invertible sampler.
    ///
    /// The inverse picks the layer with the forward probabilities rather
    /// than with the posterior `P_l pdf_l / pdf`, so this is
    /// `1 / pdf_l(wo)` of the layer `u` selects.
    pub fn inverse_density(&self, u: [f64; 3], wi: Vec3, wo: Vec3) -> f64 {
        let p = self.lobe_pdf(self.layer_of(u[0], wi), wi, wo);
        if p > 0.0 {
            1.0 / p
        } else {
            f64::INFINITY
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::from_spherical;
    use cmlt_core::rng::stream;
    use rand::Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn mixed() -> LayeredBsdf {
        LayeredBsdf::new(Rgb::new(0.6, 0.4, 0.3), Rgb::new(0.9, 0.9, 0.9), 4.0, 1.5)
    }

    fn upper<R: Rng>(rng: &mut R) -> Vec3 {
        lambert::sample(rng.gen(), rng.gen())
    }

    #[test]
    fn degenerate_mixture_is_diffuse() {
        let b = LayeredBsdf::diffuse(Rgb::splat(0.5));
        let mut rng = stream(23, 0);
        for _ in 0..1000 {
            let wi = upper(&mut rng);
            assert_eq!(b.selection(wi), [1.0, 0.0]);
            let (wo, l) = b.sample([rng.gen(), rng.gen(), rng.gen()], wi).unwrap();
            assert_eq!(l, Layer::Diffuse);
            let (_, l) = b.invert(wo, wi, rng.gen()).unwrap();
            assert_eq!(l, Layer::Diffuse);
            let e = b.eval(wi, wo);
            assert!((e.r - 0.5 * FRAC_1_PI).abs() < 1e-15);
        }
    }

    #[test]
    fn stratum_boundary_goes_to_glossy() {
        let b = mixed();
        let wi = Vec3::Z;
        let [pd, _] = b.selection(wi);
        assert_eq!(b.layer_of(pd, wi), Layer::Glossy);
        assert_eq!(b.layer_of(pd * (1.0 - 1e-12), wi), Layer::Diffuse);
    }

    #[test]
    fn mixture_pdf_is_weighted_sum() {
        let b = mixed();
        let mut rng = stream(23, 1);
        for _ in 0..10_000 {
            let wi = upper(&mut rng);
            let wo = upper(&mut rng);
            let [pd, pg] = b.selection(wi);
            let expect = pd * wo.z * FRAC_1_PI + pg * ggx::pdf(wi, wo, b.m);
            assert!((b.pdf(wi, wo) - expect).abs() <= 1e-12 * expect.max(1.0));
        }
    }

    #[test]
    fn selection_probabilities_sum_to_one() {
        let b = mixed();
        let mut rng = stream(23, 2);
        for _ in 0..1000 {
            let p = b.selection(upper(&mut rng));
            assert!(p[0] > 0.0 && p[1] > 0.0);
            assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sample_of_invert_reproduces_direction() {
        let b = mixed();
        let mut rng = stream(23, 3);
        for _ in 0..100_000 {
            let wi = upper(&mut rng);
            let wo = upper(&mut rng);
            let (u, _) = b.invert(wo, wi, rng.gen()).unwrap();
            let (w2, _) = b.sample(u, wi).unwrap();
            assert!((w2 - wo).length() < 1e-6);
        }
    }

    #[test]
    fn eval_is_reciprocal_and_zero_below_horizon() {
        let b = mixed();
        let mut rng = stream(23, 4);
        for _ in 0..10_000 {
            let wi = upper(&mut rng);
            let wo = upper(&mut rng);
            let (x, y) = (b.eval(wi, wo), b.eval(wo, wi));
            assert!((x - y).max_component().abs() <= 1e-9 * x.max_component().max(1.0));
            assert!((x - y).r.abs() <= 1e-9 * x.r.max(1.0));
        }
        assert!(b.eval(Vec3::Z, Vec3::new(0.0, 0.6, -0.8)).is_black());
    }

    #[test]
    fn inverse_layer_frequencies_match_selection() {
        let b = mixed();
        let wi = from_spherical(0.5, (0.75f64).sqrt(), 0.0);
        let wo = from_spherical(0.5, (0.75f64).sqrt(), std::f64::consts::PI);
        let [pd, _] = b.selection(wi);
        let n = 1_000_000u64;
        let mut rng = stream(23, 5);
        let mut d = 0u64;
        for _ in 0..n {
            if b.invert(wo, wi, rng.gen()).unwrap().1 == Layer::Diffuse {
                d += 1;
            }
        }
        let e = [pd * n as f64, (1.0 - pd) * n as f64];
        let o = [d as f64, (n - d) as f64];
        let chi2: f64 = (0..2).map(|i| (o[i] - e[i]).powi(2) / e[i]).sum();
        let p = 1.0 - ChiSquared::new(1.0).unwrap().cdf(chi2);
        assert!(p > 0.01);
    }

    #[test]
    fn specular_mode_guard() {
        use ScatterMode::*;
        assert_eq!(mode_preserving_density(Specular, Diffuse, 2.0), 0.0);
        assert_eq!(mode_preserving_density(Glossy, Specular, 2.0), 0.0);
        assert_eq!(mode_preserving_density(Specular, Specular, 2.0), 2.0);
        assert_eq!(mode_preserving_density(Diffuse, Glossy, 2.0), 2.0);
    }
}
