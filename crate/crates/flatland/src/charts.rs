//! The two flatland path samplers and their exact inverses.

use crate::scene::{Emitter, FlatScene, Hit};
use cmlt_bsdf::{lambert, Frame};
use cmlt_core::{Rgb, SamplingChart, Vec3};
use std::f64::consts::FRAC_1_PI;

/// A two-vertex path: `x1` on the ground, `x2` on an emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatPath {
    pub x1: Vec3,
    pub x2: Vec3,
    pub emitter: Emitter,
    /// Whether the segment between the vertices is unoccluded.
    pub visible: bool,
}

impl FlatPath {
    /// `cos(theta_1)`, `cos(theta_2)` and the squared distance.
    pub fn geometry(&self, scene: &FlatScene) -> (f64, f64, f64) {
        let d = self.x2 - self.x1;
        let d2 = d.length_squared();
        let len = d2.sqrt();
        let c1 = (d.dot(scene.ground_normal()) / len).max(0.0);
        let c2 = (-d.dot(scene.emitter_normal(self.emitter)) / len).max(0.0);
        (c1, c2, d2)
    }

    /// `E(x2) cos1 cos2 / |x1 - x2|^2 V(x1, x2)`.
    pub fn contribution(&self, scene: &FlatScene) -> Rgb {
        if !self.visible || !scene.on_ground(self.x1) {
            return Rgb::BLACK;
        }
        let (c1, c2, d2) = self.geometry(scene);
        scene.emission(self.emitter, self.x2) * (c1 * c2 / d2)
    }
}

fn ground_frame() -> Frame {
    Frame::from_normal(Vec3::Z)
}

/// Inverse CDF of `1 + 9x` on `[0,1]`.
fn light_a_x(c: f64) -> f64 {
    11.0 * c / (1.0 + (1.0 + 99.0 * c).sqrt())
}

fn light_a_cdf(x: f64) -> f64 {
    (x + 4.5 * x * x) / 5.5
}

/// Technique `(s, t) = (1, 1)`: uniform ground point, emitter point by
/// emitted power.
#[derive(Debug, Clone, Copy)]
pub struct NeeChart {
    pub scene: FlatScene,
}

impl NeeChart {
    fn prob_a(&self) -> f64 {
        self.scene.power(Emitter::A) / self.scene.total_power()
    }
}

impl SamplingChart for NeeChart {
    type Point = FlatPath;

    fn dim(&self) -> usize {
        4
    }

    fn reverse_dim(&self) -> usize {
        0
    }

    fn forward(&self, u: &[f64]) -> Option<FlatPath> {
        let x1 = Vec3::new(u[0], u[1], 0.0);
        let pa = self.prob_a();
        let (emitter, a) = if u[2] < pa { (Emitter::A, light_a_x(u[2] / pa)) } else { (Emitter::B, ((u[2] - pa) / (1.0 - pa)).min(1.0)) };
        let x2 = self.scene.emitter_point(emitter, a, u[3]);
        let visible = self.scene.visible(x1, x2);
        Some(FlatPath { x1, x2, emitter, visible })
    }

    fn right_inverse(&self, x: &FlatPath, _v: &[f64]) -> Option<Vec<f64>> {
        if self.density(x) <= 0.0 {
            return None;
        }
        let pa = self.prob_a();
        let (a, b) = self.scene.emitter_coords(x.emitter, x.x2);
        let sel = match x.emitter {
            Emitter::A => light_a_cdf(a) * pa,
            Emitter::B => pa + a * (1.0 - pa),
        };
        Some(vec![x.x1.x, x.x1.y, sel, b])
    }

    fn density(&self, x: &FlatPath) -> f64 {
        if !self.scene.on_ground(x.x1) {
            return 0.0;
        }
        let (a, b) = self.scene.emitter_coords(x.emitter, x.x2);
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
            return 0.0;
        }
        self.scene.emission_scalar(x.emitter, x.x2) / self.scene.total_power() / self.scene.ground_area()
    }
}

/// Technique `(s, t) = (0, 2)`: uniform ground point, cosine-distributed
/// direction, first hit.
#[derive(Debug, Clone, Copy)]
pub struct PtChart {
    pub scene: FlatScene,
}

impl SamplingChart for PtChart {
    type Point = FlatPath;

    fn dim(&self) -> usize {
        4
    }

    fn reverse_dim(&self) -> usize {
        0
    }

    fn forward(&self, u: &[f64]) -> Option<FlatPath> {
        let x1 = Vec3::new(u[0], u[1], 0.0);
        let d = ground_frame().to_world(lambert::sample(u[2], u[3]));
        match self.scene.intersect(x1, d, f64::INFINITY)? {
            (_, Hit::Emitter(emitter, x2)) => Some(FlatPath { x1, x2, emitter, visible: true }),
            (_, Hit::Occluder) => None,
        }
    }

    /// Only paths whose emitter vertex is the first hit from `x1` can be
    /// represented.
    fn right_inverse(&self, x: &FlatPath, _v: &[f64]) -> Option<Vec<f64>> {
        if self.density(x) <= 0.0 {
            return None;
        }
        let d = (x.x2 - x.x1).normalized();
        let (a, b) = lambert::invert(ground_frame().to_local(d))?;
        Some(vec![x.x1.x, x.x1.y, a, b])
    }

    fn density(&self, x: &FlatPath) -> f64 {
        if !x.visible || !self.scene.on_ground(x.x1) {
            return 0.0;
        }
        let (c1, c2, d2) = x.geometry(&self.scene);
        c1 * FRAC_1_PI * c2 / d2 / self.scene.ground_area()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cmlt_core::rng::stream;
    use rand::Rng;

    fn u4<R: Rng>(rng: &mut R) -> [f64; 4] {
        [rng.gen(), rng.gen(), rng.gen(), rng.gen()]
    }

    #[test]
    fn nee_round_trip() {
        let c = NeeChart { scene: FlatScene::default() };
        let mut rng = stream(31, 0);
        for _ in 0..100_000 {
            let u = u4(&mut rng);
            let x = c.forward(&u).unwrap();
            let back = c.right_inverse(&x, &[]).unwrap();
            for k in 0..4 {
                assert!((u[k] - back[k]).abs() < 1e-9, "{u:?} {back:?}");
            }
        }
    }

    #[test]
    fn pt_round_trip_on_emitter_hits() {
        let c = PtChart { scene: FlatScene::default() };
        let mut rng = stream(31, 1);
        let mut hits = 0;
        for _ in 0..100_000 {
            let u = u4(&mut rng);
            if let Some(x) = c.forward(&u) {
                hits += 1;
                let back = c.right_inverse(&x, &[]).unwrap();
                for k in 0..4 {
                    assert!((u[k] - back[k]).abs() < 1e-6, "{u:?} {back:?}");
                }
            }
        }
        assert!(hits > 10_000);
    }

    #[test]
    fn light_b_uniform_density() {
        let scene = FlatScene { light_a_scale: 0.0, ..FlatScene::default() };
        let c = NeeChart { scene };
        let mut rng = stream(31, 2);
        for _ in 0..100 {
            let x = c.forward(&u4(&mut rng)).unwrap();
            assert_eq!(x.emitter, Emitter::B);
            assert!((c.density(&x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn occluded_path_is_not_pt_representable() {
        let scene = FlatScene::default();
        let x =
            FlatPath { x1: Vec3::new(0.5, 0.5, 0.0), x2: scene.emitter_point(Emitter::B, 0.1, 0.1), emitter: Emitter::B, visible: false };
        let c = PtChart { scene };
        assert_eq!(c.density(&x), 0.0);
        assert!(c.right_inverse(&x, &[]).is_none());
        assert!(x.contribution(&scene).is_black());
    }

    /// Histogram of PT hits on light A against the area-measure density.
    #[test]
    fn pt_area_density_matches_histogram() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let scene = FlatScene::default();
        let c = PtChart { scene };
        let x1 = Vec3::new(0.3, 0.4, 0.0);
        let f = ground_frame();
        let bins = 10;
        let mut hist = vec![0u64; bins * bins];
        let n = 1_000_000;
        let mut rng = stream(31, 11);
        for _ in 0..n {
            let d = f.to_world(lambert::sample(rng.gen(), rng.gen()));
            if let Some((_, Hit::Emitter(Emitter::A, p))) = scene.intersect(x1, d, f64::INFINITY) {
                let i = ((p.x * bins as f64) as usize).min(bins - 1);
                let j = ((p.z * bins as f64) as usize).min(bins - 1);
                hist[i * bins + j] += 1;
            }
        }
        let sub = 16;
        let (mut chi2, mut dof) = (0.0, 0);
        for i in 0..bins {
            for j in 0..bins {
                let mut mass = 0.0;
                for a in 0..sub {
                    for b in 0..sub {
                        let px = (i as f64 + (a as f64 + 0.5) / sub as f64) / bins as f64;
                        let pz = (j as f64 + (b as f64 + 0.5) / sub as f64) / bins as f64;
                        let x2 = scene.emitter_point(Emitter::A, px, pz);
                        let path = FlatPath { x1, x2, emitter: Emitter::A, visible: scene.visible(x1, x2) };
                        mass += c.density(&path);
                    }
                }
                mass /= (bins * bins * sub * sub) as f64;
                let e = mass * n as f64;
                if e > 20.0 {
                    chi2 += (hist[i * bins + j] as f64 - e).powi(2) / e;
                    dof += 1;
                }
            }
        }
        let p = 1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(chi2);
        assert!(p > 0.01, "chi2 {chi2} dof {dof}");
    }

    #[test]
    fn straight_up_escapes_and_diagonal_hits_light_a() {
        let scene = FlatScene::default();
        let c = PtChart { scene };
        // v = 1 gives theta = 0.
        assert!(c.forward(&[0.2, 0.6, 0.0, 1.0]).is_none());
        let x1 = Vec3::new(0.2, 0.3, 0.0);
        let path = FlatPath { x1, x2: Vec3::new(0.2, 0.0, 0.3), emitter: Emitter::A, visible: true };
        let u = c.right_inverse(&path, &[]).unwrap();
        let x = c.forward(&u).unwrap();
        assert_eq!(x.emitter, Emitter::A);
        assert!((x.x2 - path.x2).length() < 1e-12);
    }

    mod props {
        use super::*;
        use cmlt_core::SamplingChart;
        use proptest::prelude::*;

        fn unit() -> impl Strategy<Value = [f64; 4]> {
            [0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64]
        }

        proptest! {
            #[test]
            fn nee_right_inverse_law(u in unit()) {
                let c = NeeChart { scene: FlatScene::default() };
                let x = c.forward(&u).unwrap();
                let back = c.right_inverse(&x, &[]).unwrap();
                let y = c.forward(&back).unwrap();
                prop_assert!((x.x1 - y.x1).length() < 1e-9 && (x.x2 - y.x2).length() < 1e-9);
            }

            #[test]
            fn pt_right_inverse_law(u in unit()) {
                let c = PtChart { scene: FlatScene::default() };
                if let Some(x) = c.forward(&u) {
                    let back = c.right_inverse(&x, &[]).unwrap();
                    let y = c.forward(&back).unwrap();
                    prop_assert!((x.x2 - y.x2).length() < 1e-6);
                }
            }

            #[test]
            fn weighted_contribution_is_chart_invariant(u in unit()) {
                let scene = FlatScene::default();
                let (nee, pt) = (NeeChart { scene }, PtChart { scene });
                if let Some(x) = pt.forward(&u) {
                    let y = nee.forward(&nee.right_inverse(&x, &[]).unwrap()).unwrap();
                    let w = |p: &FlatPath| {
                        p.contribution(&scene).max_component() / (nee.density(p) + pt.density(p))
                    };
                    let (a, b) = (w(&x), w(&y));
                    prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-300));
                }
            }
        }
    }
}
