//! Bidirectional path tracing with every connection and balance-heuristic
//! weights, used as the reference image.

use crate::measure::{evaluate, join_prefixes};
use crate::sampling::{sample_eye_subpath, sample_light_subpath};
use crate::scene::Scene;
use cmlt_core::image::{Image, ImageAccumulator};
use cmlt_core::rng::{stream, stream_id};
use cmlt_core::Rgb;
use rand::Rng;
use rayon::prelude::*;

const TAG_BDPT: u32 = 11;

/// Path-length limit of every estimator in this crate.
pub const MAX_K: usize = 8;

/// BDPT image with `spp` stratified samples per pixel and paths of at most
/// `max_k` edges. Pixels hold the mean radiance over their footprint.
pub fn bdpt_image(scene: &Scene, spp: usize, seed: u64, max_k: usize) -> Image {
    let w = scene.camera.desc.width;
    let h = scene.camera.desc.height;
    let n_pix = w * h;
    let side = (spp as f64).sqrt().floor().max(1.0) as usize;
    let rows: Vec<ImageAccumulator> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut acc = ImageAccumulator::new(w, h);
            let mut lu = vec![0.0; 3 * max_k];
            let mut eu = vec![0.0; 3 * (max_k + 1)];
            for x in 0..w {
                let mut rng = stream(seed, stream_id(TAG_BDPT, (y * w + x) as u64));
                for i in 0..spp {
                    let (jx, jy) = if i < side * side {
                        (((i % side) as f64 + rng.gen::<f64>()) / side as f64, ((i / side) as f64 + rng.gen::<f64>()) / side as f64)
                    } else {
                        (rng.gen(), rng.gen())
                    };
                    rng.fill(&mut lu[..]);
                    rng.fill(&mut eu[..]);
                    eu[4] = (x as f64 + jx) / w as f64;
                    eu[5] = (y as f64 + jy) / h as f64;
                    for (fx, fy, c) in bdpt_sample(scene, &lu, &eu, max_k) {
                        acc.splat_film(fx, fy, c);
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = ImageAccumulator::new(w, h);
    for r in &rows {
        total.merge(r);
    }
    total.to_image_scaled(1.0 / (spp * n_pix) as f64)
}

/// All MIS-weighted connections of one light and one eye subpath, as
/// `(film x, film y, f / sum p)` splats.
pub fn bdpt_sample(scene: &Scene, lu: &[f64], eu: &[f64], max_k: usize) -> Vec<(f64, f64, Rgb)> {
    let light = sample_light_subpath(scene, lu, max_k);
    let eye = sample_eye_subpath(scene, eu, max_k + 1);
    let mut out = Vec::new();
    for t in 1..=eye.len() {
        for s in 0..=light.len() {
            if s + t < 2 || s + t - 1 > max_k {
                continue;
            }
            let Some(path) = join_prefixes(&light, s, &eye, t) else { continue };
            let c = evaluate(scene, &path).weighted();
            if c.is_black() {
                continue;
            }
            if let Some((fx, fy)) = path.film(scene) {
                out.push((fx, fy, c));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_deterministic_and_finite() {
        let s = Scene::desk(8, 8);
        let a = bdpt_image(&s, 4, 3, 4);
        let b = bdpt_image(&s, 4, 3, 4);
        assert_eq!(a.data(), b.data());
        assert!(a.validate().is_ok());
        assert!(a.mean().max_component() > 0.0);
    }
}
