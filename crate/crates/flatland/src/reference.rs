//! Plain Monte Carlo reference images.

use crate::charts::FlatPath;
use crate::variants::{FlatProblem, Flatland, NEE, PT};
use cmlt_core::rng::{stream, stream_id};
use cmlt_core::{Image, Rgb};
use rand::Rng;
use rayon::prelude::*;

const TAG_REFERENCE: u32 = 4;

/// Estimate at ground point `(x, z)` from one draw of each technique,
/// combined with the balance heuristic.
fn pixel_sample<R: Rng>(fl: &Flatland, x: f64, z: f64, rng: &mut R) -> Rgb {
    let mut sum = Rgb::BLACK;
    for c in [NEE, PT] {
        let u = [x, z, rng.gen::<f64>(), rng.gen::<f64>()];
        let Some(p) = fl.atlas().chart(c).forward(&u) else {
            continue;
        };
        sum += weighted(fl, &p);
    }
    sum
}

fn weighted(fl: &Flatland, p: &FlatPath) -> Rgb {
    let f = fl.contribution(p);
    if f.is_black() {
        return Rgb::BLACK;
    }
    let d = fl.atlas().density_sum(p);
    if d > 0.0 {
        f * (1.0 / d)
    } else {
        Rgb::BLACK
    }
}

/// Reference image with `spp` jittered ground samples per pixel.
///
/// Rows are rendered in parallel, each from its own random stream, so the
/// result does not depend on the thread count.
pub fn reference_image(fl: &Flatland, spp: usize, seed: u64) -> Image {
    let res = fl.resolution();
    let side = (spp as f64).sqrt().floor().max(1.0) as usize;
    let rows: Vec<Vec<f32>> = (0..res)
        .into_par_iter()
        .map(|py| {
            let mut rng = stream(seed, stream_id(TAG_REFERENCE, py as u64));
            let mut row = vec![0f32; res * 3];
            for px in 0..res {
                let mut acc = Rgb::BLACK;
                for s in 0..spp {
                    // Stratified over a side x side grid, the remainder jittered.
                    let (jx, jz) = if s < side * side {
                        let (i, j) = (s % side, s / side);
                        ((i as f64 + rng.gen::<f64>()) / side as f64, (j as f64 + rng.gen::<f64>()) / side as f64)
                    } else {
                        (rng.gen(), rng.gen())
                    };
                    let x = (px as f64 + jx) / res as f64;
                    let z = (py as f64 + jz) / res as f64;
                    acc += pixel_sample(fl, x, z, &mut rng);
                }
                let v = acc * (1.0 / spp.max(1) as f64);
                for (k, c) in v.to_array().into_iter().enumerate() {
                    row[px * 3 + k] = c as f32;
                }
            }
            row
        })
        .collect();
    Image::from_data(res, res, rows.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::FlatScene;

    #[test]
    fn strip_shadow_of_light_b_is_black() {
        let scene = FlatScene { resolution: 128, light_a_scale: 0.0, hole_radius: 0.02, ..FlatScene::default() };
        let fl = Flatland::new(scene);
        let q = crate::quadrature::Quadrature::new(scene);
        let img = reference_image(&fl, 16, 3);
        let mut dark = 0;
        for py in 0..16 {
            for px in 96..128 {
                let corners = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.5, 0.5)];
                let shadowed = corners.iter().all(|(a, b)| q.light_b((px as f64 + a) / 128.0, (py as f64 + b) / 128.0) == 0.0);
                if shadowed {
                    assert_eq!(img.get(px, py), Rgb::BLACK, "({px},{py})");
                    dark += 1;
                }
            }
        }
        assert!(dark >= 4, "{dark}");
        assert!(img.mean().g > 0.0);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let fl = Flatland::new(FlatScene { resolution: 16, ..FlatScene::default() });
        let a = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| reference_image(&fl, 4, 9));
        let b = reference_image(&fl, 4, 9);
        assert_eq!(a.pfm_bytes(), b.pfm_bytes());
    }
}
