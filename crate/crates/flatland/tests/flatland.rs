use cmlt_core::chart::BoxedChart;
use cmlt_core::{Image, MoveKind, Rgb, SamplingAtlas, SamplingChart};
use cmlt_flatland::quadrature::Quadrature;
use cmlt_flatland::*;

#[test]
fn reference_brightness_matches_quadrature() {
    let scene = FlatScene { resolution: 128, ..FlatScene::default() };
    let fl = Flatland::new(scene);
    let img = reference_image(&fl, 64, 17);
    let q = Quadrature::new(scene).mean_irradiance(32, 6);
    let m = img.mean();
    for (a, b) in m.to_array().into_iter().zip(q.to_array()) {
        assert!((a - b).abs() < 0.01 * b, "{m:?} vs {q:?}");
    }
}

#[test]
fn independent_reference_halves_agree() {
    let fl = Flatland::new(FlatScene { resolution: 64, ..FlatScene::default() });
    let a = reference_image(&fl, 32, 1);
    let b = reference_image(&fl, 32, 2);
    let d: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| (*x - *y) as f64).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 3.0 * (var / n).sqrt(), "mean {mean} sd {}", (var / n).sqrt());
}

#[test]
fn rmse_examples() {
    let mut a = Image::new(4, 4);
    for y in 0..4 {
        for x in 0..4 {
            a.set(x, y, Rgb::new(x as f64, y as f64, 0.5));
        }
    }
    assert_eq!(rmse(&a, &a).unwrap(), 0.0);
    let shifted = Image::from_data(4, 4, a.data().iter().map(|v| v + 0.25).collect());
    assert!((rmse(&a, &shifted).unwrap() - 0.25).abs() < 1e-7);
    // Hand computation: only the red channel of pixel (1, 2) differs, by 3.
    let mut b = a.clone();
    b.set(1, 2, Rgb::new(4.0, 2.0, 0.5));
    let expected = (9.0f64 / 48.0).sqrt();
    assert!((rmse(&a, &b).unwrap() - expected).abs() < 1e-7);
    assert!(rmse(&a, &Image::new(2, 2)).is_err());
}

/// Identity chart on the unit hypercube: a constant integrand is exactly
/// importance sampled.
struct Cube;

impl SamplingChart for Cube {
    type Point = [f64; 4];

    fn dim(&self) -> usize {
        4
    }

    fn reverse_dim(&self) -> usize {
        0
    }

    fn forward(&self, u: &[f64]) -> Option<[f64; 4]> {
        Some([u[0], u[1], u[2], u[3]])
    }

    fn right_inverse(&self, x: &[f64; 4], _v: &[f64]) -> Option<Vec<f64>> {
        Some(x.to_vec())
    }

    fn density(&self, _x: &[f64; 4]) -> f64 {
        1.0
    }
}

struct Flat {
    atlas: SamplingAtlas<[f64; 4]>,
}

impl FlatProblem for Flat {
    type Path = [f64; 4];

    fn atlas(&self) -> &SamplingAtlas<[f64; 4]> {
        &self.atlas
    }

    fn contribution(&self, _x: &[f64; 4]) -> Rgb {
        Rgb::new(2.0, 1.0, 0.5)
    }

    fn film(&self, x: &[f64; 4]) -> (f64, f64) {
        (x[0], x[1])
    }

    fn resolution(&self) -> usize {
        8
    }
}

#[test]
fn perfectly_importance_sampled_chain_accepts_everything() {
    let p = Flat { atlas: SamplingAtlas::new(vec![Box::new(Cube) as BoxedChart<[f64; 4]>]) };
    let n = 640_000;
    let out = run_variant(&p, Variant::Pssmlt1, n, 3, &VariantConfig::default()).unwrap();
    for k in [MoveKind::SmallStep, MoveKind::LargeStep] {
        let s = out.diagnostics.stats(k);
        assert!(s.proposed > 0);
        assert_eq!(s.accepted, s.proposed);
    }
    assert!((out.b[0] - 2.0).abs() < 1e-12);
    let m = out.image.mean();
    assert!((m.r - 2.0).abs() < 1e-4 && (m.g - 1.0).abs() < 1e-4, "{m:?}");
    // Flat up to the noise of correlated pixel counts.
    let per_pixel = n as f64 / 64.0;
    for y in 0..8 {
        for x in 0..8 {
            let v = out.image.get(x, y).r / 2.0;
            assert!((v - 1.0).abs() < 10.0 / per_pixel.sqrt(), "{v}");
        }
    }
}

#[test]
fn rmse_decreases_with_sample_count() {
    let fl = Flatland::new(FlatScene { resolution: 32, ..FlatScene::default() });
    let reference = reference_image(&fl, 4096, 77);
    let cfg = VariantConfig { b_samples: 200_000, ..VariantConfig::default() };
    for v in Variant::ALL {
        let mut medians = Vec::new();
        for n in [100_000u64, 1_000_000, 4_000_000] {
            let mut e: Vec<f64> = (0..3).map(|s| rmse(&run_variant(&fl, v, n, s, &cfg).unwrap().image, &reference).unwrap()).collect();
            e.sort_by(f64::total_cmp);
            medians.push(e[1]);
        }
        assert!(medians[0] > medians[1] && medians[1] > medians[2], "{v}: {medians:?}");
    }
}
