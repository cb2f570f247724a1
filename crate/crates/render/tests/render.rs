use cmlt_bdpt::reference::bdpt_sample;
use cmlt_bdpt::{bdpt_image, evaluate, evaluation_count, forward, join_prefixes, sample_eye_subpath, sample_light_subpath, Scene, MAX_K};
use cmlt_core::image::ImageAccumulator;
use cmlt_core::rng::{fill_uniform, stream};
use cmlt_core::{Diagnostics, MoveKind};
use cmlt_render::chain::{default_kernel, CHANGE_MOVED, CHANGE_PROPOSED};
use cmlt_render::*;
use proptest::prelude::*;
use rand::Rng;

/// All-connection BDPT sums of `f*/sum p` per technique, as `e[k][s]`,
/// with the standard error of every cell from batch means.
fn exhaustive_energies(scene: &Scene, n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let batches = 16;
    let mut per: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut lu = vec![0.0; 3 * MAX_K];
    let mut eu = vec![0.0; 3 * (MAX_K + 1)];
    for b in 0..batches {
        let mut rng = stream(seed, b);
        let mut e: Vec<Vec<f64>> = (0..=MAX_K).map(|k| vec![0.0; k + 1]).collect();
        for _ in 0..n / batches as usize {
            fill_uniform(&mut rng, &mut lu);
            fill_uniform(&mut rng, &mut eu);
            let light = sample_light_subpath(scene, &lu, MAX_K);
            let eye = sample_eye_subpath(scene, &eu, MAX_K + 1);
            for t in 1..=eye.len() {
                for s in 0..=light.len() {
                    if s + t < 2 || s + t - 1 > MAX_K {
                        continue;
                    }
                    let Some(p) = join_prefixes(&light, s, &eye, t) else { continue };
                    e[s + t - 1][s] += evaluate(scene, &p).weighted().max_component();
                }
            }
        }
        let m = (n / batches as usize) as f64;
        per.push(e.into_iter().map(|r| r.into_iter().map(|x| x / m).collect()).collect());
    }
    let mean: Vec<Vec<f64>> =
        (0..=MAX_K).map(|k| (0..=k).map(|s| per.iter().map(|e| e[k][s]).sum::<f64>() / batches as f64).collect()).collect();
    let se: Vec<Vec<f64>> = (0..=MAX_K)
        .map(|k| {
            (0..=k)
                .map(|s| {
                    let v = per.iter().map(|e| (e[k][s] - mean[k][s]).powi(2)).sum::<f64>() / (batches - 1) as f64;
                    (v / batches as f64).sqrt()
                })
                .collect()
        })
        .collect();
    (mean, se)
}

#[test]
fn brightness_matches_independent_bdpt() {
    let scene = Scene::desk(16, 16);
    let sd = estimate_and_seed(&scene, 1 << 18, 64, Grouping::Length, 1).unwrap();
    // oracle: every connection of full BDPT samples with uniform film points
    let n = 1 << 17;
    let mut rng = stream(77, 0);
    let mut lu = vec![0.0; 3 * MAX_K];
    let mut eu = vec![0.0; 3 * (MAX_K + 1)];
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n {
        fill_uniform(&mut rng, &mut lu);
        fill_uniform(&mut rng, &mut eu);
        let c: f64 = bdpt_sample(&scene, &lu, &eu, MAX_K).iter().map(|(_, _, c)| c.max_component()).sum();
        sum += c;
        sq += c * c;
    }
    let b = sum / n as f64;
    let se = ((sq / n as f64 - b * b) / n as f64).sqrt();
    assert!((sd.b - b).abs() < 0.01 * b, "seeding {} oracle {} ± {}", sd.b, b, se);
}

#[test]
fn seed_techniques_follow_technique_energy() {
    let scene = Scene::desk(16, 16);
    let (oracle, oracle_se) = exhaustive_energies(&scene, 1 << 16, 5);
    let runs = 8;
    let mut counts: Vec<Vec<f64>> = (0..=MAX_K).map(|k| vec![0.0; k + 1]).collect();
    let mut fracs: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut n_total = 0.0;
    for r in 0..runs {
        let sd = estimate_and_seed(&scene, 1 << 15, 512, Grouping::Length, 100 + r).unwrap();
        for s in &sd.seeds {
            counts[s.technique.k()][s.technique.s] += 1.0;
        }
        n_total += sd.seeds.len() as f64;
        let tot = sd.energy.total();
        fracs.push(sd.energy.e.iter().map(|row| row.iter().map(|e| e / tot).collect()).collect());
    }
    let o_tot: f64 = oracle.iter().flatten().sum();
    // length and technique marginals
    let mut cells: Vec<(String, f64, f64, f64, f64)> = Vec::new();
    let marg = |sel: &dyn Fn(usize, usize) -> bool| -> (f64, f64, f64, f64) {
        let mut obs = 0.0;
        let mut p = 0.0;
        let mut var_o = 0.0;
        for k in 0..=MAX_K {
            for s in 0..=k {
                if sel(k, s) {
                    obs += counts[k][s];
                    p += oracle[k][s] / o_tot;
                    var_o += (oracle_se[k][s] / o_tot).powi(2);
                }
            }
        }
        let fs: Vec<f64> = fracs
            .iter()
            .map(|f| (0..=MAX_K).flat_map(|k| (0..=k).map(move |s| (k, s))).filter(|&(k, s)| sel(k, s)).map(|(k, s)| f[k][s]).sum())
            .collect();
        let m = fs.iter().sum::<f64>() / fs.len() as f64;
        let var_s = fs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (fs.len() - 1) as f64 / fs.len() as f64;
        (obs, p, var_o, var_s)
    };
    for k in 1..=MAX_K {
        let (o, p, vo, vs) = marg(&|kk, _| kk == k);
        cells.push((format!("k={k}"), o, p, vo, vs));
    }
    for s in 0..=MAX_K {
        let (o, p, vo, vs) = marg(&|_, ss| ss == s);
        cells.push((format!("s={s}"), o, p, vo, vs));
    }
    for (name, obs, p, var_o, var_s) in cells {
        let exp = n_total * p;
        let sigma = (n_total * p * (1.0 - p) + n_total * n_total * (var_o + var_s)).sqrt();
        if exp < 1.0 && obs < 5.0 {
            continue;
        }
        assert!((obs - exp).abs() <= 3.0 * sigma, "{name}: {obs} seeds, expected {exp:.1} ± {sigma:.1}");
    }
}

#[test]
fn technique_changes_at_fixed_coordinates_mostly_move_the_path() {
    let scene = Scene::desk(16, 16);
    let sd = estimate_and_seed(&scene, 1 << 14, 256, Grouping::Length, 2).unwrap();
    let mut d = Diagnostics::default();
    let mut rng = stream(3, 3);
    let mut acc = ImageAccumulator::new(16, 16);
    let kern = default_kernel();
    for seed in &sd.seeds {
        let mut st = ChainState::from_seed(&scene, seed, true);
        let q = sd.energy.proposal(st.k());
        for i in 0..64 {
            if i % 4 == 0 {
                mmlt_step(&mut st, &scene, &q, &mut rng, &mut d);
            } else {
                primary_perturbation_step(&mut st, &kern, &scene, &mut rng, &mut acc, 1.0, &mut d);
            }
        }
    }
    let moved = d.counter(CHANGE_MOVED) as f64 / d.counter(CHANGE_PROPOSED) as f64;
    assert!(moved > 0.5, "{moved}");
    let a = d.stats(MoveKind::SmallStep).acceptance_rate();
    assert!(a > 0.0 && a < 1.0);
}

#[test]
fn accepted_swaps_preserve_the_path_without_evaluating_f() {
    let scene = Scene::desk(16, 16);
    let sd = estimate_and_seed(&scene, 1 << 14, 256, Grouping::Length, 4).unwrap();
    let mut d = Diagnostics::default();
    let mut rng = stream(5, 5);
    let mut acc = ImageAccumulator::new(16, 16);
    let kern = default_kernel();
    let mut accepted = 0;
    for seed in &sd.seeds {
        let mut st = ChainState::from_seed(&scene, seed, false);
        let q = sd.energy.proposal(st.k());
        for i in 0..48 {
            if i % 3 == 0 {
                let before = st.clone();
                let n0 = evaluation_count();
                let ok = chart_swap_bidir(&mut st, &scene, &q, &mut rng, &mut d);
                assert_eq!(evaluation_count(), n0);
                if ok && st.tech != before.tech {
                    let p = forward(&scene, st.tech, &st.u).expect("swapped coordinates are alive");
                    assert!(p.distance(&before.path) <= 1e-6, "{}", p.distance(&before.path));
                    let f0 = evaluate(&scene, &before.path).f;
                    let f1 = evaluate(&scene, &p).f;
                    assert!((f0 - f1).max_component().abs() <= 1e-6 * f0.max_component());
                    accepted += 1;
                }
            } else {
                primary_perturbation_step(&mut st, &kern, &scene, &mut rng, &mut acc, 1.0, &mut d);
            }
        }
    }
    assert!(accepted > 500, "{accepted}");
}

#[test]
fn render_is_deterministic_across_thread_counts() {
    let scene = Scene::desk(8, 8);
    let mut s = RenderSettings::new(Algorithm::Cmlt, 20_000, 40, 9);
    s.n_init = 4096;
    s.checkpoints = 3;
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| render(&scene, &s, None).unwrap());
    let b = three.install(|| render(&scene, &s, None).unwrap());
    assert_eq!(a.image.data(), b.image.data());
    assert_eq!(a.checkpoints.len(), 3);
    assert!(a.checkpoints.windows(2).all(|w| w[0].mutations < w[1].mutations));
    for algo in [Algorithm::Mmlt, Algorithm::Pssmlt] {
        s.algorithm = algo;
        let a = render(&scene, &s, None).unwrap();
        let b = render(&scene, &s, None).unwrap();
        assert_eq!(a.image.data(), b.image.data());
    }
}

#[test]
fn all_algorithms_match_the_bdpt_mean() {
    let scene = Scene::desk(16, 16);
    let reference = bdpt_image(&scene, 1024, 31, MAX_K).mean();
    for algo in [Algorithm::Cmlt, Algorithm::Mmlt, Algorithm::Pssmlt] {
        let mut s = RenderSettings::new(algo, 600_000, 256, 12);
        s.n_init = 1 << 18;
        let m = render(&scene, &s, None).unwrap().image.mean();
        for (a, b) in m.to_array().iter().zip(reference.to_array()) {
            assert!((a / b - 1.0).abs() < 0.03, "{algo}: {m:?} vs {reference:?}");
        }
    }
}

#[test]
fn more_shorter_chains_reduce_run_to_run_variance() {
    let scene = Scene::desk(16, 16);
    let variance = |chains: usize| -> f64 {
        let imgs: Vec<_> = (0..5)
            .map(|seed| {
                let mut s = RenderSettings::new(Algorithm::Cmlt, 200_000, chains, 40 + seed);
                s.n_init = 1 << 14;
                render(&scene, &s, None).unwrap().image
            })
            .collect();
        let n = imgs[0].data().len();
        (0..n)
            .map(|i| {
                let v: Vec<f64> = imgs.iter().map(|im| im.data()[i] as f64).collect();
                let m = v.iter().sum::<f64>() / v.len() as f64;
                v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
            })
            .sum::<f64>()
            / n as f64
    };
    let few = variance(16);
    let many = variance(1024);
    assert!(many < few, "1024 chains {many}, 16 chains {few}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn swap_partial_ratio_is_full_ratio(seed in 0u64..1000, pick in 0usize..64) {
        let scene = Scene::desk(8, 8);
        let sd = estimate_and_seed(&scene, 2048, 64, Grouping::Length, seed).unwrap();
        let st = ChainState::from_seed(&scene, &sd.seeds[pick % sd.seeds.len()], false);
        let q = sd.energy.proposal(st.k());
        let mut rng = stream(seed, 99);
        for _ in 0..8 {
            let _: f64 = rng.gen();
            if let Some(p) = propose_swap(&st, &scene, &q, &mut rng) {
                let full = cmlt_bdpt::inverse_density(&scene, &st.path, st.tech, &st.u)
                    / cmlt_bdpt::inverse_density(&scene, &st.path, p.tech, &p.u);
                prop_assert!((full - p.r_old / p.r_new).abs() <= 1e-9 * full.abs());
                let x = forward(&scene, p.tech, &p.u).unwrap();
                prop_assert!(x.distance(&st.path) <= 1e-6);
            }
        }
    }
}
