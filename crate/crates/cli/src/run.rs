//! Subcommand execution.

use crate::config::{FlatlandArgs, OutputArgs, RenderArgs, ReportArgs, RmseArgs, RunConfig};
use crate::output::{manifest_path, read_pfm, write_image, CheckpointRecord, Format, Manifest};
use crate::report::{convergence_report, to_csv};
use anyhow::{Context, Result};
use cmlt_bdpt::{bdpt_image, Scene, MAX_K};
use cmlt_core::kernel::PrimaryKernel;
use cmlt_core::{Image, MoveKind};
use cmlt_flatland::{reference_image, run_variant, FlatScene, Flatland, Variant, VariantConfig};
use cmlt_render::{render, Algorithm, RenderSettings};
use std::io::Write;
use std::path::Path;

/// Runs one configuration. Text results go to `stdout`.
pub fn execute(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    match cfg {
        RunConfig::Flatland(a) => flatland(cfg, a),
        RunConfig::Render(a) => render_cmd(cfg, a),
        RunConfig::Rmse(a) => rmse_cmd(a, stdout),
        RunConfig::Report(a) => report_cmd(a, stdout),
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn load_reference(o: &OutputArgs) -> Result<Option<Image>> {
    o.reference.as_deref().map(read_pfm).transpose()
}

fn finish(cfg: &RunConfig, o: &OutputArgs, image: &Image, b: Vec<f64>, checkpoints: Vec<CheckpointRecord>) -> Result<()> {
    write_image(image, &o.out, Format::Pfm, 0.0)?;
    if let Some(p) = &o.png {
        write_image(image, p, Format::Png, o.exposure)?;
    }
    if let Some(p) = &o.csv {
        std::fs::write(p, to_csv(&checkpoints)).with_context(|| format!("writing {}", p.display()))?;
    }
    Manifest { config: cfg.clone(), b, checkpoints }.write(&manifest_path(&o.out))
}

fn flatland(cfg: &RunConfig, a: &FlatlandArgs) -> Result<()> {
    let fl = Flatland::new(FlatScene { resolution: a.resolution, ..FlatScene::default() });
    let reference = load_reference(&a.output)?;
    if a.variant == "reference" {
        log::info!("flatland reference, {} spp", a.spp);
        let img = reference_image(&fl, a.spp, a.seed);
        return finish(cfg, &a.output, &img, Vec::new(), Vec::new());
    }
    let variant: Variant = a.variant.parse().map_err(anyhow::Error::msg)?;
    let vc = VariantConfig { kernel: PrimaryKernel::new(a.sigma, a.large_step), swap_period: a.swap_period, b_samples: a.b_samples };
    log::info!("flatland {variant}, {} samples", a.samples);
    let out = run_variant(&fl, variant, a.samples, a.seed, &vc)?;
    let d = &out.diagnostics;
    let mut pert = d.stats(MoveKind::SmallStep);
    pert.merge(&d.stats(MoveKind::LargeStep));
    pert.merge(&d.stats(MoveKind::InversePerturbation));
    let mut swap = d.stats(MoveKind::ReplicaSwap);
    swap.merge(&d.stats(MoveKind::TemperingSwap));
    let record = CheckpointRecord {
        mutations: a.samples,
        rmse: reference.as_ref().map(|r| cmlt_flatland::rmse(&out.image, r)).transpose()?,
        perturbation_acceptance: pert.acceptance_rate(),
        swap_acceptance: swap.acceptance_rate(),
        image: file_name(&a.output.out),
    };
    finish(cfg, &a.output, &out.image, out.b, vec![record])
}

fn load_scene(a: &RenderArgs) -> Result<Scene> {
    let scene = match &a.scene {
        Some(p) => Scene::load(p)?,
        None => Scene::desk(32, 32),
    };
    let d = scene.camera.desc;
    Ok(match (a.width, a.height) {
        (None, None) => scene,
        (w, h) => scene.with_resolution(w.unwrap_or(d.width), h.unwrap_or(d.height)),
    })
}

fn render_cmd(cfg: &RunConfig, a: &RenderArgs) -> Result<()> {
    let scene = load_scene(a)?;
    let reference = load_reference(&a.output)?;
    if a.algo == "bdpt" {
        log::info!("bdpt, {} spp", a.spp);
        let img = bdpt_image(&scene, a.spp, a.seed, MAX_K);
        return finish(cfg, &a.output, &img, Vec::new(), Vec::new());
    }
    let algorithm: Algorithm = a.algo.parse().map_err(anyhow::Error::msg)?;
    let settings = RenderSettings {
        swap_period: a.swap_period,
        n_init: a.n_init,
        kernel: PrimaryKernel::new(a.sigma, a.large_step),
        checkpoints: a.checkpoints,
        ..RenderSettings::new(algorithm, a.mutations, a.chains, a.seed)
    };
    log::info!("{algorithm}, {} mutations over {} chains", a.mutations, a.chains);
    let out = render(&scene, &settings, reference.as_ref())?;
    let last = out.checkpoints.len().saturating_sub(1);
    let stem = a.output.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut records = Vec::new();
    for (i, c) in out.checkpoints.iter().enumerate() {
        let image = if i == last {
            file_name(&a.output.out)
        } else {
            let name = format!("{stem}.ckpt{i}.pfm");
            write_image(&c.image, &a.output.out.with_file_name(&name), Format::Pfm, 0.0)?;
            name
        };
        records.push(CheckpointRecord {
            mutations: c.mutations,
            rmse: c.rmse,
            perturbation_acceptance: c.perturbation_acceptance,
            swap_acceptance: c.swap_acceptance,
            image,
        });
    }
    finish(cfg, &a.output, &out.image, vec![out.b], records)
}

fn rmse_cmd(a: &RmseArgs, stdout: &mut dyn Write) -> Result<()> {
    let v = cmlt_flatland::rmse(&read_pfm(&a.a)?, &read_pfm(&a.b)?)?;
    writeln!(stdout, "{v:e}")?;
    if let Some(p) = &a.csv {
        let s = format!("a,b,rmse\n{},{},{v:e}\n", a.a.display(), a.b.display());
        std::fs::write(p, s).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn report_cmd(a: &ReportArgs, stdout: &mut dyn Write) -> Result<()> {
    let reference = a.reference.as_deref().map(read_pfm).transpose()?;
    let csv = convergence_report(&a.run, reference.as_ref())?;
    match &a.out {
        Some(p) => std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => stdout.write_all(csv.as_bytes())?,
    }
    Ok(())
}
