//! Image output and run manifests.

use crate::config::RunConfig;
use anyhow::{bail, Context, Result};
use cmlt_core::Image;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Pfm,
    Png,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Format> {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref() {
            Some("pfm") => Ok(Format::Pfm),
            Some("png") => Ok(Format::Png),
            _ => bail!("{}: expected a .pfm or .png extension", path.display()),
        }
    }
}

/// Validates `img`, then writes it. `exposure` only affects PNG.
pub fn write_image(img: &Image, path: &Path, format: Format, exposure: f64) -> Result<()> {
    img.validate().with_context(|| format!("refusing to write {}", path.display()))?;
    match format {
        Format::Pfm => img.write_pfm(path)?,
        Format::Png => img.write_png(path, exposure)?,
    }
    Ok(())
}

pub fn read_pfm(path: &Path) -> Result<Image> {
    Ok(Image::read_pfm(path)?)
}

/// One convergence sample of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub mutations: u64,
    pub rmse: Option<f64>,
    pub perturbation_acceptance: f64,
    pub swap_acceptance: f64,
    /// PFM file name, relative to the manifest.
    pub image: String,
}

/// Sits beside every image output as `<out>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    /// Normalization constant of each chain group.
    pub b: Vec<f64>,
    pub checkpoints: Vec<CheckpointRecord>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&s).with_context(|| format!("parsing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cmlt_core::Rgb;

    #[test]
    fn single_white_pixel_pfm() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("one.pfm");
        let mut img = Image::new(1, 1);
        img.set(0, 0, Rgb::new(1.0, 1.0, 1.0));
        write_image(&img, &p, Format::Pfm, 0.0).unwrap();
        let mut expected = b"PF\n1 1\n-1.0\n".to_vec();
        for _ in 0..3 {
            expected.extend_from_slice(&[0x00, 0x00, 0x80, 0x3f]);
        }
        assert_eq!(std::fs::read(&p).unwrap(), expected);
    }

    #[test]
    fn negative_pixel_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("neg.pfm");
        let mut img = Image::new(2, 1);
        img.set(1, 0, Rgb::new(0.5, -0.1, 0.0));
        assert!(write_image(&img, &p, Format::Pfm, 0.0).is_err());
        assert!(!p.exists());
    }

    #[test]
    fn format_follows_extension() {
        assert_eq!(Format::from_path(Path::new("a/b.PFM")).unwrap(), Format::Pfm);
        assert_eq!(Format::from_path(Path::new("x.png")).unwrap(), Format::Png);
        assert!(Format::from_path(Path::new("x.exr")).is_err());
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = read_pfm(Path::new("/nonexistent/dir/img.pfm")).unwrap_err();
        assert!(format!("{err:#}").contains("/nonexistent/dir/img.pfm"));
    }
}
