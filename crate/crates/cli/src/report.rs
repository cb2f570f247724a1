//! Convergence CSV.

use crate::output::{read_pfm, CheckpointRecord, Manifest};
use anyhow::Result;
use cmlt_core::Image;
use std::fmt::Write;
use std::path::Path;

pub const HEADER: &str = "mutations,rmse,perturbation_acceptance,swap_acceptance";

/// One row per checkpoint; a missing RMSE is an empty field.
pub fn to_csv(rows: &[CheckpointRecord]) -> String {
    let mut s = format!("{HEADER}\n");
    for r in rows {
        let rmse = r.rmse.map(|v| format!("{v:e}")).unwrap_or_default();
        writeln!(s, "{},{},{:e},{:e}", r.mutations, rmse, r.perturbation_acceptance, r.swap_acceptance).unwrap();
    }
    s
}

/// Rows of a saved run. With a reference, RMSE is recomputed from the
/// checkpoint images next to `manifest_path`.
pub fn convergence_report(manifest_path: &Path, reference: Option<&Image>) -> Result<String> {
    let m = Manifest::read(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new(""));
    let mut rows = m.checkpoints;
    if let Some(r) = reference {
        for row in rows.iter_mut() {
            let img = read_pfm(&dir.join(&row.image))?;
            row.rmse = Some(cmlt_flatland::rmse(&img, r)?);
        }
    }
    Ok(to_csv(&rows))
}
