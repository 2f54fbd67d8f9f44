//! Factor export and import.
//!
//! A fitted model is written as four CSV files (`W.csv`, `V.csv`, `X.csv`,
//! `G.csv`) next to a `manifest.json` with the shapes and the fit summary.
//! The same layout is read back for warm starts and inspection.

use crate::dataset::{read_matrix_csv, write_matrix_csv};
use crate::error::{Error, Result};
use crate::tvvar::{FactorSet, FitReport};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Shape and fit summary stored next to the factor CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorManifest {
    pub num_vars: usize,
    pub num_steps: usize,
    pub order: usize,
    pub rank: usize,
    pub objective_trace: Vec<f64>,
    pub sweeps_run: usize,
    pub converged: bool,
}

/// Write factors and manifest into `dir`, returning the created paths.
pub fn export_factors(
    dir: &Path,
    factors: &FactorSet,
    report: &FitReport,
    num_steps: usize,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let manifest = FactorManifest {
        num_vars: factors.num_vars(),
        num_steps,
        order: factors.order,
        rank: factors.rank,
        objective_trace: report.objective_trace.clone(),
        sweeps_run: report.sweeps_run,
        converged: report.converged,
    };

    let mut written = Vec::new();
    for (name, matrix) in [
        ("W.csv", &factors.w),
        ("V.csv", &factors.v),
        ("X.csv", &factors.x),
        ("G.csv", &factors.g),
    ] {
        let path = dir.join(name);
        write_matrix_csv(matrix, &path)?;
        written.push(path);
    }

    let manifest_path = dir.join("manifest.json");
    // Round-trip through a Value so keys come out sorted.
    let value = serde_json::to_value(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, format!("{:#}\n", value))?;
    written.push(manifest_path);
    Ok(written)
}

/// Read factors and manifest back from `dir`.
pub fn import_factors(dir: &Path) -> Result<(FactorSet, FactorManifest)> {
    let manifest_path = dir.join("manifest.json");
    let raw = std::fs::read_to_string(&manifest_path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", manifest_path.display())))?;
    let manifest: FactorManifest = serde_json::from_str(&raw)
        .map_err(|e| Error::Data(format!("invalid manifest {}: {e}", manifest_path.display())))?;

    let w = read_matrix_csv(&dir.join("W.csv"))?;
    let v = read_matrix_csv(&dir.join("V.csv"))?;
    let x = read_matrix_csv(&dir.join("X.csv"))?;
    let g = read_matrix_csv(&dir.join("G.csv"))?;

    let expect = [
        (w.shape(), (manifest.num_vars, manifest.rank), "W"),
        ((v.shape()), (manifest.order * manifest.num_vars, manifest.rank), "V"),
        (x.shape(), (manifest.num_steps - manifest.order, manifest.rank), "X"),
        (g.shape(), (manifest.rank, manifest.rank * manifest.rank), "G"),
    ];
    for (got, want, name) in expect {
        if got != want {
            return Err(Error::Data(format!(
                "{name}.csv is {}x{} but the manifest implies {}x{}",
                got.0, got.1, want.0, want.1
            )));
        }
    }

    let factors = FactorSet::new(w, g, v, x, manifest.order, manifest.rank)?;
    Ok((factors, manifest))
}
