//! Whitespace-separated column files for external plotting tools.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::manifest::RunManifest;

/// `(source CSV, data file, columns to copy, comment)`.
const PLOTS: &[(&str, &str, &[&str], &str)] = &[
    (
        "trajectory.csv",
        "norms.dat",
        &["t_s", "hs_norm", "l2_norm", "max_modulus"],
        "norms against time",
    ),
    ("limit.csv", "limit.dat", &["delta_s", "error_hs"], "use log-log axes"),
    (
        "refinements.csv",
        "refinements.dat",
        &["delta_s", "error_hs"],
        "use log-log axes",
    ),
];

/// Convert CSV columns to `.dat` files. Rows with an empty cell in a copied
/// column are skipped.
pub fn columns(csv: &str, wanted: &[&str], comment: &str) -> Result<String, CliError> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let idx: Vec<usize> = wanted
        .iter()
        .map(|w| {
            header
                .iter()
                .position(|h| h == w)
                .ok_or_else(|| CliError::Config(format!("column {w} missing from CSV header")))
        })
        .collect::<Result<_, _>>()?;
    let mut out = format!("# {} ({comment})\n", wanted.join(" "));
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let picked: Option<Vec<&str>> = idx
            .iter()
            .map(|&i| cells.get(i).copied().filter(|c| !c.is_empty()))
            .collect();
        if let Some(p) = picked {
            writeln!(out, "{}", p.join(" ")).unwrap();
        }
    }
    Ok(out)
}

pub fn emit_plotdata(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let manifest = RunManifest::load(dir)?;
    let mut written = Vec::new();
    for (src, dst, wanted, comment) in PLOTS {
        if manifest.output(src).is_none() {
            continue;
        }
        let csv = fs::read_to_string(dir.join(src)).map_err(|e| CliError::Config(format!("{src}: {e}")))?;
        let path = dir.join(dst);
        fs::write(&path, columns(&csv, wanted, comment)?)?;
        written.push(path);
    }
    Ok(written)
}
