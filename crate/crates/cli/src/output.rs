//! CSV and JSON artifacts of a run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use sce_core::sce::{SceTrajectory, TrajectorySample};

use crate::error::CliResult;

pub const TRAJECTORY_COLUMNS: [&str; 13] = [
    "tau",
    "a",
    "a1",
    "a2",
    "a3",
    "hubble",
    "ricci",
    "M_pp_0",
    "M_pf_0",
    "M_ff_0",
    "M_ff_1",
    "trace_residual",
    "energy_residual",
];

/// 17 significant digits, so every value reads back bit for bit.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Rows of the trajectory table. M₀ includes the background-field shift, so
/// the energy residual can be recomputed from the row alone.
pub fn trajectory_row(s: &TrajectorySample) -> [f64; 13] {
    let m0 = s.background.shift(&s.moments.get(0));
    let m1 = s.moments.get(1);
    let j = &s.jet;
    [
        s.tau,
        j.a,
        j.a1,
        j.a2,
        j.a3,
        j.hubble(),
        j.ricci(),
        m0[2],
        m0[1],
        m0[0],
        m1[0],
        s.diagnostics.trace_residual,
        s.diagnostics.energy_residual,
    ]
}

pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> CliResult<usize> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    let mut n = 0;
    for r in rows {
        w.write_record(r.iter().map(|x| fmt_f64(*x)))?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

pub fn write_trajectory(path: &Path, traj: &SceTrajectory) -> CliResult<usize> {
    write_table(path, &TRAJECTORY_COLUMNS, traj.samples.iter().map(|s| trajectory_row(s).to_vec()))
}

/// Canonical text of a JSON value: keys sorted, shortest round-trip floats.
pub fn canonical(v: &Value) -> String {
    serde_json::to_string(v).expect("json value serializes")
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// `<stem>.json` next to a CSV: config echo plus its hash.
pub fn write_sidecar(csv: &Path, columns: &[&str], rows: usize, config: &Value) -> CliResult<PathBuf> {
    let path = csv.with_extension("json");
    let body = json!({
        "csv": csv.file_name().map(|f| f.to_string_lossy().into_owned()),
        "columns": columns,
        "rows": rows,
        "generator": format!("sce {}", env!("CARGO_PKG_VERSION")),
        "config_sha256": sha256_hex(&canonical(config)),
        "config": config,
    });
    write_json(&path, &body)?;
    Ok(path)
}

pub fn write_json(path: &Path, v: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(v).expect("report serializes");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub label: String,
    pub regime: String,
    /// None when the estimate does not apply.
    pub bound: Option<f64>,
    pub observed: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub version: String,
    pub config_sha256: String,
    pub wall_time_s: f64,
    /// Reason the integration stopped early, if it did.
    pub halt: Option<String>,
    pub metrics: BTreeMap<String, f64>,
    /// Metrics that came out NaN or infinite (JSON has no spelling for them).
    pub nonfinite: Vec<String>,
    pub bounds: Vec<BoundSummary>,
    pub files: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use sce_core::sce::Formulation;

    #[test]
    fn empty_trajectory_gives_header_only() {
        let dir = std::env::temp_dir().join(format!("sce-out-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("empty.csv");
        let traj = SceTrajectory { formulation: Formulation::FourthOrder, samples: vec![], halt: None, stats: Default::default() };
        assert_eq!(write_trajectory(&path, &traj).unwrap(), 0);
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, TRAJECTORY_COLUMNS.join(",") + "\n");
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
