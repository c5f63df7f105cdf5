//! Output files. Everything is rendered in memory first and then written
//! through a temporary file in the target directory, so a failed run never
//! leaves a truncated file behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::harness::{ConvergenceResult, SweepResult};

pub const VERSION: &str = concat!("irsopt v", env!("CARGO_PKG_VERSION"));

/// A file to be written: name relative to the output directory, and bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Writes `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes every artifact, returning the written paths.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> std::io::Result<Vec<PathBuf>> {
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            write_atomic(&path, &a.bytes)?;
            Ok(path)
        })
        .collect()
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// JSON sidecar shared by all subcommands.
#[derive(Serialize)]
pub struct Sidecar<'a, T: Serialize> {
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub config: &'a RunConfig,
    pub result: T,
}

pub fn sidecar<T: Serialize>(command: &str, config: &RunConfig, result: T) -> Vec<u8> {
    let doc = Sidecar { version: VERSION, command, seed: config.system.seed, config, result };
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("sidecar serializes");
    bytes.push(b'\n');
    bytes
}

pub const SWEEP_HEADER: [&str; 6] =
    ["value", "method", "mean_rate_bps_hz", "stderr", "mean_converged_iter", "mean_wall_ms"];

pub fn sweep_csv(res: &SweepResult) -> Vec<u8> {
    csv_bytes(
        &SWEEP_HEADER,
        res.rows.iter().map(|r| {
            vec![
                num(r.value),
                r.method.to_string(),
                num(r.mean_rate_bps_hz),
                num(r.stderr),
                num(r.mean_converged_iter),
                num(r.mean_wall_ms),
            ]
        }),
    )
}

pub fn convergence_csv(res: &ConvergenceResult) -> Vec<u8> {
    csv_bytes(
        &["iteration", "power_db", "mean_rate_bps_hz", "stderr"],
        res.traces.iter().flat_map(|t| {
            t.mean_rate
                .iter()
                .zip(&t.stderr)
                .enumerate()
                .map(|(k, (m, s))| vec![k.to_string(), num(t.power_db), num(*m), num(*s)])
                .collect::<Vec<_>>()
        }),
    )
}

/// One row of the per-iteration trace of a single solve.
pub struct TraceRow {
    pub iteration: usize,
    pub rate: f64,
    pub lagrangian: Option<f64>,
    pub primal_residual: Option<f64>,
    pub extrapolation: Option<f64>,
}

pub fn trace_csv(rows: &[TraceRow]) -> Vec<u8> {
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    csv_bytes(
        &["iteration", "rate_bps_hz", "lagrangian", "primal_residual", "extrapolation"],
        rows.iter().map(|r| {
            vec![r.iteration.to_string(), num(r.rate), opt(r.lagrangian), opt(r.primal_residual), opt(r.extrapolation)]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRow {
    pub method: String,
    pub per_iteration: f64,
    pub repetitions: u64,
    pub one_time: f64,
    pub total: u64,
}

pub fn complexity_csv(rows: &[CostRow]) -> Vec<u8> {
    csv_bytes(
        &["method", "per_iteration", "repetitions", "one_time", "total"],
        rows.iter().map(|r| {
            vec![
                r.method.clone(),
                num(r.per_iteration),
                r.repetitions.to_string(),
                num(r.one_time),
                r.total.to_string(),
            ]
        }),
    )
}
