//! Writes an [`Outcome`] and its provenance to an output directory.

use std::fs;
use std::io;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::runner::{execute, Outcome, PointReport};

pub const CONFIG_ECHO: &str = "config.json";
pub const RESOLVED_CONFIG: &str = "resolved-config.json";
pub const MANIFEST: &str = "manifest.json";
pub const RESULTS: &str = "results.json";

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    kind: &'static str,
    seed: u64,
    workers: usize,
    wall_time_seconds: f64,
    /// The config as given, stored verbatim next to this file.
    config_file: &'static str,
    /// Defaults applied; runnable as is.
    resolved_config_file: &'static str,
    config: &'a ExperimentConfig,
    results_file: &'static str,
    required_failures: usize,
    points: &'a [PointReport],
    files: Vec<&'a str>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub points: usize,
    pub required_failures: usize,
    pub outcome: Outcome,
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("plain data serializes");
    bytes.push(b'\n');
    bytes
}

/// Runs `cfg` and writes trajectories, results and the manifest under
/// `out`. `config_text` is echoed verbatim; without it the resolved config
/// is echoed instead.
pub fn run_to_dir(
    cfg: &ExperimentConfig,
    config_text: Option<&str>,
    out: &Path,
    workers: usize,
) -> io::Result<RunSummary> {
    fs::create_dir_all(out)?;
    let start = Instant::now();
    let outcome = execute(cfg, workers);
    let wall = start.elapsed().as_secs_f64();

    let resolved = pretty(cfg);
    fs::write(out.join(CONFIG_ECHO), config_text.map_or(resolved.clone(), |t| t.as_bytes().to_vec()))?;
    fs::write(out.join(RESOLVED_CONFIG), &resolved)?;
    for file in &outcome.files {
        fs::write(out.join(&file.name), &file.bytes)?;
    }
    fs::write(out.join(RESULTS), pretty(&outcome.results))?;
    let manifest = Manifest {
        tool: "shellrg",
        version: env!("CARGO_PKG_VERSION"),
        kind: cfg.kind.name(),
        seed: cfg.seed,
        workers,
        wall_time_seconds: wall,
        config_file: CONFIG_ECHO,
        resolved_config_file: RESOLVED_CONFIG,
        config: cfg,
        results_file: RESULTS,
        required_failures: outcome.required_failures(),
        points: &outcome.points,
        files: outcome.files.iter().map(|f| f.name.as_str()).collect(),
    };
    fs::write(out.join(MANIFEST), pretty(&manifest))?;
    Ok(RunSummary {
        points: outcome.points.len(),
        required_failures: outcome.required_failures(),
        outcome,
    })
}
