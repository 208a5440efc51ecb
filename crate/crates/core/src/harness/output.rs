//! CSV, manifest and snapshot writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::allocation::to_mbps;
use crate::error::{Error, Result};
use crate::harness::census::{Popularity, RNG_ALGORITHM};
use crate::harness::sweep::{ScenarioConfig, SweepRow};
use crate::sim::Snapshot;

pub const SWEEP_HEADER: &str = "M,dist,replications,seed,avg_sat_equal_mean,avg_sat_equal_std,\
avg_sat_prop_mean,avg_sat_prop_std,improved_mean,degraded_mean,unchanged_mean";

/// Sweep rows as CSV. Floats use the shortest representation that round-trips.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.sessions,
            r.dist,
            r.replications,
            r.seed,
            r.avg_sat_equal.mean,
            r.avg_sat_equal.std,
            r.avg_sat_popularity.mean,
            r.avg_sat_popularity.std,
            r.improved.mean,
            r.degraded.mean,
            r.unchanged.mean,
        ));
    }
    out
}

/// Run description written next to every output file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub rng: &'static str,
    pub replication_seeding: &'static str,
    pub capacity_mbps: f64,
    pub beta_max_mbps: f64,
    pub beta_min_mbps: f64,
    pub min_sessions: usize,
    pub max_sessions: usize,
    pub total_users: u64,
    pub dist: Popularity,
    pub dist_label: String,
    pub replications: usize,
    pub seed: u64,
    pub base_layer_mbps: f64,
    pub enh_layer_mbps: f64,
    /// Session counts that could not be run.
    pub skipped_infeasible: Vec<usize>,
}

impl RunManifest {
    pub fn for_sweep(config: &ScenarioConfig, skipped: &[usize]) -> Self {
        RunManifest {
            tool: "popcast",
            version: env!("CARGO_PKG_VERSION"),
            rng: RNG_ALGORITHM,
            replication_seeding: "splitmix64(splitmix64(splitmix64(seed) ^ M) ^ replication)",
            capacity_mbps: to_mbps(config.params.capacity_bps()),
            beta_max_mbps: to_mbps(config.params.max_session_bps()),
            beta_min_mbps: to_mbps(config.params.min_session_bps()),
            min_sessions: config.min_sessions,
            max_sessions: config.max_sessions,
            total_users: config.total_users,
            dist: config.dist,
            dist_label: config.dist.to_string(),
            replications: config.replications,
            seed: config.seed,
            base_layer_mbps: to_mbps(config.profile.base_bps()),
            enh_layer_mbps: to_mbps(config.profile.enhancement_bps()),
            skipped_infeasible: skipped.to_vec(),
        }
    }
}

/// `results.csv` -> `results.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(contents).map_err(|e| Error::io(path, e))
}

pub fn manifest_json<T: Serialize>(manifest: &T) -> String {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    text
}

/// Writes the CSV and its manifest.
pub fn emit_sweep(rows: &[SweepRow], manifest: &RunManifest, out: &Path) -> Result<()> {
    write_file(out, sweep_csv(rows).as_bytes())?;
    write_file(&manifest_path(out), manifest_json(manifest).as_bytes())
}

/// One JSON object per snapshot, newline separated.
pub fn snapshots_jsonl(snapshots: &[Snapshot]) -> String {
    let mut out = String::new();
    for snap in snapshots {
        out.push_str(&serde_json::to_string(snap).expect("snapshots serialize"));
        out.push('\n');
    }
    out
}
