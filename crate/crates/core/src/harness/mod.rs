//! Experiment plumbing: random audiences, sweeps and file formats.

pub mod census;
pub mod formats;
pub mod output;
pub mod sweep;

pub use census::{random_census, replication_seed, Popularity};
pub use formats::{allocate_document, parse_trace, AllocateInput, AllocateOutput};
pub use output::{emit_sweep, snapshots_jsonl, sweep_csv, RunManifest};
pub use sweep::{run_sweep, ScenarioConfig, SweepOutcome, SweepRow};
