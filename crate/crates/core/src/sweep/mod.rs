// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run records, Pizza/Clock classification, phase boundaries and sweeps.

mod boundary;
mod persist;
mod record;
mod runner;

pub use boundary::{phase_boundary, PhaseBoundary};
pub use persist::{
    export_csv, export_json, import_dir, load_record, read_json, save_record, write_text, IndexEntry,
    INDEX_FILE,
};
pub use record::{classify, Classification, Label, RunRecord, RunStatus, Thresholds, SCHEMA_VERSION};
pub use runner::{
    cache_file_name, default_workers, reference_runs, run_sweep, train_cached, Sampler, SweepSpec,
    DESK_EPOCHS, WORKERS_ENV,
};
