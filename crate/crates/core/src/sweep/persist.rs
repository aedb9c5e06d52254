// SPDX-License-Identifier: MIT OR Apache-2.0

//! JSON and CSV persistence. Floats are written as shortest round-trip
//! decimals and parsed exactly, so a save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::record::RunRecord;
use crate::error::{Error, Result};
use crate::models::RunConfig;

pub const INDEX_FILE: &str = "index.json";

/// One line of a sweep directory's index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub file: String,
    pub attention_rate: f64,
    pub width: usize,
    pub layers: usize,
    pub seed: u64,
    pub converged: bool,
    pub label: Option<String>,
}

pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_vec_pretty(value).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_atomic(path, &text)
}

/// Reads any JSON document, reporting the path on failure.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes a text file with write-then-rename.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    write_atomic(path, contents.as_bytes())
}

/// Writes one record with write-then-rename.
pub fn save_record(path: &Path, record: &RunRecord) -> Result<()> {
    write_json(path, record)
}

pub fn load_record(path: &Path) -> Result<RunRecord> {
    read_json(path)
}

pub(crate) fn record_file_name(index: usize, c: &RunConfig) -> String {
    format!(
        "run-{index:04}-{}-a{:.4}-d{}-l{}-s{}.json",
        c.family.name(),
        c.attention_rate,
        c.width,
        c.layers,
        c.seed
    )
}

pub(crate) fn index_entry(file: String, r: &RunRecord) -> IndexEntry {
    IndexEntry {
        file,
        attention_rate: r.config.attention_rate,
        width: r.config.width,
        layers: r.config.layers,
        seed: r.config.seed,
        converged: r.converged,
        label: r.label().map(|l| l.name().to_string()),
    }
}

/// Writes every record to its own file in `dir` plus an index; returns the record paths.
pub fn export_json(records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(records.len());
    let mut index = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let name = record_file_name(i, &r.config);
        let path = dir.join(&name);
        save_record(&path, r)?;
        index.push(index_entry(name, r));
        paths.push(path);
    }
    write_json(&dir.join(INDEX_FILE), &index)?;
    Ok(paths)
}

/// Loads every record listed in `dir`'s index, or every `*.json` file if there is none.
pub fn import_dir(dir: &Path) -> Result<Vec<RunRecord>> {
    let index_path = dir.join(INDEX_FILE);
    if index_path.exists() {
        let index: Vec<IndexEntry> = read_json(&index_path)?;
        return index.iter().map(|e| load_record(&dir.join(&e.file))).collect();
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files.iter().map(|p| load_record(p)).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// One header row and one row per run: configuration, metrics and label.
pub fn export_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(
        "family,p,width,layers,attention_rate,seed,epochs_run,converged,circularity,\
         gradient_symmetricity,distance_irrelevance,val_accuracy,label\n",
    );
    for r in records {
        let c = &r.config;
        let m = r.metrics.as_ref();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.family.name(),
            c.p,
            c.width,
            c.layers,
            c.attention_rate,
            c.seed,
            r.epochs_run,
            r.converged,
            opt(m.and_then(|m| m.circularity)),
            opt(m.and_then(|m| m.gradient_symmetricity)),
            opt(m.and_then(|m| m.distance_irrelevance)),
            opt(m.and_then(|m| m.val_accuracy)),
            r.label().map(|l| l.name()).unwrap_or(""),
        );
    }
    out
}
