// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::persist::{index_entry, load_record, record_file_name, save_record, write_json, INDEX_FILE};
use super::record::RunRecord;
use crate::error::{Error, Result};
use crate::models::RunConfig;
use crate::numerics::SeededRng;
use crate::training::train;

/// Environment variable holding the number of worker threads.
pub const WORKERS_ENV: &str = "PIZZACLOCK_WORKERS";
/// RNG stream reserved for drawing sweep configurations.
const SWEEP_STREAM: u64 = 3;

/// How one swept quantity is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Fixed(f64),
    Grid(Vec<f64>),
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
}

impl Sampler {
    fn grid(&self) -> Option<Vec<f64>> {
        match self {
            Self::Fixed(v) => Some(vec![*v]),
            Self::Grid(v) => Some(v.clone()),
            _ => None,
        }
    }

    fn draw(&self, rng: &mut SeededRng) -> Result<f64> {
        match self {
            Self::Fixed(v) => Ok(*v),
            Self::Grid(v) if v.is_empty() => Err(Error::Config("empty grid sampler".into())),
            Self::Grid(v) => Ok(v[rng.below(v.len())]),
            Self::Uniform { lo, hi } => Ok(rng.uniform_in(*lo, *hi)),
            Self::LogUniform { lo, hi } if *lo > 0.0 && *hi >= *lo => {
                Ok(rng.uniform_in(lo.ln(), hi.ln()).exp())
            }
            Self::LogUniform { lo, hi } => Err(Error::Config(format!(
                "log-uniform bounds [{lo}, {hi}] must be positive and ordered"
            ))),
        }
    }
}

/// Declarative sweep description, read from JSON.
///
/// Without `runs` the samplers must all be fixed or grids and the sweep is
/// their Cartesian product times `seeds`. With `runs` each run draws every
/// quantity from `sampler_seed`; widths round to a multiple of the head count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(default)]
    pub base: RunConfig,
    pub attention_rate: Sampler,
    pub width: Sampler,
    #[serde(default = "one_layer")]
    pub layers: Sampler,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub runs: Option<usize>,
    #[serde(default)]
    pub sampler_seed: u64,
}

fn one_layer() -> Sampler {
    Sampler::Fixed(1.0)
}

impl SweepSpec {
    /// Uniform attention rate at width 128, one layer.
    pub fn fixed_width(runs: usize, base: RunConfig) -> Self {
        Self {
            base,
            attention_rate: Sampler::Uniform { lo: 0.0, hi: 1.0 },
            width: Sampler::Fixed(128.0),
            layers: one_layer(),
            seeds: Vec::new(),
            runs: Some(runs),
            sampler_seed: 0,
        }
    }

    /// Uniform attention rate, log-uniform width in [32, 512].
    pub fn varying_width(runs: usize, base: RunConfig) -> Self {
        Self {
            width: Sampler::LogUniform { lo: 32.0, hi: 512.0 },
            ..Self::fixed_width(runs, base)
        }
    }

    /// As [`SweepSpec::varying_width`] with the given layer counts.
    pub fn multi_layer(runs: usize, layers: Vec<f64>, base: RunConfig) -> Self {
        Self {
            layers: Sampler::Grid(layers),
            ..Self::varying_width(runs, base)
        }
    }

    fn config(&self, rate: f64, width: f64, layers: f64, seed: u64) -> RunConfig {
        let heads = self.base.heads.max(1) as f64;
        RunConfig {
            attention_rate: rate,
            width: ((width / heads).round().max(1.0) * heads) as usize,
            layers: layers.round().max(1.0) as usize,
            seed,
            ..self.base.clone()
        }
    }

    /// The run configurations in execution order.
    pub fn expand(&self) -> Result<Vec<RunConfig>> {
        let mut out = Vec::new();
        match self.runs {
            None => {
                let grid = |s: &Sampler, name: &str| {
                    s.grid().ok_or_else(|| {
                        Error::Config(format!("{name} needs a grid unless `runs` is set"))
                    })
                };
                let seeds = if self.seeds.is_empty() { vec![self.base.seed] } else { self.seeds.clone() };
                for &rate in &grid(&self.attention_rate, "attention_rate")? {
                    for &width in &grid(&self.width, "width")? {
                        for &layers in &grid(&self.layers, "layers")? {
                            for &seed in &seeds {
                                out.push(self.config(rate, width, layers, seed));
                            }
                        }
                    }
                }
            }
            Some(n) => {
                let mut rng = SeededRng::stream(self.sampler_seed, SWEEP_STREAM);
                for i in 0..n {
                    let rate = self.attention_rate.draw(&mut rng)?;
                    let width = self.width.draw(&mut rng)?;
                    let layers = self.layers.draw(&mut rng)?;
                    let seed = self.seeds.get(i).copied().unwrap_or(i as u64);
                    out.push(self.config(rate, width, layers, seed));
                }
            }
        }
        for c in &out {
            c.validate()?;
        }
        Ok(out)
    }
}

/// Epoch budget of the reference runs, with early stopping enabled.
pub const DESK_EPOCHS: usize = 5000;

/// Transformer runs at width 128 that exercise both phases and the
/// transition: three seeds at attention rates 0 and 1, two at 0.25, 0.5 and 0.75.
pub fn reference_runs() -> Vec<RunConfig> {
    let mut out = Vec::new();
    for (rate, seeds) in [(0.0, 1..4), (1.0, 1..4), (0.5, 1..3), (0.25, 1..3), (0.75, 1..3)] {
        for seed in seeds {
            out.push(RunConfig {
                epochs: DESK_EPOCHS,
                early_stop: true,
                ..RunConfig::transformer(rate, 128, seed)
            });
        }
    }
    out
}

/// File name that identifies a configuration within a cache directory.
pub fn cache_file_name(c: &RunConfig) -> String {
    format!(
        "{}-a{:.4}-d{}-l{}-s{}-e{}.json",
        c.family.name(),
        c.attention_rate,
        c.width,
        c.layers,
        c.seed,
        c.epochs
    )
}

/// Loads the record for `config` from `dir` if one with an identical
/// configuration is there, otherwise trains it and stores the result.
pub fn train_cached(
    dir: &Path,
    config: &RunConfig,
    on_checkpoint: impl FnMut(&crate::training::Checkpoint),
) -> Result<RunRecord> {
    let path = dir.join(cache_file_name(config));
    if let Ok(existing) = load_record(&path) {
        if existing.config == *config {
            return Ok(existing);
        }
    }
    let record = crate::training::train_with(config, crate::training::EarlyStop::default(), on_checkpoint)?;
    save_record(&path, &record)?;
    Ok(record)
}

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every configuration of `spec`, `workers` at a time.
///
/// With an output directory each record is written as soon as its run ends,
/// and a record already on disk with the same configuration is reused rather
/// than retrained. A failing run is recorded as failed; the sweep continues.
pub fn run_sweep(spec: &SweepSpec, out: Option<&Path>, workers: usize) -> Result<Vec<RunRecord>> {
    let configs = spec.expand()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let records: Vec<Result<RunRecord>> = pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(i, cfg)| {
                let path = out.map(|d| d.join(record_file_name(i, cfg)));
                if let Some(existing) = path.as_deref().and_then(|p| load_record(p).ok()) {
                    if existing.config == *cfg {
                        return Ok(existing);
                    }
                }
                let record = train(cfg).unwrap_or_else(|e| RunRecord::failed(cfg.clone(), e.to_string()));
                if let Some(p) = &path {
                    save_record(p, &record)?;
                }
                Ok(record)
            })
            .collect()
    });
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out {
        let index: Vec<_> = records
            .iter()
            .enumerate()
            .map(|(i, r)| index_entry(record_file_name(i, &r.config), r))
            .collect();
        write_json(&dir.join(INDEX_FILE), &index)?;
    }
    Ok(records)
}
