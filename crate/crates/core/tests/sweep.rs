// SPDX-License-Identifier: MIT OR Apache-2.0

use pizzaclock::models::RunConfig;
use pizzaclock::sweep::{import_dir, run_sweep, Sampler, SweepSpec, INDEX_FILE};

fn spec() -> SweepSpec {
    SweepSpec {
        base: RunConfig {
            p: 11,
            epochs: 30,
            checkpoint_every: 10,
            ..RunConfig::default()
        },
        attention_rate: Sampler::Grid(vec![0.0, 1.0]),
        width: Sampler::Fixed(16.0),
        layers: Sampler::Fixed(1.0),
        seeds: vec![1, 2],
        runs: None,
        sampler_seed: 0,
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let serial = run_sweep(&spec(), None, 1).unwrap();
    let parallel = run_sweep(&spec(), None, 3).unwrap();
    assert_eq!(serial.len(), 4);
    assert_eq!(serial, parallel);
}

#[test]
fn resumed_sweep_reuses_records() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_sweep(&spec(), Some(dir.path()), 2).unwrap();
    assert!(dir.path().join(INDEX_FILE).exists());
    let stamps: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != INDEX_FILE)
        .map(|e| (e.file_name(), e.metadata().unwrap().modified().unwrap()))
        .collect();
    let second = run_sweep(&spec(), Some(dir.path()), 2).unwrap();
    assert_eq!(first, second);
    for (name, stamp) in stamps {
        assert_eq!(std::fs::metadata(dir.path().join(name)).unwrap().modified().unwrap(), stamp);
    }
    assert_eq!(import_dir(dir.path()).unwrap().len(), 4);
}

#[test]
fn cli_sweep_reads_json_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(&spec()).unwrap()).unwrap();
    let out = dir.path().join("runs");
    let mut stdout = Vec::new();
    let code = pizzaclock::cli::run(
        ["pizzaclock", "sweep", spec_path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "2"],
        &mut stdout,
        &mut Vec::new(),
    );
    assert_eq!(code, 0);
    assert_eq!(String::from_utf8(stdout).unwrap().lines().count(), 4);
}

#[test]
fn documented_spec_format_parses() {
    let spec: SweepSpec = serde_json::from_str(
        r#"{
          "base": { "epochs": 5000, "early_stop": true },
          "attention_rate": { "grid": [0.0, 0.25, 0.5, 0.75, 1.0] },
          "width": { "fixed": 128 },
          "seeds": [1, 2, 3]
        }"#,
    )
    .unwrap();
    let configs = spec.expand().unwrap();
    assert_eq!(configs.len(), 15);
    assert!(configs.iter().all(|c| c.width == 128 && c.epochs == 5000 && c.early_stop && c.p == 59));
    let random: SweepSpec = serde_json::from_str(
        r#"{ "attention_rate": { "uniform": { "lo": 0, "hi": 1 } },
             "width": { "log_uniform": { "lo": 32, "hi": 512 } }, "runs": 5, "sampler_seed": 9 }"#,
    )
    .unwrap();
    assert_eq!(random.expand().unwrap().len(), 5);
}
