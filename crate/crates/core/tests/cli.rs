// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;
use std::process::Command;

use pizzaclock::cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use pizzaclock::sweep::load_record;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("pizzaclock").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn binary(args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_pizzaclock")).args(args).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8(o.stdout).unwrap())
}

fn train_small(dir: &Path, seed: &str) -> String {
    let path = dir.join(format!("run-{seed}.json"));
    let p = path.to_str().unwrap().to_string();
    let (code, out, err) = call(&[
        "train", "--p", "13", "--width", "16", "--epochs", "40", "--checkpoint-every", "20",
        "--seed", seed, "--attention-rate", "0.5", "--out", &p,
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("alpha=0.5"));
    p
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(call(&[]).0, EXIT_USAGE);
    assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(call(&["train", "--width", "wide", "--out", "x"]).0, EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let (code, _, err) = call(&["train", "--width", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.starts_with("error[usage]"));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    assert_eq!(call(&["classify", missing.to_str().unwrap()]).0, EXIT_DATA);
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    let (code, _, err) = call(&["analyze", garbage.to_str().unwrap()]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.starts_with("error[data]"));
}

#[test]
fn help_exits_0() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, EXIT_OK);
    for verb in ["train", "analyze", "isolate", "sweep", "classify", "report", "selfcheck"] {
        assert!(out.contains(verb), "{verb} missing from help");
    }
}

#[test]
fn selfcheck_passes() {
    let (code, out, _) = call(&["selfcheck", "--probes", "4"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(!out.contains("FAIL"));
}

#[test]
fn train_analyze_isolate_classify_report() {
    let dir = tempfile::tempdir().unwrap();
    let a = train_small(dir.path(), "1");
    let b = train_small(dir.path(), "2");

    let heat = dir.path().join("heat.svg");
    let (code, out, _) = call(&["analyze", &a, "--heatmap", heat.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("gradient_symmetricity"));
    assert!(std::fs::read_to_string(&heat).unwrap().starts_with("<svg"));

    let figs = dir.path().join("figs");
    let (code, out, _) = call(&["isolate", &a, "--pairs", "2", "--figures", figs.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("six_component_accuracy"));
    assert!(figs.join("circle-2.svg").exists());
    assert_eq!(load_record(Path::new(&a)).unwrap().circles.len(), 2);

    let (code, out, _) = call(&["classify", &a, &b]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 2);

    let phase = dir.path().join("phase.svg");
    let csv = dir.path().join("runs.csv");
    let (code, _, err) = call(&[
        "report", "--runs", dir.path().to_str().unwrap(), "--out", phase.to_str().unwrap(),
        "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 3);
}

#[test]
fn binary_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let a = train_small(dir.path(), "3");
    let (lib_code, lib_out, _) = call(&["classify", &a]);
    let (bin_code, bin_out) = binary(&["classify", &a]);
    assert_eq!((lib_code, lib_out), (bin_code, bin_out));
    assert_eq!(binary(&["nonsense"]).0, EXIT_USAGE);
}
