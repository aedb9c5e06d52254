// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance suite, run without the test harness so its output is always
//! shown. Each criterion prints one `criterion N: PASS|FAIL` line.
//!
//! Criteria 1–4 and 10 need no training and always assert. Criteria 5–9
//! read the reference runs from `runs/reference/` at the workspace root,
//! training any that are missing (hours on one core; see the `reproduce`
//! example). Their outcome depends on what training produced, so a FAIL is
//! printed but only fails the test when `PIZZACLOCK_STRICT=1`.

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use pizzaclock::autodiff::finite_difference_check;
use pizzaclock::isolation::{
    circle_reports, circle_set_accuracy, detect_accompanying, estimate_k, six_component_accuracy,
    CircleReport,
};
use pizzaclock::metrics::{
    all_logits, circularity, correct_logits, distance_irrelevance, gradient_symmetricity, CorrectLogitMatrix,
    SampleSet,
};
use pizzaclock::models::{build, Family, RunConfig};
use pizzaclock::numerics::{Matrix, SeededRng};
use pizzaclock::oracles::{
    abs_cos_identity_deviation, clock_bilinear, clock_logit, fve, logit_tensor, pizza_logit,
    symmetric_decomposition_check, AnalyticModel, CircleSpec,
};
use pizzaclock::sweep::{
    export_json, import_dir, phase_boundary, reference_runs, train_cached, Label, RunRecord,
};
use pizzaclock::training::train;

/// max | |cos t| − |sin t| − cos 2t | on a 10⁶-point grid, computed
/// independently before the build.
const ABS_COS_GRID_MAX: f64 = 0.168374987;

fn report(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
}

fn strict() -> bool {
    std::env::var("PIZZACLOCK_STRICT").is_ok_and(|v| v == "1")
}

fn reference_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../runs/reference")
}

fn reference_records() -> &'static [RunRecord] {
    static RECORDS: OnceLock<Vec<RunRecord>> = OnceLock::new();
    RECORDS.get_or_init(|| {
        reference_runs()
            .iter()
            .map(|cfg| train_cached(&reference_dir(), cfg, |_| {}).expect("reference run"))
            .collect()
    })
}

fn circular(r: &RunRecord) -> bool {
    r.converged && r.metrics.as_ref().and_then(|m| m.circularity).is_some_and(|c| c >= 0.995)
}

fn runs_at(rate: f64) -> Vec<&'static RunRecord> {
    reference_records()
        .iter()
        .filter(|r| r.config.attention_rate == rate)
        .collect()
}

fn circles(r: &RunRecord, pairs: usize) -> Vec<CircleReport> {
    circle_reports(r.weights.as_ref().expect("weights stored"), pairs).expect("circle analysis")
}

fn finish(n: u32, pass: bool, detail: String) {
    report(n, pass, &detail);
    if strict() {
        assert!(pass, "criterion {n}: {detail}");
    }
}

fn criterion_01_gradient_engine() {
    let start = Instant::now();
    let configs = [
        RunConfig::transformer(0.5, 32, 11),
        RunConfig::linear(Family::LinearAlpha, 64, 12),
        RunConfig::linear(Family::LinearBeta, 64, 13),
        RunConfig::linear(Family::LinearGamma, 64, 14),
        RunConfig::linear(Family::LinearDelta, 64, 15),
    ];
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for cfg in &configs {
        let model = build(cfg).unwrap();
        let r = finite_difference_check(&model, 20, 1e-4).unwrap();
        worst = worst.max(r.max_rel_error);
        skipped += r.kink_skipped;
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-4 && secs < 60.0;
    report(
        1,
        pass,
        &format!("max relative error {worst:.2e}, {skipped} kink probes excluded, {secs:.1}s"),
    );
    assert!(pass);
}

fn criterion_02_analytic_metric_suite() {
    let start = Instant::now();
    let pizza = AnalyticModel::pizza(59, 1);
    let sym_pizza = gradient_symmetricity(&pizza, &SampleSet::Exhaustive).unwrap();
    let sg_pizza = sym_pizza.value.unwrap();
    let q_pizza = distance_irrelevance(&correct_logits(&pizza).unwrap()).unwrap();
    let fve_pizza = fve(&all_logits(&pizza).unwrap(), &logit_tensor(&pizza.spec, pizza_logit))
        .unwrap()
        .unwrap();
    let clock = AnalyticModel::clock(59, 1);
    let sg_clock = gradient_symmetricity(&clock, &SampleSet::Exhaustive).unwrap().value.unwrap();
    let l_clock = correct_logits(&clock).unwrap();
    let constant = l_clock.values.as_slice().iter().all(|v| (v - 1.0).abs() < 1e-12);
    let q_clock = distance_irrelevance(&l_clock);
    let secs = start.elapsed().as_secs_f64();
    let pass = (sg_pizza - 1.0).abs() < 1e-6
        && q_pizza < 0.3
        && fve_pizza >= 0.98
        && sg_clock.abs() < 1e-6
        && constant
        && q_clock.is_none()
        && secs < 300.0;
    report(
        2,
        pass,
        &format!(
            "pizza s_g {sg_pizza:.9} ({} degenerate skipped), q {q_pizza:.4}, fve {fve_pizza:.5}; \
             clock s_g {sg_clock:.2e}, constant L {constant}, q {q_clock:?}; {secs:.1}s",
            sym_pizza.degenerate
        ),
    );
    assert!(pass);
}

fn criterion_03_identity_suite() {
    let start = Instant::now();
    let mut rng = SeededRng::new(3);
    let decomposition = (0..10)
        .map(|_| {
            let (a, b) = (rng.uniform_in(-5.0, 5.0), rng.uniform_in(-5.0, 5.0));
            symmetric_decomposition_check(a, b, 100)
        })
        .fold(0.0, f64::max);
    let deviation = abs_cos_identity_deviation(1_000_000);
    let mut bilinear: f64 = 0.0;
    for k in [1, 17] {
        let spec = CircleSpec::new(59, k).unwrap();
        for a in 0..59 {
            for b in 0..59 {
                for c in 0..59 {
                    bilinear = bilinear.max((clock_logit(&spec, a, b, c) - clock_bilinear(&spec, a, b, c)).abs());
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = decomposition < 1e-12
        && deviation < 0.25
        && (deviation - ABS_COS_GRID_MAX).abs() < 1e-9
        && bilinear < 1e-12
        && secs < 60.0;
    report(
        3,
        pass,
        &format!(
            "decomposition residual {decomposition:.2e}, abs-cos max {deviation:.9} (oracle {ABS_COS_GRID_MAX}), \
             bilinear gap {bilinear:.2e}; {secs:.1}s"
        ),
    );
    assert!(pass);
}

fn criterion_04_trivial_metric_exactness() {
    let p = 59;
    let mut rng = SeededRng::new(4);
    let mut worst_zero: f64 = 0.0;
    let mut worst_one: f64 = 0.0;
    for _ in 0..10 {
        let f: Vec<f64> = (0..p).map(|_| rng.normal()).collect();
        let diff = CorrectLogitMatrix {
            p,
            values: Matrix::from_fn(p, p, |a, b| f[(a + p - b) % p]),
        };
        let sum = CorrectLogitMatrix {
            p,
            values: Matrix::from_fn(p, p, |a, b| f[(a + b) % p]),
        };
        worst_zero = worst_zero.max(distance_irrelevance(&diff).unwrap().abs());
        worst_one = worst_one.max((distance_irrelevance(&sum).unwrap() - 1.0).abs());
    }
    let wave = |k: usize, j: usize| 2.0 * std::f64::consts::PI * ((k * j) % p) as f64 / p as f64;
    let emb = Matrix::from_fn(p, 8, |j, c| match c {
        0 => 2.0 * wave(17, j).cos(),
        1 => 2.0 * wave(17, j).sin(),
        2 => wave(3, j).cos(),
        3 => wave(3, j).sin(),
        _ => 0.0,
    });
    let circ = circularity(&emb, p).unwrap().unwrap();
    let mut missed = Vec::new();
    for k in 1..p {
        let pts = Matrix::from_fn(p, 2, |t, c| if c == 0 { wave(k, t).cos() } else { wave(k, t).sin() });
        if estimate_k(&pts).unwrap().k != k {
            missed.push(k);
        }
    }
    let pass = worst_zero < 1e-12 && worst_one < 1e-12 && (circ - 1.0).abs() < 1e-9 && missed.is_empty();
    report(
        4,
        pass,
        &format!(
            "q(f(a-b)) max {worst_zero:.1e}, |q(f(a+b))-1| max {worst_one:.1e}, circularity {circ:.12}, \
             estimate_k misses {missed:?}"
        ),
    );
    assert!(pass);
}

fn phase_summary(runs: &[&RunRecord]) -> String {
    runs.iter()
        .map(|r| {
            let m = r.metrics.as_ref();
            format!(
                "seed {} conv {} circ {:.4} s_g {:.4} q {:.3} {}",
                r.config.seed,
                r.converged,
                m.and_then(|m| m.circularity).unwrap_or(f64::NAN),
                m.and_then(|m| m.gradient_symmetricity).unwrap_or(f64::NAN),
                m.and_then(|m| m.distance_irrelevance).unwrap_or(f64::NAN),
                r.label().map_or("-", |l| l.name())
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn criterion_05_pizza_phase() {
    let runs = runs_at(0.0);
    let good: Vec<_> = runs.iter().filter(|r| circular(r)).collect();
    let ok = |r: &RunRecord| {
        let m = r.metrics.as_ref().unwrap();
        m.gradient_symmetricity.is_some_and(|s| s > 0.95)
            && m.distance_irrelevance.is_some_and(|q| q < 0.5)
            && r.label() == Some(Label::Pizza)
    };
    // An empty set would hold vacuously, so it counts as a failure.
    let pass = !good.is_empty() && good.iter().all(|r| ok(r));
    finish(5, pass, format!("{} circular converged of {} (2 expected): {}", good.len(), runs.len(), phase_summary(&runs)));
}

fn criterion_06_clock_phase() {
    let runs = runs_at(1.0);
    let good: Vec<_> = runs.iter().filter(|r| circular(r)).collect();
    let ok = |r: &RunRecord| {
        let m = r.metrics.as_ref().unwrap();
        m.gradient_symmetricity.is_some_and(|s| s < 0.9)
            && m.distance_irrelevance.is_some_and(|q| q > 0.5)
            && r.label() == Some(Label::Clock)
    };
    let pass = !good.is_empty() && good.iter().all(|r| ok(r));
    finish(6, pass, format!("{} circular converged of {}: {}", good.len(), runs.len(), phase_summary(&runs)));
}

fn pizza_runs() -> Vec<&'static RunRecord> {
    reference_records()
        .iter()
        .filter(|r| r.converged && r.label() == Some(Label::Pizza))
        .collect()
}

/// Converged runs at `rate` that the circularity gate kept out of the
/// qualifying set. They are analysed for the log only and never counted.
fn gated_out(rate: f64) -> Vec<&'static RunRecord> {
    runs_at(rate).into_iter().filter(|r| r.converged && !circular(r)).collect()
}

fn pizza_isolation(r: &RunRecord) -> (bool, String) {
    let model = r.weights.as_ref().unwrap();
    let cs = circles(r, 3);
    let margins_ok = cs
        .iter()
        .filter(|c| c.circular)
        .all(|c| matches!((c.fve_pizza, c.fve_clock), (Some(p), Some(k)) if p > k + 0.1));
    let single = cs[0].isolated_accuracy;
    let six = six_component_accuracy(model).unwrap();
    let fves: Vec<String> = cs
        .iter()
        .map(|c| match (c.fve_pizza, c.fve_clock) {
            (Some(p), Some(k)) => format!("{p:.3}/{k:.3}"),
            _ => "non-circular".into(),
        })
        .collect();
    (
        margins_ok && (0.20..=0.50).contains(&single) && six >= 0.80,
        format!(
            "seed {}: fve pizza/clock {fves:?}, circle-1 acc {single:.3}, six-PC acc {six:.3}",
            r.config.seed
        ),
    )
}

fn clock_isolation(r: &RunRecord) -> (bool, String) {
    let six = six_component_accuracy(r.weights.as_ref().unwrap()).unwrap();
    (six >= 0.95, format!("seed {}: six-PC acc {six:.3}", r.config.seed))
}

fn accompanying(r: &RunRecord) -> (bool, String) {
    let model = r.weights.as_ref().unwrap();
    let cs = circles(r, 6);
    let pairs = detect_accompanying(&cs);
    if pairs.is_empty() {
        let ks: Vec<_> = cs.iter().map(|c| c.k).collect();
        return (false, format!("seed {}: no pair, k {ks:?}", r.config.seed));
    }
    let accompanied: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let accompanying: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let a = circle_set_accuracy(model, &cs, &accompanied).unwrap();
    let b = circle_set_accuracy(model, &cs, &accompanying).unwrap();
    (
        a > b,
        format!(
            "seed {}: pairs {pairs:?}, accompanied acc {a:.3}, accompanying acc {b:.3}",
            r.config.seed
        ),
    )
}

fn diagnostics(rate: f64, check: fn(&RunRecord) -> (bool, String)) -> String {
    let lines: Vec<String> = gated_out(rate).into_iter().map(|r| check(r).1).collect();
    if lines.is_empty() {
        String::new()
    } else {
        format!(" [not counted, non-circular α={rate} runs: {}]", lines.join("; "))
    }
}

fn criterion_07_isolation_discrimination() {
    let mut details = Vec::new();
    let pizzas = pizza_runs();
    let mut pass = !pizzas.is_empty();
    for r in &pizzas {
        let (ok, line) = pizza_isolation(r);
        pass &= ok;
        details.push(format!("pizza {line}"));
    }
    if pizzas.is_empty() {
        details.push("no run classified pizza".into());
    }
    let clock = reference_records()
        .iter()
        .find(|r| r.converged && r.label() == Some(Label::Clock));
    match clock {
        Some(r) => {
            let (ok, line) = clock_isolation(r);
            pass &= ok;
            details.push(format!("clock {line}"));
        }
        None => {
            pass = false;
            details.push("no run classified clock".into());
        }
    }
    let extra = diagnostics(0.0, pizza_isolation) + &diagnostics(1.0, clock_isolation);
    finish(7, pass, details.join("; ") + &extra);
}

fn criterion_08_accompanying_pizzas() {
    let mut details = Vec::new();
    let mut pass = false;
    for r in pizza_runs() {
        let (ok, line) = accompanying(r);
        pass |= ok;
        details.push(line);
    }
    if details.is_empty() {
        details.push("no run classified pizza".into());
    }
    finish(8, pass, details.join("; ") + &diagnostics(0.0, accompanying));
}

fn criterion_09_phase_boundary() {
    let recs = reference_records();
    let usable: Vec<RunRecord> = recs.iter().filter(|r| circular(r)).cloned().collect();
    let rates: std::collections::BTreeSet<u64> = usable.iter().map(|r| r.config.attention_rate.to_bits()).collect();
    let b = phase_boundary(&usable).unwrap();
    let sides_ok = b.fit.is_some()
        && usable.iter().all(|r| match r.config.attention_rate {
            a if a == 0.0 => b.predicts_pizza(0.0, r.config.width) == Some(true),
            a if a == 1.0 => b.predicts_pizza(1.0, r.config.width) == Some(false),
            _ => true,
        });
    let pass = usable.len() >= 12 && rates.len() == 5 && b.accuracy.is_some_and(|a| a >= 0.8) && sides_ok;
    finish(
        9,
        pass,
        format!(
            "{} converged circular runs over {} rates, pizza {} clock {}, accuracy {:?}, transition α {:?}",
            usable.len(),
            rates.len(),
            b.pizza,
            b.clock,
            b.accuracy,
            b.transition_rate(128)
        ),
    );
}

fn criterion_10_persistence_and_determinism() {
    let cfg = RunConfig {
        epochs: 200,
        checkpoint_every: 50,
        ..RunConfig::transformer(0.5, 32, 7)
    };
    let first = train(&cfg).unwrap();
    let second = train(&cfg).unwrap();
    let rerun_equal = first.metrics == second.metrics && first.weights == second.weights;

    let dir = tempfile::tempdir().unwrap();
    let linear = train(&RunConfig {
        epochs: 200,
        checkpoint_every: 50,
        ..RunConfig::linear(Family::LinearBeta, 64, 8)
    })
    .unwrap();
    let records = vec![first.clone(), linear];
    export_json(&records, dir.path()).unwrap();
    let back = import_dir(dir.path()).unwrap();
    let bits = |r: &RunRecord| -> Vec<u64> {
        let m = r.metrics.as_ref().unwrap();
        [m.gradient_symmetricity, m.distance_irrelevance, m.circularity, m.val_accuracy]
            .iter()
            .map(|v| v.map_or(u64::MAX, f64::to_bits))
            .collect()
    };
    let round_trip = back == records && back.iter().zip(&records).all(|(a, b)| bits(a) == bits(b));
    let pass = rerun_equal && round_trip;
    report(
        10,
        pass,
        &format!("re-run identical {rerun_equal}, {} records round-trip bit-exact {round_trip}", records.len()),
    );
    assert!(pass);
}

fn main() {
    let criteria: [fn(); 10] = [criterion_01_gradient_engine, criterion_02_analytic_metric_suite, criterion_03_identity_suite, criterion_04_trivial_metric_exactness, criterion_05_pizza_phase, criterion_06_clock_phase, criterion_07_isolation_discrimination, criterion_08_accompanying_pizzas, criterion_09_phase_boundary, criterion_10_persistence_and_determinism];
    let failed = criteria
        .iter()
        .filter(|c| std::panic::catch_unwind(**c).is_err())
        .count();
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
