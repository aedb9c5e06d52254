// SPDX-License-Identifier: MIT OR Apache-2.0

use proptest::prelude::*;

use pizzaclock::isolation::{estimate_k, inverse_mod};
use pizzaclock::metrics::{distance_irrelevance, CorrectLogitMatrix};
use pizzaclock::numerics::Matrix;
use pizzaclock::oracles::{clock_bilinear, clock_logit, pizza_logit, CircleSpec};
use pizzaclock::sweep::{classify, Label, Thresholds};

const P: usize = 59;

proptest! {
    #[test]
    fn difference_functions_have_zero_irrelevance(f in prop::collection::vec(-10.0f64..10.0, P)) {
        prop_assume!(f.iter().any(|v| (v - f[0]).abs() > 1e-3));
        let l = CorrectLogitMatrix { p: P, values: Matrix::from_fn(P, P, |a, b| f[(a + P - b) % P]) };
        prop_assert!(distance_irrelevance(&l).unwrap().abs() < 1e-12);
    }

    #[test]
    fn irrelevance_is_scale_and_shift_invariant(
        f in prop::collection::vec(-1.0f64..1.0, P * P),
        scale in 0.1f64..100.0,
        shift in -50.0f64..50.0,
    ) {
        let base = CorrectLogitMatrix { p: P, values: Matrix::from_vec(P, P, f).unwrap() };
        let moved = CorrectLogitMatrix { p: P, values: base.values.map(|v| v * scale + shift) };
        let (q0, q1) = (distance_irrelevance(&base).unwrap(), distance_irrelevance(&moved).unwrap());
        prop_assert!((q0 - q1).abs() < 1e-9);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&q0));
    }

    #[test]
    fn clock_matches_bilinear(k in 1usize..P, a in 0usize..P, b in 0usize..P, c in 0usize..P) {
        let spec = CircleSpec::new(P, k).unwrap();
        prop_assert!((clock_logit(&spec, a, b, c) - clock_bilinear(&spec, a, b, c)).abs() < 1e-12);
    }

    #[test]
    fn pizza_is_symmetric_and_bounded_by_clock(k in 1usize..P, a in 0usize..P, b in 0usize..P, c in 0usize..P) {
        let spec = CircleSpec::new(P, k).unwrap();
        let v = pizza_logit(&spec, a, b, c);
        prop_assert!((v - pizza_logit(&spec, b, a, c)).abs() < 1e-12);
        prop_assert!(v.abs() <= clock_logit(&spec, a, b, c).abs() + 1e-12);
    }

    #[test]
    fn frequency_survives_rotation_and_scaling(k in 1usize..P, phase in 0.0f64..6.3, r in 0.1f64..10.0) {
        let w = 2.0 * std::f64::consts::PI * k as f64 / P as f64;
        let pts = Matrix::from_fn(P, 2, |t, c| {
            let th = w * t as f64 + phase;
            r * if c == 0 { th.cos() } else { -th.sin() }
        });
        let est = estimate_k(&pts).unwrap();
        prop_assert!(est.k == k || est.k_mirror == k, "k {k} est {est:?}");
        prop_assert!(est.circular);
    }

    #[test]
    fn inverse_mod_inverts(x in 1usize..P) {
        prop_assert_eq!(x * inverse_mod(x, P).unwrap() % P, 1);
    }

    #[test]
    fn labels_follow_thresholds(circ in 0.9f64..1.0, sg in 0.0f64..1.0, q in 0.0f64..1.0) {
        let report = pizzaclock::metrics::MetricReport {
            gradient_symmetricity: Some(sg),
            distance_irrelevance: Some(q),
            circularity: Some(circ),
            val_accuracy: Some(1.0),
            sample_set: "test".into(),
            degenerate_triples: 0,
        };
        let label = classify(&report, &Thresholds::default()).label;
        let expected = if circ < 0.995 {
            Label::NonCircular
        } else if sg > 0.98 && q < 0.6 {
            Label::Pizza
        } else if sg <= 0.98 && q >= 0.6 {
            Label::Clock
        } else {
            Label::Ambiguous
        };
        prop_assert_eq!(label, expected);
    }
}
