//! Least-squares recovery and uncertainty properties.

use nlbandit::{estimate_curvature, fit_curvature_matched, fit_nls, ModelKind, ParamVector};
use proptest::prelude::*;

const ARMS: [f64; 6] = [0.0, 50.0, 100.0, 150.0, 200.0, 250.0];

fn noiseless(kind: ModelKind) -> Vec<(f64, f64)> {
    let t = kind.reference_truth();
    ARMS.iter().map(|&x| (x, kind.value(&t, x))).collect()
}

fn assert_recovers(kind: ModelKind, theta: &ParamVector) {
    for (i, (a, b)) in theta.iter().zip(kind.reference_truth().iter()).enumerate() {
        assert!((a - b).abs() <= 1e-6, "{kind} {}: {a} vs {b}", kind.param_names()[i]);
    }
}

#[test]
fn plain_fit_recovers_every_canonical_family() {
    for kind in ModelKind::CANONICAL {
        let fit = fit_nls(kind, &noiseless(kind), &kind.reference_init()).unwrap();
        assert!(fit.is_usable(), "{kind}: {:?}", fit.status);
        assert_recovers(kind, &fit.theta_hat);
    }
}

#[test]
fn curvature_matched_fit_recovers_with_exact_targets() {
    for kind in ModelKind::CANONICAL {
        let truth = kind.reference_truth();
        let targets: Vec<_> = ARMS
            .iter()
            .map(|&x| nlbandit::CurvatureTargets {
                grad_target: kind.slope(&truth, x),
                hess_target: kind.curvature(&truth, x),
                at_arm: x,
            })
            .collect();
        let fit = fit_curvature_matched(kind, &noiseless(kind), &targets, 2.0, 640.0, &kind.reference_init()).unwrap();
        assert!(fit.is_usable(), "{kind}: {:?}", fit.status);
        assert_recovers(kind, &fit.theta_hat);
    }
}

#[test]
fn dominant_curvature_penalty_pulls_toward_its_target() {
    // Observations say c = -0.003; a huge penalty insists on c = -0.001.
    let kind = ModelKind::QuadraticPlateau;
    let targets: Vec<_> = [50.0, 100.0]
        .iter()
        .map(|&x| nlbandit::CurvatureTargets { grad_target: kind.slope(&kind.reference_truth(), x), hess_target: -0.002, at_arm: x })
        .collect();
    let fit = fit_curvature_matched(kind, &noiseless(kind), &targets, 0.0, 1e12, &kind.reference_init()).unwrap();
    assert!((kind.curvature(&fit.theta_hat, 50.0) + 0.002).abs() < 1e-6);
}

#[test]
fn curvature_from_a_noiseless_probe_is_exact_on_a_quadratic() {
    let kind = ModelKind::QuadraticPlateau;
    let t = kind.reference_truth();
    let est = estimate_curvature(|z, _| Ok(kind.value(&t, z)), 100.0, 5.0, 3).unwrap();
    assert!((est.grad_target - 0.6).abs() < 1e-9);
    assert!((est.hess_target + 0.006).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn stderr_ignores_history_order(seed in any::<u64>(), x in 0.0..250.0f64) {
        let kind = ModelKind::QuadraticPlateau;
        let t = kind.reference_truth();
        let mut data: Vec<(f64, f64)> = ARMS
            .iter()
            .enumerate()
            .map(|(i, &a)| (a, kind.value(&t, a) + ((seed >> (i * 8)) % 7) as f64 * 0.1 - 0.3))
            .collect();
        let a = fit_nls(kind, &data, &kind.reference_init()).unwrap();
        data.reverse();
        data.rotate_left((seed % 6) as usize);
        let b = fit_nls(kind, &data, &kind.reference_init()).unwrap();
        let (sa, sb) = (a.prediction_stderr(x), b.prediction_stderr(x));
        prop_assert!((sa - sb).abs() <= 1e-6 * sa.max(1e-3), "{sa} vs {sb}");
    }
}
