//! Closed-form profit optima against brute-force search.

use nlbandit::{ArmGrid, EconomicParams, ModelKind, ResponseModel};
use proptest::prelude::*;

/// Argmax of profit over `[lo, hi]` in steps of `step`, ties to the lower dose.
fn brute_force(m: &ResponseModel, econ: &EconomicParams, lo: f64, hi: f64, step: f64) -> f64 {
    let n = ((hi - lo) / step).round() as usize;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..=n {
        let x = lo + i as f64 * step;
        let p = m.profit(econ, x);
        if p > best.1 {
            best = (x, p);
        }
    }
    best.0
}

#[test]
fn reference_models_match_dense_search() {
    for kind in ModelKind::ALL {
        let m = ResponseModel::new(kind, kind.reference_truth()).unwrap();
        for p_x in [0.3, 0.5, 0.7] {
            let econ = EconomicParams::new(5.0, p_x).unwrap();
            let cf = m.closed_form_optimum(&econ, 0.0, 250.0).unwrap();
            let bf = brute_force(&m, &econ, 0.0, 250.0, 0.01);
            assert!((cf - bf).abs() <= 0.01, "{kind} p_x={p_x}: {cf} vs {bf}");
            assert!(m.profit(&econ, cf) >= m.profit(&econ, bf) - 1e-6, "{kind} p_x={p_x}");
        }
    }
}

#[test]
fn grid_oracle_by_price() {
    let m = ResponseModel::new(ModelKind::QuadraticPlateau, vec![80.0, 1.2, -0.003, 180.0]).unwrap();
    let grid = ArmGrid::uniform(250.0, 50.0).unwrap();
    for (p_x, arm) in [(0.3, 200.0), (0.5, 200.0), (0.7, 150.0)] {
        let econ = EconomicParams::new(5.0, p_x).unwrap();
        assert_eq!(grid.arms()[m.best_grid_arm(&econ, &grid)], arm);
    }
}

fn model_strategy() -> impl Strategy<Value = ResponseModel> {
    (0usize..5, 0.6..1.4f64, 0.6..1.4f64, 0.6..1.4f64).prop_map(|(k, s0, s1, s2)| {
        let kind = ModelKind::ALL[k];
        let mut t = kind.reference_truth().into_vec();
        t[0] *= s0;
        t[1] *= s1;
        t[2] *= s2;
        ResponseModel::new(kind, t).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn closed_form_is_never_beaten_by_a_coarse_search(
        m in model_strategy(),
        p_x in 0.0..2.0f64,
        hi in 50.0..400.0f64,
    ) {
        let econ = EconomicParams::new(5.0, p_x).unwrap();
        let cf = m.closed_form_optimum(&econ, 0.0, hi).unwrap();
        prop_assert!((0.0..=hi).contains(&cf));
        let bf = brute_force(&m, &econ, 0.0, hi, hi / 2000.0);
        let tol = 1e-9 * m.profit(&econ, bf).abs().max(1.0);
        prop_assert!(m.profit(&econ, cf) >= m.profit(&econ, bf) - tol,
            "{:?} p_x={p_x} hi={hi}: cf {cf} bf {bf}", m.kind());
    }

    #[test]
    fn grid_oracle_dominates_every_arm(m in model_strategy(), p_x in 0.0..2.0f64) {
        let econ = EconomicParams::new(5.0, p_x).unwrap();
        let grid = ArmGrid::uniform(250.0, 50.0).unwrap();
        let best = m.best_grid_arm(&econ, &grid);
        let pb = m.profit(&econ, grid.arms()[best]);
        for (i, &x) in grid.arms().iter().enumerate() {
            let p = m.profit(&econ, x);
            prop_assert!(p <= pb);
            if i < best {
                prop_assert!(p < pb, "ties must go to the lower arm");
            }
        }
    }
}
