use proptest::prelude::*;
use stabletree_core::loss::{self, grad_hess, leaf_weight, stable_loss};
use stabletree_core::{GrowConfig, RowTargets, StableLossConfig};

fn row() -> impl Strategy<Value = RowTargets> {
    (-50.0..50.0f64, -50.0..50.0f64, 0.0..5.0f64, 0.0..5.0f64, 0.0..20.0f64).prop_map(
        |(y, w0, alpha, beta, phi)| RowTargets {
            y,
            w0,
            gamma: alpha + beta * phi,
            phi,
        },
    )
}

proptest! {
    #[test]
    fn grad_hess_match_finite_differences(r in row()) {
        let gh = grad_hess(&r, &StableLossConfig::default()).unwrap();
        let e = 1e-4;
        let g = (stable_loss(&r, e) - stable_loss(&r, -e)) / (2.0 * e);
        let h = (stable_loss(&r, e) - 2.0 * stable_loss(&r, 0.0) + stable_loss(&r, -e)) / (e * e);
        prop_assert!((gh.g - g).abs() <= 1e-6 * (1.0 + g.abs()));
        prop_assert!((gh.h - h).abs() <= 1e-3 * (1.0 + h.abs()));
    }

    #[test]
    fn leaf_weight_is_a_local_minimum(rows in prop::collection::vec(row(), 1..30)) {
        let w = leaf_weight(&rows, &StableLossConfig::default()).unwrap();
        let total = |w: f64| rows.iter().map(|r| stable_loss(r, w)).sum::<f64>();
        let num: f64 = rows.iter().map(|r| r.y + r.gamma * r.w0).sum();
        let den: f64 = rows.iter().map(|r| 1.0 + r.gamma).sum();
        prop_assert!((w - num / den).abs() <= 1e-12 * (1.0 + w.abs()));
        prop_assert!(total(w) <= total(w + 1e-4));
        prop_assert!(total(w) <= total(w - 1e-4));
    }

    #[test]
    fn zero_gamma_weight_is_the_mean(y in prop::collection::vec(-1e3..1e3f64, 1..40)) {
        let rows: Vec<RowTargets> = y.iter().map(|&y| RowTargets::plain(y)).collect();
        let w = leaf_weight(&rows, &StableLossConfig::default()).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        prop_assert!((w - mean).abs() <= 1e-9 * (1.0 + mean.abs()));
    }
}

#[test]
fn unsupported_penalty_is_rejected() {
    let cfg = StableLossConfig {
        instability: stabletree_core::InstabilityKind::AbsoluteError,
        ..StableLossConfig::default()
    };
    assert!(grad_hess(&RowTargets::plain(1.0), &cfg).is_err());
}

#[test]
fn baseline_update_equals_fit() {
    use stabletree_core::{grower, Dataset, FeatureMatrix};
    let rows: Vec<[f64; 2]> = (0..60).map(|i| [(i % 7) as f64, (i * 13 % 11) as f64]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[0] * 2.0 - r[1] + ((r[0] * r[1]) % 3.0)).collect();
    let d = Dataset::unnamed(FeatureMatrix::from_rows(&rows).unwrap(), y).unwrap();
    let cfg = GrowConfig::default();
    let f0 = grower::fit(&d.select(&(0..30).collect::<Vec<_>>()), &cfg).unwrap();
    let f1 = grower::update(&f0, &d, &cfg, &StableLossConfig::default()).unwrap();
    let fit = grower::fit(&d, &cfg).unwrap();
    assert_eq!(f1.predict_matrix(&d.x).unwrap(), fit.predict_matrix(&d.x).unwrap());
    assert_eq!(loss::instability(&[1.0, 2.0], &[1.0, 4.0], Default::default()).unwrap(), 2.0);
}
