use hitfield::field::covariance::{field_covariance, pair_stats, CovarianceSource, ExactKernel};
use hitfield::field::spectral::{mode_covariance, mode_variance, orthonormality_error, SpectralModel};
use hitfield::field::{increment_second_moment, sample_ensemble, FieldSpec, GridSpec, StPoint};
use hitfield::numeric::stats::covariance_se;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = StPoint> {
    (0.05f64..1.0, 0.0f64..1.0).prop_map(|(t, x)| StPoint::new(t, x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mode_covariance_is_symmetric(k in 0usize..600, s in 1e-4f64..2.0, t in 1e-4f64..2.0) {
        prop_assert_eq!(mode_covariance(k, s, t).unwrap(), mode_covariance(k, t, s).unwrap());
        prop_assert_eq!(mode_covariance(k, t, t).unwrap(), mode_variance(k, t).unwrap());
    }

    #[test]
    fn pair_covariance_is_psd(p in point(), q in point()) {
        let s = pair_stats(p, q, &SpectralModel::new(256).unwrap()).unwrap();
        let tr = s.var_p + s.var_q;
        let det = s.var_p * s.var_q - s.cov * s.cov;
        let low = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
        prop_assert!(low >= -1e-12);
    }

    #[test]
    fn determinant_identity_holds(p in point(), q in point()) {
        prop_assume!(p != q);
        let s = pair_stats(p, q, &SpectralModel::new(200).unwrap()).unwrap();
        prop_assert!(s.identity_residual <= 1e-10);
    }

    #[test]
    fn increment_envelope(p in point(), q in point()) {
        prop_assume!(p.delta(q) > 1e-6);
        let r = increment_second_moment(p, q, &ExactKernel).ratio_to_delta.unwrap();
        prop_assert!(r > 0.1 && r < 10.0, "{}", r);
    }

    #[test]
    fn truncation_is_within_the_tail_bound(p in point(), q in point()) {
        let spec = FieldSpec::identity(1, 1.0, 0.05).unwrap();
        let (a, b) = (SpectralModel::new(256).unwrap(), SpectralModel::new(512).unwrap());
        let ca = field_covariance(0, 0, p, q, &spec, &a).unwrap();
        let cb = field_covariance(0, 0, p, q, &spec, &b).unwrap();
        prop_assert!((ca.value - cb.value).abs() <= ca.tail_bound);
        if (p.t - q.t).abs() >= 1e-3 {
            prop_assert!((ca.value - cb.value).abs() < 1e-8);
        }
    }

    #[test]
    fn spectral_and_image_sums_agree(p in point(), q in point()) {
        prop_assume!((p.t - q.t).abs() >= 1e-3);
        let spectral = SpectralModel::new(512).unwrap();
        prop_assert!((spectral.cov(p, q) - ExactKernel.cov(p, q)).abs() < 1e-8);
    }
}

#[test]
fn cosine_basis_is_orthonormal() {
    assert!(orthonormality_error(64).unwrap() < 1e-8);
}

#[test]
fn ensemble_covariance_within_three_standard_errors() {
    let spec = FieldSpec::identity(1, 1.0, 0.25).unwrap();
    let grid = GridSpec::uniform(0.25, 1.0, 4, 5).unwrap();
    let model = SpectralModel::new(128).unwrap();
    let ens = sample_ensemble(&spec, &grid, 99, 4000, 128).unwrap();
    let col = |ti: usize, xi: usize| ens.iter().map(|p| p.value(0, ti, xi)).collect::<Vec<_>>();
    for (a, b) in [((0, 0), (3, 4)), ((1, 2), (2, 2)), ((3, 2), (3, 2)), ((2, 1), (3, 3))] {
        let (c, se) = covariance_se(&col(a.0, a.1), &col(b.0, b.1));
        let exact = model.cov(grid.point(a.0, a.1), grid.point(b.0, b.1));
        assert!((c - exact).abs() <= 3.0 * se, "{a:?} {b:?}: {c} vs {exact} (se {se})");
    }
}
