use hitfield::potential::capacity::{capacity, CapacityOptions};
use hitfield::potential::hausdorff::greedy_cover;
use hitfield::potential::kernel::{k_beta, parabolic, KernelOrder, MetricKind};
use hitfield::potential::measure::{energy, Diagonal, DiscreteMeasure, PointSet};
use hitfield::potential::smoothing::{smoothing_check, SmoothingBase, SmoothingOptions};
use hitfield::potential::{box_integral_sweep, psi_ratio_sweep, BoxIntegralDomain, BoxIntegralVariant};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_decreases_in_r(beta in 0.0f64..3.0, a in 1e-6f64..1.0, b in 1e-6f64..1.0) {
        let order = KernelOrder::new(beta, 10.0).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(k_beta(order, lo).unwrap() >= k_beta(order, hi).unwrap());
    }

    #[test]
    fn kernel_is_one_below_zero(beta in -5.0f64..-1e-9, r in 1e-9f64..5.0) {
        prop_assert_eq!(k_beta(KernelOrder::new(beta, 10.0).unwrap(), r).unwrap(), 1.0);
    }

    #[test]
    fn parabolic_triangle_inequality(p in prop::array::uniform6(0.0f64..1.0)) {
        let ab = parabolic(p[0], p[1], p[2], p[3]);
        let bc = parabolic(p[2], p[3], p[4], p[5]);
        let ac = parabolic(p[0], p[1], p[4], p[5]);
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn energy_ignores_atom_order(
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.05f64..1.0), 2..12),
        beta in 0.0f64..1.5,
        shift in 0usize..11,
    ) {
        let build = |rows: &[(f64, f64, f64)]| {
            let coords = rows.iter().flat_map(|r| [r.0, r.1]).collect();
            DiscreteMeasure::from_masses(PointSet::new(2, coords).unwrap(), rows.iter().map(|r| r.2).collect()).unwrap()
        };
        let mut rotated = pts.clone();
        rotated.rotate_left(shift % pts.len());
        rotated.reverse();
        let order = KernelOrder::for_diameter(beta, 2.0);
        let diag = Diagonal::Cell(vec![0.01, 0.01]);
        let a = energy(&build(&pts), order, MetricKind::Euclidean, &diag).unwrap();
        let b = energy(&build(&rotated), order, MetricKind::Euclidean, &diag).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn capacity_grows_with_the_set(mask in prop::collection::vec(any::<bool>(), 24), beta in 0.1f64..0.9) {
        let n = mask.len();
        let all = PointSet::interval_cells(0.0, 1.0, n);
        let keep: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        prop_assume!(!keep.is_empty());
        let part = all.select(&keep);
        let order = KernelOrder::for_diameter(beta, 1.0);
        let opts = CapacityOptions { gap_tol: 1e-10, ..CapacityOptions::cells(vec![1.0 / n as f64]) };
        let small = capacity(&part, order, MetricKind::Euclidean, &opts).unwrap().capacity;
        let big = capacity(&all, order, MetricKind::Euclidean, &opts).unwrap().capacity;
        prop_assert!(small <= big * (1.0 + 1e-6), "{} > {}", small, big);
    }

    #[test]
    fn capacity_falls_with_beta(b1 in 0.05f64..0.9, b2 in 0.05f64..0.9) {
        let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
        let set = PointSet::interval_cells(0.0, 1.0, 32);
        let opts = CapacityOptions { gap_tol: 1e-10, ..CapacityOptions::cells(vec![1.0 / 32.0]) };
        // Diameter 1 keeps every K_beta between 1 and its log counterpart.
        let cap = |b: f64| capacity(&set, KernelOrder::for_diameter(b, 1.0), MetricKind::Euclidean, &opts).unwrap().capacity;
        prop_assert!(cap(lo) >= cap(hi) * (1.0 - 1e-6));
    }

    #[test]
    fn cover_content_rises_as_beta_falls(
        coords in prop::collection::vec(0.0f64..1.0, 2..80),
        eps in 0.01f64..0.4,
        b1 in 0.0f64..2.0,
        b2 in 0.0f64..2.0,
    ) {
        let set = PointSet::new(1, coords).unwrap();
        let cover = greedy_cover(&set, MetricKind::Euclidean, eps).unwrap();
        prop_assert!(cover.covers(&set));
        let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
        prop_assert!(cover.content(lo) >= cover.content(hi));
    }

    #[test]
    fn smoothing_never_raises_energy(
        coords in prop::collection::vec(0.0f64..1.0, 4..16),
        width in 0.02f64..0.3,
        alpha in prop::sample::select(vec![0.5, 1.0, 1.5]),
    ) {
        let atoms = coords.len() / 2;
        let mu = DiscreteMeasure::uniform(PointSet::new(2, coords[..2 * atoms].to_vec()).unwrap()).unwrap();
        let opts = SmoothingOptions { per_axis: 5, base: SmoothingBase::Cells };
        let check = smoothing_check(&mu, width, alpha, &opts).unwrap();
        prop_assert!(check.holds(), "{:?}", check);
    }
}

#[test]
fn bound_ratios_stay_bounded() {
    let ks: Vec<i32> = (0..=6).collect();
    for beta in [4.0, 6.0, 8.0] {
        let s = box_integral_sweep(beta, BoxIntegralVariant::SpaceTime, BoxIntegralDomain::default(), &ks).unwrap();
        assert!(s.spread() < 1e3, "beta = {beta}: {}", s.spread());
    }
    for nu in [0.5, 1.0, 2.0, 4.0] {
        let s = psi_ratio_sweep(1.0, nu, 1e-10, 1.0, 20).unwrap();
        assert!(s.spread() < 1e3, "nu = {nu}: {}", s.spread());
    }
}
