use hitfield::field::{sample_ensemble, FieldSpec, GridSpec};
use hitfield::hitting::{box_count, hit_probability, FloorPolicy, Region, Target};
use hitfield::potential::kernel::MetricKind;
use hitfield::potential::measure::PointSet;
use proptest::prelude::*;

fn ensemble(seed: u64) -> (FieldSpec, Vec<hitfield::field::SamplePath>) {
    let spec = FieldSpec::identity(2, 1.0, 0.25).unwrap();
    let grid = GridSpec::uniform(0.25, 1.0, 9, 9).unwrap();
    let ens = sample_ensemble(&spec, &grid, seed, 200, 32).unwrap();
    (spec, ens)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn larger_targets_are_hit_more(seed in any::<u64>(), e1 in 0.2f64..1.0, e2 in 0.2f64..1.0, cx in -0.5f64..0.5) {
        let (spec, ens) = ensemble(seed);
        let region = Region::full((0.0, 1.0), (0.0, 1.0));
        let floor = FloorPolicy::unchecked();
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let p = |e: f64| hit_probability(&ens, &Target::ball(vec![cx, 0.0], e), &region, &spec, &floor).unwrap().p_hat;
        prop_assert!(p(lo) <= p(hi));
    }

    #[test]
    fn larger_regions_are_hit_more(seed in any::<u64>(), eps in 0.2f64..0.8) {
        let (spec, ens) = ensemble(seed);
        let floor = FloorPolicy::unchecked();
        let target = Target::ball(vec![0.0, 0.0], eps);
        let p = |r: &Region| hit_probability(&ens, &target, r, &spec, &floor).unwrap().p_hat;
        let full = p(&Region::full((0.0, 1.0), (0.0, 1.0)));
        let section = p(&Region::time_section(1.0, (0.0, 1.0)));
        let node = p(&Region::node(1.0, 0.5));
        prop_assert!(full >= section && section >= node);
    }

    #[test]
    fn box_counts_grow_as_boxes_shrink(coords in prop::collection::vec(0.0f64..1.0, 2..200), n in 0u32..12) {
        let set = PointSet::new(2, coords[..coords.len() / 2 * 2].to_vec()).unwrap();
        for kind in [MetricKind::Euclidean, MetricKind::Parabolic] {
            prop_assert!(box_count(&set, kind, n).unwrap() <= box_count(&set, kind, n + 1).unwrap());
        }
    }
}

#[test]
fn level_z_and_minus_z_are_hit_alike() {
    let (spec, ens) = ensemble(17);
    let region = Region::full((0.0, 1.0), (0.0, 1.0));
    let floor = FloorPolicy::unchecked();
    let z = vec![0.7, -0.2];
    let minus: Vec<f64> = z.iter().map(|v| -v).collect();
    let a = hit_probability(&ens, &Target::ball(z, 0.3), &region, &spec, &floor).unwrap();
    let b = hit_probability(&ens, &Target::ball(minus, 0.3), &region, &spec, &floor).unwrap();
    let n = a.n_trials as f64;
    let se = (a.p_hat * (1.0 - a.p_hat) / n + b.p_hat * (1.0 - b.p_hat) / n).sqrt();
    assert!((a.p_hat - b.p_hat).abs() <= 3.0 * se.max(1.0 / n), "{} vs {}", a.p_hat, b.p_hat);
}
