use hitfield::drift::{girsanov_weight, girsanov_weight_directed, simulate_drift, DriftKind, DriftSpec, GirsanovDirection};
use hitfield::field::{sample_path, FieldSpec, GridSpec};
use hitfield::hitting::{hit_probability, FloorPolicy, Region, Target};
use hitfield::rng::replica_seed;
use proptest::prelude::*;

fn setup() -> (FieldSpec, GridSpec) {
    (FieldSpec::identity(2, 1.0, 0.1).unwrap(), GridSpec::uniform(0.1, 1.0, 19, 17).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zero_drift_is_the_sampler(seed in any::<u64>()) {
        let (spec, grid) = setup();
        let (path, noise) = simulate_drift(&spec, &DriftSpec::zero(2), &grid, seed, 24).unwrap();
        prop_assert_eq!(&path, &sample_path(&spec, &grid, seed, 24).unwrap());
        prop_assert_eq!(girsanov_weight(&path, &noise, &DriftSpec::zero(2), &spec).unwrap(), 1.0);
    }

    #[test]
    fn weights_are_positive(seed in any::<u64>(), a in 0.1f64..3.0) {
        let (spec, grid) = setup();
        let drift = DriftSpec::new(2, DriftKind::TanhScale(a), 1.0, a).unwrap();
        let (path, noise) = simulate_drift(&spec, &drift, &grid, seed, 24).unwrap();
        for dir in [GirsanovDirection::ToDriftFree, GirsanovDirection::ToDrift] {
            let w = girsanov_weight_directed(&path, &noise, &drift, &spec, dir).unwrap();
            prop_assert!(w > 0.0 && w.is_finite());
        }
    }
}

#[test]
fn hitting_is_preserved_in_both_directions() {
    let (spec, grid) = setup();
    let drift = DriftSpec::new(2, DriftKind::Constant(vec![0.8, -0.4]), 0.8, 1e-9).unwrap();
    let free: Vec<_> = (0..400).map(|r| sample_path(&spec, &grid, replica_seed(3, r), 24).unwrap()).collect();
    let pushed: Vec<_> =
        (0..400).map(|r| simulate_drift(&spec, &drift, &grid, replica_seed(4, r), 24).unwrap().0).collect();
    let region = Region::full((0.0, 1.0), (0.0, 1.0));
    let floor = FloorPolicy::default();
    for center in [[0.0, 0.0], [0.6, -0.3], [6.0, 6.0]] {
        let target = Target::ball(center.to_vec(), 0.8);
        let a = hit_probability(&free, &target, &region, &spec, &floor).unwrap();
        let b = hit_probability(&pushed, &target, &region, &spec, &floor).unwrap();
        assert_eq!(a.n_hits == 0, b.n_hits == 0, "centre {center:?}: {} vs {}", a.n_hits, b.n_hits);
    }
}
