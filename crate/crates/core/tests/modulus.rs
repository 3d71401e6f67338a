use hitfield::field::{sample_path, FieldSpec, GridSpec, StPoint};
use hitfield::hitting::Region;
use hitfield::modulus::{coarsen, garsia_bound, garsia_functional, sup_increment};
use proptest::prelude::*;

fn path(seed: u64, nt: usize, nx: usize) -> hitfield::field::SamplePath {
    let spec = FieldSpec::identity(1, 1.0, 0.5).unwrap();
    let times = (0..nt).map(|i| 0.5 + 0.0625 * i as f64 / (nt - 1) as f64).collect();
    let sites = (0..nx).map(|j| 0.25 + 0.25 * j as f64 / (nx - 1) as f64).collect();
    sample_path(&spec, &GridSpec::custom(times, sites).unwrap(), seed, 256).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sup_increment_grows_with_eps(seed in any::<u64>(), e1 in 0.2f64..0.7, e2 in 0.2f64..0.7) {
        let p = path(seed, 17, 17);
        let c = StPoint::new(0.53125, 0.375);
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(sup_increment(&p, c, lo).unwrap() <= sup_increment(&p, c, hi).unwrap());
    }

    #[test]
    fn garsia_bound_holds_pathwise(seed in any::<u64>(), eps in 0.05f64..0.5) {
        let p = path(seed, 9, 9);
        let region = Region::full((0.0, 1.0), (0.0, 1.0));
        let check = garsia_bound(&p, 10.0, 0.5, &region, eps).unwrap();
        prop_assert!(check.holds(), "{:?}", check);
    }
}

#[test]
fn garsia_functional_is_stable_under_refinement() {
    // p = 8 sits too close to the integrability threshold for one refinement
    // to settle; p = 12 leaves room.
    let region = Region::full((0.0, 1.0), (0.0, 1.0));
    let (p, alpha) = (12.0, 0.1);
    let (mut fine_sum, mut coarse_sum) = (0.0, 0.0);
    for seed in 0..64 {
        let fine = path(seed, 17, 17);
        let coarse = coarsen(&fine, 2, 2).unwrap();
        fine_sum += garsia_functional(&fine, p, alpha, &region).unwrap();
        coarse_sum += garsia_functional(&coarse, p, alpha, &region).unwrap();
    }
    let ratio = fine_sum / coarse_sum;
    assert!((ratio - 1.0).abs() <= 0.1, "ratio {ratio}");
}
