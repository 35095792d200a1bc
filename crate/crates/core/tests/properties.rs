use ecdelay::analytics::{exponential_lst, pk_workload_transform};
use ecdelay::engine::step;
use ecdelay::order::{apply_balancing_transfer, majorizes, submajorizes};
use ecdelay::placement::sample_placement;
use ecdelay::{PolicyKind, RoutingVector, WorkloadVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..100.0, len)
}

fn vectors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..12).prop_flat_map(|m| (vector(m), vector(m)))
}

/// One routing decision: servers, workloads, request size, redundancy, chunk, seed.
fn instance() -> impl Strategy<Value = (Vec<f64>, u64, u64, f64, u64)> {
    (1usize..24).prop_flat_map(|m| (vector(m), 1u64..60, 0u64..4, 0.5f64..20.0, any::<u64>()))
}

proptest! {
    #[test]
    fn majorization_is_reflexive_and_ignores_order(x in vector(8), seed in any::<u64>()) {
        prop_assert!(majorizes(&x, &x).unwrap());
        let mut shuffled = x.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(majorizes(&x, &shuffled).unwrap());
        prop_assert!(majorizes(&shuffled, &x).unwrap());
    }

    #[test]
    fn majorization_implies_submajorization((x, y) in vectors()) {
        if majorizes(&x, &y).unwrap() {
            prop_assert!(submajorizes(&x, &y).unwrap());
        }
    }

    #[test]
    fn balancing_transfer_is_majorized(x in vector(6), i in 0usize..6, j in 0usize..6, frac in 0.0f64..=1.0) {
        let (lo, hi) = if x[i] <= x[j] { (i, j) } else { (j, i) };
        let y = apply_balancing_transfer(&x, lo, hi, frac * (x[hi] - x[lo])).unwrap();
        prop_assert!(majorizes(&y, &x).unwrap());
    }

    #[test]
    fn majorization_orders_maxima((x, y) in vectors()) {
        if majorizes(&x, &y).unwrap() {
            let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(max(&x) <= max(&y) + 1e-9);
        }
    }

    #[test]
    fn placement_is_balanced(k in 1u64..200, extra in 0u64..10, m in 1usize..64, seed in any::<u64>()) {
        let a = sample_placement(k, k + extra, m, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a.total(), k + extra);
        prop_assert!(a.is_balanced_for(k + extra));
    }

    #[test]
    fn every_policy_routes_k_blocks_within_placement((w, k, r, chunk, seed) in instance()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sample_placement(k, k + r, w.len(), &mut rng).unwrap();
        let w = WorkloadVector::new(w).unwrap();
        for policy in PolicyKind::ALL {
            let s = policy.route(&a, k, &w, chunk, &mut rng).unwrap();
            prop_assert_eq!(s.total(), k);
            prop_assert!(s.fits(&a));
        }
    }

    #[test]
    fn water_filling_is_most_balanced((w, k, r, chunk, seed) in instance()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sample_placement(k, k + r, w.len(), &mut rng).unwrap();
        let w = WorkloadVector::new(w).unwrap();
        let after = |p: PolicyKind, rng: &mut ChaCha8Rng| w.loaded_with(&p.route(&a, k, &w, chunk, rng).unwrap(), chunk);
        let wf = after(PolicyKind::WaterFilling, &mut rng);
        let bs = after(PolicyKind::BatchSampling, &mut rng);
        let br = after(PolicyKind::BalancedRandom, &mut rng);
        prop_assert!(majorizes(&wf, &bs).unwrap());
        prop_assert!(majorizes(&wf, &br).unwrap());
        prop_assert!(submajorizes(&bs, &br).unwrap());
    }

    #[test]
    fn step_is_monotone(w in vector(5), bump in vector(5), s in prop::collection::vec(0u32..4, 5), tau in 0.0f64..50.0) {
        let higher: Vec<f64> = w.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let s = RoutingVector::new(s).unwrap();
        let lo = step(&WorkloadVector::new(w).unwrap(), &s, 2.0, tau, 1.0).unwrap();
        let hi = step(&WorkloadVector::new(higher).unwrap(), &s, 2.0, tau, 1.0).unwrap();
        prop_assert!(lo.as_slice().iter().zip(hi.as_slice()).all(|(a, b)| a <= b));
        prop_assert!(lo.as_slice().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn workload_transform_is_a_decreasing_lst(load in 0.01f64..0.95, s in 0.0f64..5.0, ds in 0.001f64..5.0) {
        let rate = 1.0;
        let at = |s| pk_workload_transform(load * rate, exponential_lst(rate), 1.0 / rate, s).unwrap();
        let (g0, g1) = (at(s), at(s + ds));
        prop_assert!(g0 > 0.0 && g0 <= 1.0);
        prop_assert!(g1 <= g0);
    }
}
