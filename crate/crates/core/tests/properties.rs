use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qsd_core::benchmarks::{ks_distance, reference_bm_disk, reference_bm_interval};
use qsd_core::diffusion::{
    simulate_until_absorption, BoxDomain, BrownianMotion, Domain, SimOptions,
};
use qsd_core::green_lab::{
    conditional_law, eta_sequence, flow_field, flow_ode, green, reinforced_chain, semigroup,
    spectral, AbsorbingChain,
};
use qsd_core::linalg::tv_distance;
use qsd_core::reinforced::{run_reinforced, DiagnosticsConfig};
use qsd_core::rng::stream;
use rand::Rng;

fn chain(seed: u64, n: usize) -> AbsorbingChain {
    AbsorbingChain::random(n, &mut stream(seed, 0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn green_operator_identities(seed in any::<u64>(), n in 1usize..14) {
        let c = chain(seed, n);
        let s = spectral(&c).unwrap();
        let a = green(&c).unwrap();
        prop_assert!((&a * (-c.q()) - DMatrix::identity(n, n)).amax() <= 1e-10);
        prop_assert!(a.iter().all(|&x| x >= 0.0));
        prop_assert!(s.alpha.iter().all(|&x| x >= 0.0));
        prop_assert!((s.alpha.sum() - 1.0).abs() <= 1e-12);
        prop_assert!((s.alpha.dot(&s.eta) - 1.0).abs() <= 1e-10);
        let mut rng = stream(seed, 1);
        for _ in 0..100 {
            let f = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let lhs = a.tr_mul(&s.alpha).dot(&f);
            let rhs = s.alpha.dot(&f) / s.lambda0;
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(lhs.abs()).max(1e-300) + 1e-14);
        }
    }

    #[test]
    fn semigroup_is_a_sub_markov_semigroup(seed in any::<u64>(), n in 1usize..10, s in 0.0f64..4.0, t in 0.0f64..4.0) {
        let c = chain(seed, n);
        let (ps, pt, pst) = (semigroup(&c, s).unwrap(), semigroup(&c, t).unwrap(), semigroup(&c, s + t).unwrap());
        prop_assert!((&ps * &pt - &pst).amax() <= 1e-10);
        for row in pst.row_iter() {
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
            prop_assert!(row.sum() <= 1.0);
        }
    }

    #[test]
    fn qsd_is_a_rest_point_of_both_dynamics(seed in any::<u64>(), n in 1usize..8, t in 0.0f64..5.0) {
        let c = chain(seed, n);
        let s = spectral(&c).unwrap();
        let a = green(&c).unwrap();
        prop_assert!(flow_field(&a, &s.alpha).amax() <= 1e-12);
        prop_assert!(tv_distance(&conditional_law(&c, &s.alpha, t).unwrap(), &s.alpha) <= 1e-10);
        let trajectory = flow_ode(&c, &s.alpha, 10.0 / s.lambda0, 1e-10).unwrap();
        for state in &trajectory.states {
            prop_assert!(tv_distance(&state.measure, &s.alpha) <= 1e-9, "t = {}", state.time);
        }
    }

    #[test]
    fn absorbed_paths_stay_inside(seed in any::<u64>(), x0 in 1e-6f64..(1.0 - 1e-6), dt in 1e-4f64..1e-2) {
        let d = BoxDomain::unit_interval();
        let opts = SimOptions::default();
        let path = simulate_until_absorption(&BrownianMotion::new(1), &d, &[x0], dt, &mut stream(seed, 0), &opts).unwrap();
        prop_assert!(path.absorption_time > 0.0);
        prop_assert!(path.states().all(|x| x[0] > 0.0 && x[0] < 1.0));
        let steps = (path.len() - 1) as f64 + path.hit_fraction;
        prop_assert!((path.absorption_time - steps * dt).abs() <= 1e-12 * path.absorption_time);
        let again = simulate_until_absorption(&BrownianMotion::new(1), &d, &[x0], dt, &mut stream(seed, 0), &opts).unwrap();
        prop_assert_eq!(path, again);
    }

    #[test]
    fn reinforced_bookkeeping(seed in any::<u64>(), cycles in 1usize..80, thinning in 1usize..6) {
        let d = BoxDomain::unit_interval();
        let diagnostics = DiagnosticsConfig { thinning, ..DiagnosticsConfig::default() };
        let run = |seed| run_reinforced(&BrownianMotion::new(1), &d, &[0.5], 1e-3, cycles, &mut stream(seed, 0), &diagnostics).unwrap();
        let trace = run(seed);
        prop_assert_eq!(trace.theta.len(), cycles);
        prop_assert!(trace.theta.windows(2).all(|w| w[1] > w[0]));
        let total = trace.occupation.total_time();
        prop_assert!((total - trace.theta[cycles - 1]).abs() <= 1e-12 * total);
        let mass = trace.occupation.occupation_average(|x| if d.contains(x) { 1.0 } else { 0.0 }).unwrap();
        prop_assert!((mass - 1.0).abs() <= 1e-12);
        prop_assert!(trace.resample_points.iter().all(|z| d.contains(z)));
        let replay = run(seed);
        prop_assert_eq!(trace.theta, replay.theta);
    }

    #[test]
    fn chain_resampling_yields_probability_vectors(seed in any::<u64>(), n in 1usize..8, cycles in 1usize..300) {
        let c = chain(seed, n);
        let trace = reinforced_chain(&c, 0, cycles, &mut stream(seed, 1)).unwrap();
        for eta in eta_sequence(&trace, n) {
            prop_assert!(eta.iter().all(|&p| p >= 0.0));
            prop_assert!((eta.sum() - 1.0).abs() <= 1e-12);
        }
        prop_assert!((trace.occupation.total_time() - trace.theta[cycles - 1]).abs() <= 1e-12 * trace.theta[cycles - 1]);
    }

    #[test]
    fn ks_is_a_distance_in_unit_range(xs in prop::collection::vec((0.0f64..1.0, 0.0f64..5.0), 1..100)) {
        prop_assume!(xs.iter().any(|x| x.1 > 0.0));
        for reference in [reference_bm_interval(), reference_bm_disk()] {
            let k = ks_distance(xs.iter().copied(), |y| reference.cdf(y)).unwrap();
            prop_assert!((0.0..=1.0).contains(&k));
        }
    }

    #[test]
    fn reference_cdfs_are_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for reference in [reference_bm_interval(), reference_bm_disk()] {
            let (fl, fh) = (reference.cdf(lo), reference.cdf(hi));
            prop_assert!(fl <= fh + 1e-15 && (0.0..=1.0).contains(&fl) && (0.0..=1.0).contains(&fh));
            prop_assert!(reference.density(lo) >= 0.0);
        }
    }
}
