use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use widomlab::asymptotics::{gap_set_of, widom_factor, BOUND_TOL};
use widomlab::comb::comb_parameters;
use widomlab::potential::{EquilibriumData, DEFAULT_TOL};
use widomlab::realset::{random_set, Interval, RealFiniteGapSet};
use widomlab::remez::{bands, chebyshev_with, RemezOptions, TOUCH_TOL};
use widomlab::widom::{Blaschke, GapSet};

fn set_strategy() -> impl Strategy<Value = RealFiniteGapSet> {
    (any::<u64>(), 1usize..=3).prop_map(|(seed, b)| {
        random_set(&mut ChaCha8Rng::seed_from_u64(seed), b, 0.06).expect("random set")
    })
}

fn eq_of(set: &RealFiniteGapSet) -> EquilibriumData {
    EquilibriumData::solve(set, DEFAULT_TOL).unwrap()
}

/// A point in gap `k` or, for `k = gap_count`, outside the hull.
fn point(set: &RealFiniteGapSet, k: usize, f: f64) -> f64 {
    match set.gaps().get(k) {
        Some(g) => g.lo() + f * g.len(),
        None => set.hull().hi() + (0.1 + f) * set.hull().len(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn set_structure(pairs in prop::collection::vec((-50.0f64..50.0, 0.01f64..5.0), 1..6)) {
        let ivs: Vec<Interval> = pairs.iter().map(|&(a, l)| Interval::new(a, a + l).unwrap()).collect();
        let disjoint = {
            let mut s = ivs.clone();
            s.sort_by(|a, b| a.lo().total_cmp(&b.lo()));
            s.windows(2).all(|w| w[0].hi() < w[1].lo())
        };
        match RealFiniteGapSet::new(ivs) {
            Ok(set) => {
                prop_assert!(disjoint);
                prop_assert_eq!(set.gaps().len(), set.bands().len() - 1);
                prop_assert!(set.bands().windows(2).all(|w| w[0].hi() < w[1].lo()));
                for (k, g) in set.gaps().iter().enumerate() {
                    prop_assert_eq!(g.lo(), set.bands()[k].hi());
                    prop_assert_eq!(g.hi(), set.bands()[k + 1].lo());
                    prop_assert!(!set.contains(g.mid()));
                }
                let total: f64 = set.bands().iter().map(|b| b.len()).sum::<f64>()
                    + set.gaps().iter().map(|g| g.len()).sum::<f64>();
                prop_assert!((total - set.hull().len()).abs() <= 1e-12 * set.hull().len().max(1.0));
            }
            Err(_) => prop_assert!(!disjoint),
        }
    }

    #[test]
    fn equilibrium_is_normalized_and_affine_invariant(set in set_strategy(), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let eq = eq_of(&set);
        let rho = eq.band_measures();
        prop_assert!(rho.iter().all(|&r| r > 0.0));
        prop_assert!((rho.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(eq.pw_sum() >= 0.0);
        let moved = eq_of(&set.affine(scale, shift).unwrap());
        prop_assert!((moved.capacity() - scale * eq.capacity()).abs() < 1e-10 * scale);
        let (a, b) = (comb_parameters(&eq), comb_parameters(&moved));
        for k in 0..a.omegas.len() {
            prop_assert!((a.omegas[k] - b.omegas[k]).abs() < 1e-10);
            prop_assert!((a.heights[k] - b.heights[k]).abs() < 1e-10);
        }
        prop_assert!(a.omegas.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn green_is_positive_and_symmetric(set in set_strategy(), k1 in 0usize..3, k2 in 0usize..3, f1 in 0.05f64..0.95, f2 in 0.05f64..0.95) {
        let eq = eq_of(&set);
        let (z, w) = (point(&set, k1.min(set.gap_count()), f1), point(&set, k2.min(set.gap_count()), f2));
        prop_assume!((z - w).abs() > 1e-3);
        prop_assert!(eq.green_real(z) > 0.0);
        for b in set.bands() {
            prop_assert!(eq.green_real(b.mid()).abs() < 1e-12);
        }
        let gzw = eq.pole(w).unwrap().green(Complex64::new(z, 0.0)).unwrap();
        let gwz = eq.pole(z).unwrap().green(Complex64::new(w, 0.0)).unwrap();
        prop_assert!(gzw > 0.0);
        prop_assert!((gzw - gwz).abs() < 1e-6, "{} vs {}", gzw, gwz);
    }

    #[test]
    fn blaschke_norm_bounds(set in set_strategy(), fs in prop::collection::vec(0.0f64..1.0, 2), pick in prop::collection::vec(any::<bool>(), 2)) {
        let eq = eq_of(&set);
        let pts: Vec<(usize, f64)> = set
            .gaps()
            .iter()
            .enumerate()
            .filter(|(k, _)| pick[*k])
            .map(|(k, g)| (k, g.lo() + (0.01 + 0.98 * fs[k]) * g.len()))
            .collect();
        let s = GapSet::new(&set, pts).unwrap();
        let b = Blaschke::new(&eq, &s).unwrap();
        let f = b.f_norm();
        prop_assert!(f >= 1.0 - 1e-12);
        prop_assert!(f <= eq.pw_sum().exp() * (1.0 + 1e-12));
        for band in set.bands() {
            for t in [0.0, 0.3, 0.7, 1.0] {
                let m = b.minimizer_modulus(band.lo() + t * band.len()).unwrap();
                prop_assert!(m <= f * (1.0 + 1e-9), "{} > {}", m, f);
            }
        }
    }

    #[test]
    fn chebyshev_invariants(set in set_strategy(), n in 1usize..16) {
        let eq = eq_of(&set);
        let sol = chebyshev_with(&eq, n, &RemezOptions::default()).unwrap();
        let w = widom_factor(&eq, &sol).unwrap();
        prop_assert!(w >= 2.0 - BOUND_TOL && w <= 2.0 * eq.pw_sum().exp() + BOUND_TOL);
        let dec = bands(&sol, eq.set(), TOUCH_TOL).unwrap();
        prop_assert!(dec.contains_set(eq.set(), 1e-9));
        for m in &dec.masses {
            prop_assert!((m - 1.0 / n as f64).abs() < 1e-8);
        }
        let gs = gap_set_of(&eq, &sol).unwrap();
        prop_assert!(gs.len() <= set.gap_count());
    }
}
