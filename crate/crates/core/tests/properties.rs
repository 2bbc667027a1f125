use std::collections::BTreeSet;

use ffdistinct::energy;
use ffdistinct::experiments::sample_subset;
use ffdistinct::geometry::{builtin_variety, DiagonalPoly, Family, QuadraticForm};
use ffdistinct::spectra::{self, CayleyGraph, Multiset, SpectrumMethod, SPECTRUM_LIMIT};
use ffdistinct::{AffineSpace, FieldContext};
use num_bigint::BigUint;
use proptest::prelude::*;

fn field_and_dim() -> impl Strategy<Value = (u64, u32, usize)> {
    prop_oneof![
        Just((3, 1, 2)),
        Just((5, 1, 2)),
        Just((3, 1, 3)),
        Just((3, 2, 2)),
        Just((7, 1, 2))
    ]
}

fn subset_of(size: usize, max: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::btree_set(0..size, 0..=max).prop_map(|s| s.into_iter().collect())
}

/// Representation counts by a plain loop over E^j.
fn brute_fold(space: &AffineSpace, set: &[usize], j: usize) -> Vec<u128> {
    let mut out = vec![0u128; space.size()];
    let mut sums = vec![0usize];
    for _ in 0..j {
        sums = sums
            .iter()
            .flat_map(|&a| set.iter().map(move |&b| (a, b)))
            .map(|(a, b)| space.add(a, b))
            .collect();
    }
    for s in sums {
        out[s] += 1;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folds_match_brute_force((p, n, d) in field_and_dim(), seed in any::<u64>(), j in 1usize..=3) {
        let f = FieldContext::new(p, n).unwrap();
        let s = AffineSpace::new(&f, d, SPECTRUM_LIMIT).unwrap();
        let set = sample_subset(&(0..s.size()).collect::<Vec<_>>(), 5.min(s.size()), seed, 0).unwrap();
        let r = energy::fold_counts(&s, &set, j).unwrap();
        prop_assert_eq!(r.values, brute_fold(&s, &set, j));
    }

    #[test]
    fn mass_is_conserved((p, n, d) in field_and_dim(), raw in subset_of(81, 8), k in 1usize..=4) {
        let f = FieldContext::new(p, n).unwrap();
        let s = AffineSpace::new(&f, d, SPECTRUM_LIMIT).unwrap();
        let set: Vec<usize> = raw.into_iter().filter(|&x| x < s.size()).collect();
        let mass = BigUint::from(set.len()).pow(k as u32);
        let r = energy::fold_counts(&s, &set, k).unwrap();
        prop_assert_eq!(r.total(), mass.clone());
        let form = QuadraticForm::sum_of_squares(&f, d);
        let nu = energy::nu_k(&s, &set, &form, k).unwrap();
        prop_assert_eq!(nu.total(), mass.clone());
        let poly = DiagonalPoly::new(&f, vec![1; d], 2).unwrap();
        let shifts = [0u32, 1];
        let nup = energy::nu_p_k(&s, &set, &shifts, &poly, k).unwrap();
        prop_assert_eq!(nup.total(), mass * BigUint::from(2u32));
    }

    #[test]
    fn energy_two_is_size((p, n, d) in field_and_dim(), raw in subset_of(81, 12)) {
        let f = FieldContext::new(p, n).unwrap();
        let s = AffineSpace::new(&f, d, SPECTRUM_LIMIT).unwrap();
        let set: Vec<usize> = raw.into_iter().filter(|&x| x < s.size()).collect();
        prop_assert_eq!(energy::lambda_k(&s, &set, 2).unwrap(), BigUint::from(set.len()));
    }

    #[test]
    fn delta_grows_on_nested_chains(seed in any::<u64>(), trial in 0u64..100, k in 1usize..=3) {
        let f = FieldContext::new(5, 1).unwrap();
        let s = AffineSpace::new(&f, 3, SPECTRUM_LIMIT).unwrap();
        let v = builtin_variety(&s, Family::Sphere { j: 1 }).unwrap();
        let form = QuadraticForm::sum_of_squares(&f, 3);
        let mut previous: BTreeSet<u32> = BTreeSet::new();
        for size in [0, 2, 5, 9, 14] {
            let e = sample_subset(&v.points, size, seed, trial).unwrap();
            let delta: BTreeSet<u32> = energy::delta_set(&s, &e, &form, k).unwrap().values.into_iter().collect();
            prop_assert!(previous.is_subset(&delta));
            previous = delta;
        }
    }

    #[test]
    fn transform_agrees_with_direct((p, n, d) in field_and_dim(), raw in subset_of(81, 20)) {
        let f = FieldContext::new(p, n).unwrap();
        let s = AffineSpace::new(&f, d, SPECTRUM_LIMIT).unwrap();
        let set: Vec<usize> = raw.into_iter().filter(|&x| x < s.size()).collect();
        let a = spectra::cayley_spectrum_with(&s, &set, SpectrumMethod::Direct).unwrap();
        let b = spectra::cayley_spectrum_with(&s, &set, SpectrumMethod::Transform).unwrap();
        prop_assert!(spectra::max_relative_difference(&a, &b) < 1e-9);
    }

    #[test]
    fn trace_and_parseval((p, n, d) in field_and_dim(), raw in subset_of(81, 20)) {
        let f = FieldContext::new(p, n).unwrap();
        let s = AffineSpace::new(&f, d, SPECTRUM_LIMIT).unwrap();
        let set: Vec<usize> = raw.into_iter().filter(|&x| x < s.size()).collect();
        let sp = spectra::cayley_spectrum(&s, &set).unwrap();
        let n_vertices = s.size() as f64;
        let trace: f64 = sp.eigenvalues().iter().map(|z| z.re).sum();
        let expected = if set.contains(&0) { n_vertices } else { 0.0 };
        prop_assert!((trace - expected).abs() < 1e-7 * n_vertices.max(1.0));
        let energy: f64 = sp.eigenvalues().iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((energy - n_vertices * set.len() as f64).abs() < 1e-7 * n_vertices * (set.len() as f64).max(1.0));
    }

    #[test]
    fn mixing_is_never_violated(
        (p, n, d) in field_and_dim(),
        raw in subset_of(81, 30),
        b in proptest::collection::vec((0usize..81, 1u64..6), 1..25),
        c in proptest::collection::vec((0usize..81, 1u64..6), 1..25),
    ) {
        let f = FieldContext::new(p, n).unwrap();
        let s = AffineSpace::new(&f, d, SPECTRUM_LIMIT).unwrap();
        let size = s.size();
        let set: Vec<usize> = raw.into_iter().filter(|&x| x < size).collect();
        let sp = spectra::cayley_spectrum(&s, &set).unwrap();
        let g = CayleyGraph::new(s, &set).unwrap();
        let b = Multiset::from_counts(b.into_iter().map(|(x, m)| (x % size, m)));
        let c = Multiset::from_counts(c.into_iter().map(|(x, m)| (x % size, m)));
        let audit = spectra::mixing_audit(&sp, &b, &c, &g);
        prop_assert!(audit.holds, "{:?}", audit);
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), trial in any::<u64>(), size in 0usize..=30) {
        let pts: Vec<usize> = (0..30).map(|i| 7 * i + 1).collect();
        let a = sample_subset(&pts, size, seed, trial).unwrap();
        prop_assert_eq!(&a, &sample_subset(&pts, size, seed, trial).unwrap());
        prop_assert_eq!(a.len(), size);
        prop_assert!(a.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(a.iter().all(|x| pts.contains(x)));
    }

    #[test]
    fn character_is_additive(p in prop::sample::select(vec![3u64, 5, 7, 11]), n in 1u32..=2, a in any::<u32>(), b in any::<u32>()) {
        let f = FieldContext::new(p, n).unwrap();
        let (a, b) = (a % f.q(), b % f.q());
        let lhs = f.additive_character(f.add(a, b));
        let rhs = f.additive_character(a) * f.additive_character(b);
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }
}
