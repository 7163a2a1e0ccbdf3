use std::collections::BTreeSet;

use proptest::prelude::*;
use sockdiv::element::times_slots;
use sockdiv::equivariance::cheating_sock_divider;
use sockdiv::model::{is_bundle_isomorphism, trivial_bundle};
use sockdiv::reductions::{
    check_strong_witness, check_weak_witness, choice_from_sock_divider, columns_bundle, mra_from_sock_divider,
    rows_bundle, strong_divisibility_witness, trivialize_with_order, weak_divisibility_witness, LinearOrder,
    PairFamily,
};
use sockdiv::{Bijection, Element, SockBundle};

/// A bundle over `a0..` with `n` socks per fiber, socks named by a shuffle
/// so fibers are not label-contiguous.
fn arb_bundle() -> impl Strategy<Value = SockBundle> {
    (0usize..=4, 1usize..=3)
        .prop_flat_map(|(size, n)| {
            let names: Vec<usize> = (0..size * n).collect();
            (Just(size), Just(n), Just(names).prop_shuffle())
        })
        .prop_map(|(size, n, names)| {
            SockBundle::new(
                n,
                (0..size).map(|k| {
                    (
                        Element::atom(format!("a{k}")),
                        names[k * n..(k + 1) * n].iter().map(|s| Element::atom(format!("x{s}"))).collect(),
                    )
                }),
            )
            .unwrap()
        })
}

/// A bundle with a random order on its base and a random bijection onto
/// the trivial total space.
fn arb_trivialization_input() -> impl Strategy<Value = (SockBundle, LinearOrder, Bijection)> {
    arb_bundle().prop_flat_map(|bundle| {
        let base: Vec<Element> = bundle.base().into_iter().collect();
        let trivial = times_slots(bundle.base(), bundle.arity());
        (Just(bundle), Just(base).prop_shuffle(), Just(trivial).prop_shuffle()).prop_map(|(bundle, order, image)| {
            let f = Bijection::from_pairs(bundle.total_space().into_iter().zip(image)).unwrap();
            (bundle, LinearOrder::new(order).unwrap(), f)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn trivialization_is_an_isomorphism((bundle, order, f) in arb_trivialization_input()) {
        let t = trivialize_with_order(&bundle, &order, &f).unwrap();
        let target = trivial_bundle(bundle.base(), bundle.arity()).unwrap();
        prop_assert!(is_bundle_isomorphism(&t, &bundle, &target).unwrap());
    }

    #[test]
    fn mra_hits_the_trivial_space(bundle in arb_bundle()) {
        let g = mra_from_sock_divider(&bundle, &cheating_sock_divider()).unwrap();
        let target: BTreeSet<Element> = times_slots(bundle.base(), bundle.arity()).into_iter().collect();
        prop_assert!(g.has_sets(&bundle.total_space(), &target));
    }

    #[test]
    fn rows_and_columns_share_socks(bundle in arb_bundle()) {
        let family = PairFamily::new(
            bundle.arity(),
            bundle.base().into_iter().rev().collect(),
            bundle.fibers().iter().map(|(a, f)| (a.clone(), f.iter().cloned().collect())),
        ).unwrap();
        prop_assert_eq!(rows_bundle(&family).total_space(), columns_bundle(&family).total_space());
        let choice = choice_from_sock_divider(&family, &cheating_sock_divider()).unwrap();
        for (i, fiber) in family.pairs() {
            prop_assert!(fiber.contains(choice.get(i).unwrap()));
        }
    }

    #[test]
    fn divisibility_agrees_with_arithmetic(size in 0usize..=20, n in 1usize..=5) {
        let set: BTreeSet<Element> = (0..size).map(|k| Element::atom(format!("q{k}"))).collect();
        let strong = strong_divisibility_witness(&set, n);
        let weak = weak_divisibility_witness(&set, n);
        prop_assert_eq!(strong.is_some(), size % n == 0);
        prop_assert_eq!(weak.is_some(), size % n == 0);
        if let Some(w) = strong {
            prop_assert!(check_strong_witness(&set, n, &w));
            prop_assert!(w.quotient.is_disjoint(&set));
        }
        if let Some(w) = weak {
            prop_assert!(check_weak_witness(&set, n, &w));
        }
    }
}
