use std::collections::BTreeSet;

use proptest::prelude::*;
use sockdiv::equivariance::{
    all_bijections, all_relabelings, check_divider_equivariance, enumerate_shoe_instances, shoe_automorphisms,
    DEFAULT_BUDGET,
};
use sockdiv::shoe::{propose, proposal_stall_witness, shoe_divide, verify_division};
use sockdiv::{apply_relabeling_shoe, Bijection, Element, Relabeling, ShoeInstance};

const SHAPES: [(usize, usize); 9] = [(0, 2), (1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (3, 2), (1, 3), (2, 3)];

fn divide(inst: &ShoeInstance) -> sockdiv::Result<Bijection> {
    shoe_divide(inst).map(|r| r.matching)
}

/// Perfect matchings of the multigraph of `h`, by trying every bijection.
fn perfect_matchings(inst: &ShoeInstance) -> Vec<Bijection> {
    let a: Vec<Element> = inst.a().iter().cloned().collect();
    let b: Vec<Element> = inst.b().iter().cloned().collect();
    all_bijections(&a, &b)
        .filter(|g| g.iter().all(|(x, y)| inst.has_edge(x, y)))
        .collect()
}

#[test]
fn every_small_instance_divides() {
    for (size, n) in SHAPES {
        for inst in enumerate_shoe_instances(size, n, DEFAULT_BUDGET).unwrap() {
            let res = shoe_divide(&inst).unwrap_or_else(|e| panic!("{e} on {}", inst.h()));
            assert!(verify_division(&inst, &res.matching).unwrap());
            assert!(res.rounds <= size * n);
        }
    }
}

#[test]
fn output_is_an_invariant_perfect_matching() {
    for (size, n) in SHAPES {
        for inst in enumerate_shoe_instances(size, n, DEFAULT_BUDGET).unwrap() {
            let autos = shoe_automorphisms(&inst, 8).unwrap();
            let invariant: Vec<Bijection> = perfect_matchings(&inst)
                .into_iter()
                .filter(|g| autos.iter().all(|r| r.transport(g).unwrap() == *g))
                .collect();
            assert!(!invariant.is_empty(), "no invariant matching for {}", inst.h());
            let m = divide(&inst).unwrap();
            assert!(invariant.contains(&m), "{m} is not invariant for {}", inst.h());
        }
    }
}

#[test]
fn n_one_is_read_off_h() {
    for size in 0..=4 {
        for inst in enumerate_shoe_instances(size, 1, DEFAULT_BUDGET).unwrap() {
            let m = divide(&inst).unwrap();
            for a in inst.a() {
                assert_eq!(m.apply(a), Some(inst.image(a, 1).unwrap().0));
            }
        }
    }
}

#[test]
fn equivariant_for_all_relabelings() {
    for (size, n) in [(1, 2), (2, 2), (3, 1), (3, 2), (2, 3)] {
        let family = enumerate_shoe_instances(size, n, DEFAULT_BUDGET).unwrap();
        let report = check_divider_equivariance(divide, family, |i| all_relabelings(i.a(), i.b()));
        assert!(report.is_clean(), "{} violations at ({size},{n})", report.violations.len());
    }
}

#[test]
fn relabeling_is_a_group_action() {
    let family: Vec<_> = enumerate_shoe_instances(2, 2, DEFAULT_BUDGET).unwrap().collect();
    let inst = &family[7];
    let all = all_relabelings(inst.a(), inst.b());
    for r in &all {
        for s in &all {
            let stepwise = apply_relabeling_shoe(&apply_relabeling_shoe(inst, r).unwrap(), s).unwrap();
            let at_once = apply_relabeling_shoe(inst, &s.after(r).unwrap()).unwrap();
            assert_eq!(stepwise, at_once);
        }
    }
}

#[test]
fn proposals_alone_stall_on_some_instances() {
    let stalled: Vec<ShoeInstance> = enumerate_shoe_instances(3, 2, DEFAULT_BUDGET)
        .unwrap()
        .filter(|i| !propose(i).unmatched.is_empty())
        .collect();
    let witness = proposal_stall_witness();
    assert!(stalled.contains(&witness));
    // none of the smaller shapes stall
    for (size, n) in [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (1, 3), (2, 3)] {
        assert!(enumerate_shoe_instances(size, n, DEFAULT_BUDGET)
            .unwrap()
            .all(|i| propose(&i).unmatched.is_empty()));
    }
    println!("proposal stage stalls on {} of 720 (3,2) instances", stalled.len());
}

fn arb_instance() -> impl Strategy<Value = ShoeInstance> {
    (1usize..=6, 1usize..=4)
        .prop_filter("keep it small", |(size, n)| size * n <= 16)
        .prop_flat_map(|(size, n)| {
            let image: Vec<usize> = (0..size * n).collect();
            (Just(size), Just(n), Just(image).prop_shuffle())
        })
        .prop_map(|(size, n, image)| {
            let a = |k: usize| Element::atom(format!("a{k}"));
            let b = |k: usize| Element::atom(format!("b{k}"));
            ShoeInstance::new(
                (0..size).map(a),
                (0..size).map(b),
                n,
                image
                    .into_iter()
                    .enumerate()
                    .map(|(src, dst)| ((a(src / n), src % n + 1), (b(dst / n), dst % n + 1))),
            )
            .unwrap()
        })
}

fn arb_relabeling(inst: &ShoeInstance) -> impl Strategy<Value = Relabeling> {
    let a: Vec<Element> = inst.a().iter().cloned().collect();
    let b: Vec<Element> = inst.b().iter().cloned().collect();
    (Just(a.clone()).prop_shuffle(), Just(b.clone()).prop_shuffle()).prop_map(move |(pa, pb)| {
        Relabeling::new(
            Bijection::from_pairs(a.iter().cloned().zip(pa)).unwrap(),
            Bijection::from_pairs(b.iter().cloned().zip(pb)).unwrap(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn larger_instances_divide_equivariantly(
        (inst, r) in arb_instance().prop_flat_map(|i| { let rs = arb_relabeling(&i); (Just(i), rs) })
    ) {
        let m = divide(&inst).unwrap();
        prop_assert!(verify_division(&inst, &m).unwrap());
        let moved = apply_relabeling_shoe(&inst, &r).unwrap();
        prop_assert_eq!(divide(&moved).unwrap(), r.transport(&m).unwrap());
    }

    #[test]
    fn h_composed_with_inverse_is_identity(inst in arb_instance()) {
        let h = inst.h();
        prop_assert!(h.inverse().compose(h).unwrap().is_identity());
        let darts: BTreeSet<_> = h.domain().cloned().collect();
        prop_assert_eq!(darts.len(), inst.a().len() * inst.n());
    }
}
